#!/usr/bin/env python3
"""Survey bi-regional-proximality floors on distinct point pairs.

On a 2-step nilsystem the bi-regionally-proximal relation is the
identity, so distinct points should exhibit eps floors that do not
collapse as the scan budget grows.  This script runs rp2_search on a
fixed set of seeded pairs at a doubling ladder of n_max budgets and
writes the floors as JSON.  The committed copy under tests/data/ is
the pinned expectation the acceptance suite replays.

Usage:
    python scripts/rp2_floor_survey.py [--out tests/data/rp2_floors.json]
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from nilscope import heisenberg as h
from nilscope import proximality as px
from nilscope import systems as sy

N_PAIRS = 20
N_MAX_LADDER = (25, 50, 100)
PERTURB_SAMPLES = 6
PERTURB_RADIUS = 0.03
SEED = 977


def survey_pairs():
    rng = np.random.default_rng(SEED)
    pairs = []
    while len(pairs) < N_PAIRS:
        x = h.NilPoint(*rng.random(3))
        y = h.NilPoint(*rng.random(3))
        if h.dist(x, y) > 0.05:
            pairs.append((x, y))
    return pairs


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="tests/data/rp2_floors.json")
    args = parser.parse_args()

    spec = sy.default_heisenberg()
    rows = []
    for x, y in survey_pairs():
        d0 = h.dist(x, y)
        floors = []
        for n_max in N_MAX_LADDER:
            budget = px.SearchBudget(
                n_max=n_max,
                perturb_samples=PERTURB_SAMPLES,
                perturb_radius=PERTURB_RADIUS,
            )
            floors.append(px.rp2_search(spec, x, y, budget).eps_achieved)
        rows.append(
            {
                "x": list(x.as_tuple()),
                "y": list(y.as_tuple()),
                "d0": d0,
                "floors": floors,
            }
        )
        print(f"d0={d0:.4f}  floors=" + "  ".join(f"{f:.5f}" for f in floors))

    payload = {
        "seed": SEED,
        "n_max_ladder": list(N_MAX_LADDER),
        "perturb_samples": PERTURB_SAMPLES,
        "perturb_radius": PERTURB_RADIUS,
        "pairs": rows,
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    worst = min(r["floors"][-1] / r["d0"] for r in rows)
    print(f"wrote {out}; worst floor/d0 ratio at largest budget: {worst:.3f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
