#!/usr/bin/env python3
"""End-to-end demo: the regularity order of four sequence families.

Each sequence is scanned at a fixed discriminating parameter set
(eps = 0.3, delta = 0.3, M = 1) at both orders, plus a tight order-1
scan (delta = 0.1) where almost periodic sequences shine.  "support"
counts hypothesis-satisfying (k, shifts) tuples; "trivial" is the count
contributed by all-zero shifts alone, so support > trivial means the
verdict is backed by genuine near-return structure:

- rotation character: almost periodic; clean order-1 at the tight delta
  with large support (the loose delta is miscalibrated for any order).
- vertical theta on the Heisenberg system: violates order 1 at both
  deltas, clean at order 2 with non-trivial support.
- quadratic phase: same signature (2-step but not almost periodic).
- seeded pseudorandom: breaks order 1 as soon as delta admits a
  non-trivial tuple; delta around 1 breaks order 2 as well (see the
  regularity tests).

Usage:
    python scripts/certify_demo.py [--n 2000] [--shift-max 60]
"""

from __future__ import annotations

import argparse
import math

import numpy as np

from nilscope import nilsequence as ns
from nilscope import regularity as rg
from nilscope import systems as sy


def cell(u, order, eps, delta, M, shift_max):
    params = rg.RegularityParams(order=order, eps=eps, delta=delta, M=M, shift_max=shift_max)
    rep = rg.run_test(u, params)
    trivial = rep.k_hi - rep.k_lo + 1
    tag = "clean" if not rep.violations else f"{len(rep.violations)} viol"
    support = "supported" if rep.hypothesis_count > trivial else "trivial-only"
    return f"{tag:>12} ({support}, hyp={rep.hypothesis_count})"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=2000)
    parser.add_argument("--shift-max", type=int, default=60)
    parser.add_argument("--eps", type=float, default=0.3)
    args = parser.parse_args()

    heis = sy.default_heisenberg()
    rot = sy.SystemSpec(kind="torus_rotation", alpha=heis.alpha, beta=heis.beta)

    rng = np.random.default_rng(20260809)
    noise = rng.uniform(-1, 1, 2 * args.n + 1) + 1j * rng.uniform(-1, 1, 2 * args.n + 1)
    noise /= np.maximum(1.0, np.abs(noise))

    cases = [
        (
            "rotation character",
            ns.generate(rot, ns.ObservableSpec(kind="torus_character", k1=1, k2=0), args.n),
        ),
        (
            "vertical theta",
            ns.generate(heis, ns.ObservableSpec(kind="vertical_theta", m_freq=1), args.n),
        ),
        ("quadratic phase", ns.quadratic_phase(math.sqrt(2) - 1, args.n)),
        ("pseudorandom", ns.SequenceSample(values=noise, n_min=-args.n)),
    ]

    eps, S = args.eps, args.shift_max
    print(f"eps={eps}, shift_max={S}, N={args.n}")
    for name, u in cases:
        print(f"\n{name}:")
        print(f"  order 1, delta=0.1, M=1: {cell(u, 1, eps, 0.1, 1, S)}")
        print(f"  order 1, delta=0.3, M=1: {cell(u, 1, eps, 0.3, 1, S)}")
        print(f"  order 2, delta=0.3, M=1: {cell(u, 2, eps, 0.3, 1, S)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
