"""Command-line front end.

Subcommands:

    generate        write a sequence sample (CSV or JSON)
    regtest         order-1/2 arithmetic-regularity certification
    pgram-test      exact parallelogram membership of a quadruple
    pped-test       parallelepiped witness search for an octuple
    pped-complete   recover the eighth vertex from seven
    rp-search       regional-proximality witness search
    rp2-search      bi-regional-proximality witness search
    rpds-search     strong bi-regional-proximality witness search

Exit codes compose in shell pipelines: 0 = pass/clean, 1 = finding
(violations, non-membership, failed precondition), 2 = usage or
validation error.  Validation always happens before any output is
touched, outputs are written atomically (temp file + rename), and
written reports contain no timing fields, so identical configurations
produce byte-identical outputs regardless of worker count.

A config file (``--config``, ``key = value`` lines, ``#`` comments)
supplies defaults; explicit flags win.  The default worker count comes
from the NILSCOPE_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import cubes, nilsequence, proximality, regularity, systems
from .heisenberg import NilPoint
from .systems import SystemSpec, TorusPoint

EXIT_OK = 0
EXIT_FINDING = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Validation failure; the message names the offending field."""


# ---------------------------------------------------------------------------
# Small plumbing
# ---------------------------------------------------------------------------


def _atomic_write(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=target.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    cfg = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"config: cannot read {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config: line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        cfg[key.replace("-", "_")] = value
    return cfg


class _Resolver:
    """Flag -> config -> default resolution with typed conversion."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self.args = args
        self.config = config

    def get(self, name: str, default, cast):
        value = getattr(self.args, name, None)
        if value is not None:
            return value
        if name in self.config:
            raw = self.config[name]
            try:
                return cast(raw)
            except (TypeError, ValueError):
                raise UsageError(f"{name}: cannot parse config value {raw!r}") from None
        return default

    def require(self, name: str, cast):
        value = self.get(name, None, cast)
        if value is None:
            raise UsageError(f"{name}: required")
        return value


def _parse_bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    if str(raw).lower() in ("1", "true", "yes", "on"):
        return True
    if str(raw).lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_point(raw: str):
    try:
        coords = tuple(float(part) for part in raw.split(","))
    except ValueError:
        raise UsageError(f"point: cannot parse {raw!r} (want comma-separated reals)") from None
    return _point_from_coords(coords)


def _point_from_coords(coords):
    coords = tuple(float(c) for c in coords)
    if any(not (0.0 <= c < 1.0) for c in coords):
        raise UsageError(f"point {coords}: coordinates must lie in [0, 1)")
    if len(coords) == 3:
        return NilPoint(*coords)
    if len(coords) in (1, 2):
        return TorusPoint(coords)
    raise UsageError(f"point {coords}: want 1, 2 or 3 coordinates")


def _point_to_list(point):
    if isinstance(point, NilPoint):
        return list(point.as_tuple())
    return list(point.coords)


def _load_points_file(path: str, expected: int):
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"input: cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"input: {path} is not valid JSON: {exc}") from None
    rows = payload.get("points") if isinstance(payload, dict) else payload
    if not isinstance(rows, list) or len(rows) != expected:
        raise UsageError(f"input: {path}: expected {expected} points")
    points = [_point_from_coords(row) for row in rows]
    kinds = {type(p) for p in points}
    if len(kinds) != 1:
        raise UsageError(f"input: {path}: mixed point dimensions")
    return points


def _load_sequence(path: str) -> nilsequence.SequenceSample:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"input: cannot read {path}: {exc}") from None
    try:
        if path.endswith(".json"):
            return nilsequence.SequenceSample.from_json(text)
        return nilsequence.SequenceSample.from_csv(text)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"input: {path}: {exc}") from None


def _system_from(res: _Resolver) -> SystemSpec:
    kind = res.get("system", "heisenberg", str).replace("-", "_")
    alpha = res.get("alpha", systems.DEFAULT_ALPHA, float)
    beta = res.get("beta", systems.DEFAULT_BETA, float)
    gamma0 = res.get("gamma0", 0.0, float)
    dims = res.get("dims", 2, int)
    try:
        return SystemSpec(kind=kind, alpha=alpha, beta=beta, gamma0=gamma0, dims=dims)
    except ValueError as exc:
        raise UsageError(f"system: {exc}") from None


def _workers_from(res: _Resolver) -> int:
    env = os.environ.get("NILSCOPE_WORKERS")
    default = int(env) if env and env.isdigit() else 1
    workers = res.get("workers", default, int)
    if workers < 1:
        raise UsageError("workers: must be >= 1")
    return workers


def _emit(payload: dict, res: _Resolver, summary: str) -> None:
    out = res.get("out", None, str)
    if out:
        _atomic_write(out, _dump_json(payload))
    if getattr(res.args, "json", False):
        sys.stdout.write(_dump_json(payload))
    else:
        print(summary)


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------


def cmd_generate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    res = _Resolver(args, config)
    observable = res.require("observable", str).replace("-", "_")
    N = res.get("n", 1000, int)
    if N < 1:
        raise UsageError("n: must be >= 1")
    out = res.require("out", str)
    fmt = res.get("format", "json" if out.endswith(".json") else "csv", str)
    if fmt not in ("csv", "json"):
        raise UsageError(f"format: unknown format {fmt!r}")

    if observable == "quadratic_phase":
        alpha = res.get("alpha", math.sqrt(2.0) - 1.0, float)
        sample = nilsequence.quadratic_phase(alpha, N)
    else:
        spec = _system_from(res)
        base_raw = res.get("base", None, str)
        base = _parse_point(base_raw) if base_raw else NilPoint(0.0, 0.0, 0.0)
        if not isinstance(base, NilPoint):
            raise UsageError("base: need 3 coordinates")
        try:
            obs = nilsequence.ObservableSpec(
                kind=observable,
                base=base,
                m_freq=res.get("m_freq", 1, int),
                j_trunc=res.get("j_trunc", 6, int),
                k1=res.get("k1", 1, int),
                k2=res.get("k2", 0, int),
            )
        except ValueError as exc:
            raise UsageError(f"observable: {exc}") from None
        sample = nilsequence.generate(spec, obs, N)

    text = sample.to_json() if fmt == "json" else sample.to_csv()
    _atomic_write(out, text)
    bound = float(np.abs(sample.values).max())
    summary = (
        f"wrote {len(sample.values)} samples (n in [{sample.n_min}, {sample.n_max}]) "
        f"to {out}; observable={observable} max|u|={bound:.6g}"
    )
    if args.json:
        sys.stdout.write(
            _dump_json(
                {
                    "command": "generate",
                    "observable": observable,
                    "rows": len(sample.values),
                    "n_min": sample.n_min,
                    "n_max": sample.n_max,
                    "max_abs": bound,
                    "out": out,
                }
            )
        )
    else:
        print(summary)
    return EXIT_OK


# ---------------------------------------------------------------------------
# regtest
# ---------------------------------------------------------------------------


def _grid_list(raw, cast):
    if isinstance(raw, str):
        parts = [p for p in raw.split(",") if p.strip()]
        return [cast(p) for p in parts]
    return [cast(p) for p in raw]


def cmd_regtest(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    res = _Resolver(args, config)
    u = _load_sequence(res.require("input", str))
    order = res.require("order", int)
    if order not in (1, 2):
        raise UsageError("order: must be 1 or 2")
    eps = res.require("eps", float)
    shift_max = res.get("shift_max", 10, int)
    workers = _workers_from(res)
    k_min = res.get("k_min", None, int)
    k_max = res.get("k_max", None, int)
    k_range = None
    if (k_min is None) != (k_max is None):
        raise UsageError("k_range: give both k_min and k_max or neither")
    if k_min is not None:
        k_range = (k_min, k_max)

    calibrate_mode = bool(args.calibrate) or _parse_bool(config.get("calibrate", False))
    payload: dict = {
        "command": "regtest",
        "order": order,
        "eps": eps,
        "shift_max": shift_max,
        "input_meta": u.meta,
    }
    try:
        if calibrate_mode:
            M_grid = _grid_list(res.get("m_grid", "5,10,25", str), int)
            delta_grid = _grid_list(res.get("delta_grid", "0.02,0.05,0.1", str), float)
            cal = regularity.calibrate(
                u, eps, M_grid, delta_grid, shift_max, order=order, k_range=k_range, workers=workers
            )
            report = cal.report
            payload.update(
                {
                    "calibrate": {"M_grid": M_grid, "delta_grid": delta_grid, "entries": cal.entries},
                    "M": cal.M,
                    "delta": cal.delta,
                }
            )
        else:
            delta = res.require("delta", float)
            M = res.require("m", int)
            params = regularity.RegularityParams(
                order=order, eps=eps, delta=delta, M=M, shift_max=shift_max, k_range=k_range
            )
            report = regularity.run_test(u, params, workers)
            payload.update({"M": M, "delta": delta})
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    payload["report"] = report.to_dict(include_timing=False)
    payload["verdict"] = "pass" if not report.violations else "violations"

    csv_out = res.get("csv", None, str)
    if csv_out:
        lines = ["k,m,n,p,gap"]
        for v in report.violations:
            p_str = "" if v.p is None else str(v.p)
            lines.append(f"{v.k},{v.m},{v.n},{p_str},{v.gap!r}")
        _atomic_write(csv_out, "\n".join(lines) + "\n")

    nviol = len(report.violations)
    summary = (
        f"order-{order} scan: {nviol} violation(s), hypothesis_count="
        f"{report.hypothesis_count}, scanned={report.scanned} tuples, "
        f"k in [{report.k_lo}, {report.k_hi}]"
        + (f", calibrated (M={payload['M']}, delta={payload['delta']})" if calibrate_mode else "")
    )
    _emit(payload, res, summary)
    return EXIT_OK if nviol == 0 else EXIT_FINDING


# ---------------------------------------------------------------------------
# cube commands
# ---------------------------------------------------------------------------


def cmd_pgram_test(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    res = _Resolver(args, config)
    points = _load_points_file(res.require("input", str), 4)
    tol = res.get("tol", cubes.DEFAULT_PGRAM_TOL, float)
    quad = cubes.Quad(*points)
    residual = cubes.pgram_residual(quad)
    member = bool(residual < tol)
    payload = {
        "command": "pgram-test",
        "residual": residual,
        "tol": tol,
        "member": member,
        "points": [_point_to_list(p) for p in points],
    }
    _emit(payload, res, f"pgram residual {residual:.3e} (tol {tol:.1e}): "
          + ("member", "not certified")[not member])
    return EXIT_OK if member else EXIT_FINDING


def cmd_pped_test(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    res = _Resolver(args, config)
    points = _load_points_file(res.require("input", str), 8)
    spec = _system_from(res)
    horizon = res.get("horizon", cubes.DEFAULT_HORIZON, int)
    resid_tol = res.get("resid_tol", cubes.DEFAULT_RESID_TOL, float)
    workers = _workers_from(res)
    if horizon < 1:
        raise UsageError("horizon: must be >= 1")
    witness = cubes.pped_search(spec, cubes.Oct(*points), horizon, resid_tol, workers)
    below = witness.residual < resid_tol
    payload = {
        "command": "pped-test",
        "residual": witness.residual,
        "witness": {"m": witness.m, "n": witness.n, "p": witness.p},
        "early_exit": witness.early_exit,
        "horizon": horizon,
        "resid_tol": resid_tol,
        "below_tol": bool(below),
    }
    _emit(
        payload,
        res,
        f"pped residual {witness.residual:.3e} at (m,n,p)=({witness.m},{witness.n},{witness.p}), "
        f"horizon {horizon}: " + ("witness found" if below else "inconclusive"),
    )
    return EXIT_OK if below else EXIT_FINDING


def cmd_pped_complete(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    res = _Resolver(args, config)
    points = _load_points_file(res.require("input", str), 7)
    spec = _system_from(res)
    horizon = res.get("horizon", cubes.DEFAULT_HORIZON, int)
    face_tol = res.get("face_tol", cubes.DEFAULT_FACE_TOL, float)
    resid_tol = res.get("resid_tol", cubes.DEFAULT_RESID_TOL, float)
    workers = _workers_from(res)
    if horizon < 1:
        raise UsageError("horizon: must be >= 1")
    try:
        result = cubes.pped_complete(spec, points, horizon, face_tol, resid_tol, workers)
    except cubes.FacePreconditionError as exc:
        payload = {
            "command": "pped-complete",
            "error": "face_precondition",
            "face": exc.face_name,
            "vertices": list(exc.vertex_ids),
            "residual": exc.residual,
            "face_tol": exc.tol,
        }
        _emit(payload, res, f"rejected: face {exc.face_name} {exc.vertex_ids} "
              f"residual {exc.residual:.3e} >= {exc.tol:.1e}")
        return EXIT_FINDING
    payload = {
        "command": "pped-complete",
        "x7": _point_to_list(result.x7),
        "residual": result.residual,
        "witness": {"m": result.witness_mnp[0], "n": result.witness_mnp[1], "p": result.witness_mnp[2]},
        "spread": result.spread,
        "status": result.status,
        "horizon": horizon,
        "face_tol": face_tol,
        "resid_tol": resid_tol,
    }
    _emit(
        payload,
        res,
        f"x7 = {_point_to_list(result.x7)} residual {result.residual:.3e} "
        f"spread {result.spread:.3e} [{result.status}]",
    )
    return EXIT_OK if result.status == "ok" else EXIT_FINDING


# ---------------------------------------------------------------------------
# proximality commands
# ---------------------------------------------------------------------------


def _load_pair(res: _Resolver, spec: SystemSpec):
    input_path = res.get("input", None, str)
    x_raw = res.get("x", None, str)
    y_raw = res.get("y", None, str)
    if input_path:
        try:
            payload = json.loads(Path(input_path).read_text())
            x = _point_from_coords(payload["x"])
            y = _point_from_coords(payload["y"])
        except OSError as exc:
            raise UsageError(f"input: cannot read {input_path}: {exc}") from None
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise UsageError(f"input: {input_path}: expected JSON with x, y: {exc}") from None
    elif x_raw and y_raw:
        x = _parse_point(x_raw)
        y = _parse_point(y_raw)
    else:
        raise UsageError("x/y: give --x and --y, or --input pair.json")
    want = NilPoint if spec.kind == "heisenberg" else TorusPoint
    if not isinstance(x, want) or not isinstance(y, want):
        ncoords = "3" if want is NilPoint else f"{spec.dims}"
        raise UsageError(f"x/y: a {spec.kind} system needs {ncoords}-coordinate points")
    return x, y


def _cmd_prox(args: argparse.Namespace, which: str) -> int:
    config = _load_config(args.config)
    res = _Resolver(args, config)
    spec = _system_from(res)
    x, y = _load_pair(res, spec)
    try:
        budget = proximality.SearchBudget(
            n_max=res.get("n_max", proximality.DEFAULT_BUDGET.n_max, int),
            perturb_samples=res.get(
                "perturb_samples", proximality.DEFAULT_BUDGET.perturb_samples, int
            ),
            perturb_radius=res.get(
                "perturb_radius", proximality.DEFAULT_BUDGET.perturb_radius, float
            ),
            time_cap_ms=res.get("time_cap_ms", proximality.DEFAULT_BUDGET.time_cap_ms, int),
        )
    except ValueError as exc:
        raise UsageError(f"budget: {exc}") from None
    seed = res.get("seed", 0, int)
    search = {
        "rp": proximality.rp_search,
        "rp2": proximality.rp2_search,
        "rpds": proximality.rpds_search,
    }[which]
    record = search(spec, x, y, budget, seed)
    payload = {
        "command": f"{which}-search",
        "relation": record.relation,
        "eps_achieved": record.eps_achieved,
        "m": record.m,
        "n": record.n,
        "x_prime": _point_to_list(record.x_prime),
        "y_prime": _point_to_list(record.y_prime),
        "exhausted": record.exhausted,
        "budget": {
            "n_max": budget.n_max,
            "perturb_samples": budget.perturb_samples,
            "perturb_radius": budget.perturb_radius,
            "time_cap_ms": budget.time_cap_ms,
        },
        "seed": seed,
    }
    _emit(
        payload,
        res,
        f"{record.relation}: eps_achieved={record.eps_achieved:.6g} at "
        f"(m,n)=({record.m},{record.n}), exhausted={record.exhausted}",
    )
    return EXIT_OK


def cmd_rp(args):
    return _cmd_prox(args, "rp")


def cmd_rp2(args):
    return _cmd_prox(args, "rp2")


def cmd_rpds(args):
    return _cmd_prox(args, "rpds")


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="key = value config file; flags win")
    sp.add_argument("--json", action="store_true", help="print the JSON payload to stdout")
    sp.add_argument("--out", help="write the JSON payload to this path (atomically)")
    sp.add_argument("--workers", type=int, help="scan workers (default $NILSCOPE_WORKERS or 1)")


def _add_system(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--system", choices=["heisenberg", "torus-rotation"])
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--gamma0", type=float)
    sp.add_argument("--dims", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nilscope",
        description="2-step nilsystem structures: cubes, proximality, regularity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a sequence sample")
    g.add_argument("--observable", required=True,
                   choices=["torus-character", "vertical-theta", "distance-to-base",
                            "quadratic-phase"])
    g.add_argument("--n", type=int, help="window half-length N (indices -N..N)")
    g.add_argument("--format", choices=["csv", "json"])
    g.add_argument("--k1", type=int)
    g.add_argument("--k2", type=int)
    g.add_argument("--m-freq", dest="m_freq", type=int)
    g.add_argument("--j-trunc", dest="j_trunc", type=int)
    g.add_argument("--base", help="x,y,z of the distance observable's base point")
    _add_system(g)
    _add_common(g)
    g.set_defaults(func=cmd_generate, out_required=True)

    r = sub.add_parser("regtest", help="arithmetic-regularity certification")
    r.add_argument("--input", help="sequence file (CSV n,re,im or JSON)")
    r.add_argument("--order", type=int, choices=[1, 2])
    r.add_argument("--eps", type=float)
    r.add_argument("--delta", type=float)
    r.add_argument("--M", dest="m", type=int)
    r.add_argument("--shift-max", dest="shift_max", type=int)
    r.add_argument("--k-min", dest="k_min", type=int)
    r.add_argument("--k-max", dest="k_max", type=int)
    r.add_argument("--calibrate", action="store_true",
                   help="search the (M, delta) grid instead of a single pair")
    r.add_argument("--M-grid", dest="m_grid")
    r.add_argument("--delta-grid", dest="delta_grid")
    r.add_argument("--csv", help="write violations as CSV rows k,m,n,p,gap")
    _add_common(r)
    r.set_defaults(func=cmd_regtest)

    q = sub.add_parser("pgram-test", help="exact parallelogram membership")
    q.add_argument("--input", help="JSON file with 4 points")
    q.add_argument("--tol", type=float)
    _add_common(q)
    q.set_defaults(func=cmd_pgram_test)

    o = sub.add_parser("pped-test", help="parallelepiped witness search")
    o.add_argument("--input", help="JSON file with 8 points")
    o.add_argument("--horizon", type=int)
    o.add_argument("--resid-tol", dest="resid_tol", type=float)
    _add_system(o)
    _add_common(o)
    o.set_defaults(func=cmd_pped_test)

    c = sub.add_parser("pped-complete", help="recover the eighth vertex from seven")
    c.add_argument("--input", help="JSON file with 7 points")
    c.add_argument("--horizon", type=int)
    c.add_argument("--face-tol", dest="face_tol", type=float)
    c.add_argument("--resid-tol", dest="resid_tol", type=float)
    _add_system(c)
    _add_common(c)
    c.set_defaults(func=cmd_pped_complete)

    for name, fn in (("rp-search", cmd_rp), ("rp2-search", cmd_rp2), ("rpds-search", cmd_rpds)):
        s = sub.add_parser(name, help=f"{name.split('-')[0].upper()} witness search")
        s.add_argument("--x", help="x point as x,y,z")
        s.add_argument("--y", help="y point as x,y,z")
        s.add_argument("--input", help="JSON file with fields x, y")
        s.add_argument("--n-max", dest="n_max", type=int)
        s.add_argument("--perturb-samples", dest="perturb_samples", type=int)
        s.add_argument("--perturb-radius", dest="perturb_radius", type=float)
        s.add_argument("--time-cap-ms", dest="time_cap_ms", type=int)
        s.add_argument("--seed", type=int)
        _add_system(s)
        _add_common(s)
        s.set_defaults(func=fn)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if (
            getattr(args, "out_required", False)
            and args.out is None
            and "out" not in _load_config(args.config)
        ):
            parser.error("--out is required")  # exits 2
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
