"""Witness searches for the regionally proximal relations.

Two points are regionally proximal (RP) when arbitrarily small
perturbations x', y' of them can be brought epsilon-close by a common
power of T; bi-regional proximality (RP2) asks for closeness at the
three times m, n and m+n simultaneously, and the strong variant (RPDS)
asks for both orbits to return epsilon-close to the *unperturbed* y at
those three times.  On the Heisenberg system RP identifies exactly the
fibers of the projection to the maximal equicontinuous factor, while
RP2 is the identity, so distinct points exhibit a strictly positive
empirical floor.  On torus rotations all three relations are trivial
and every distance is shift-invariant, which makes rotations the
reference case for floor calibration.

A search minimizes, over a deterministic low-discrepancy set of
perturbations and all time shifts within the budget, the max of the
defining distances of the relation.  The minimum is an upper bound on
the true infimum: small values are witnesses, large values are
empirical floors, never proofs of failure.

Determinism: the perturbation offsets are a Halton point set in group
coordinates scaled to the perturbation radius, shared between the two
base points, so records are reproducible and the objective is symmetric
in (x, y).  The scanned set grows with n_max, perturb_samples and
time_cap_ms, and best-so-far retention makes eps_achieved nonincreasing
in those components; enlarging perturb_radius grows the searched region
but reshapes the finite sample, so monotonicity in the radius holds
only up to sampling resolution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .cubes import Oct
from .heisenberg import NilPoint, dist_arr, mul_arr, reduce_arr
from .systems import SystemSpec, TorusPoint, rotation_orbit, rotation_step, translate, translate_arr

__all__ = [
    "SearchBudget",
    "WitnessRecord",
    "DEFAULT_BUDGET",
    "rp_search",
    "rp2_search",
    "rpds_search",
    "witness_to_cube",
]

_HALTON_PRIMES = (2, 3, 5)
_SEED_STRIDE = 1 << 20


@dataclass(frozen=True)
class SearchBudget:
    """Scan bounds for a proximality witness search."""

    n_max: int = 200
    perturb_samples: int = 16
    perturb_radius: float = 0.05
    time_cap_ms: int = 60_000

    def __post_init__(self):
        if self.n_max <= 0 or self.perturb_samples <= 0:
            raise ValueError("n_max and perturb_samples must be positive")
        if self.perturb_samples >= _SEED_STRIDE:
            raise ValueError(f"perturb_samples must be below {_SEED_STRIDE}")
        if not self.perturb_radius > 0:
            raise ValueError("perturb_radius must be positive")
        if self.time_cap_ms <= 0:
            raise ValueError("time_cap_ms must be positive")


DEFAULT_BUDGET = SearchBudget()


@dataclass(frozen=True)
class WitnessRecord:
    """Best witness found by a proximality search.

    ``eps_achieved`` is the minimized max of the relation's defining
    distances; ``exhausted`` records whether the full budget was
    scanned (False when the time cap cut the scan short).  For RP the
    single time shift is reported in ``n`` and ``m`` is 0.
    """

    eps_achieved: float
    m: int
    n: int
    x_prime: object
    y_prime: object
    relation: str
    exhausted: bool


def _halton(index: np.ndarray, base: int) -> np.ndarray:
    result = np.zeros(index.shape, dtype=np.float64)
    f = 1.0
    i = index.astype(np.int64).copy()
    while np.any(i > 0):
        f /= base
        result += f * (i % base)
        i //= base
    return result


def _halton_cube(k: int, seed: int, dims: int) -> np.ndarray:
    # Fixed stride keeps the stream a prefix of itself as k grows, so
    # enlarging perturb_samples only ever extends the scanned set.
    idx = np.arange(1, k) + seed * _SEED_STRIDE
    return np.stack([_halton(idx, p) for p in _HALTON_PRIMES[:dims]], axis=-1)


def _circle_rows(delta: np.ndarray) -> np.ndarray:
    frac = delta - np.floor(delta)
    return np.minimum(frac, 1.0 - frac).max(axis=-1)


class _NilOps:
    """Heisenberg-side geometry for the scan driver."""

    point_type = NilPoint

    def __init__(self, spec: SystemSpec):
        self.spec = spec

    def offsets(self, budget: SearchBudget, seed: int) -> np.ndarray:
        # Points fill the gauge ball of the perturbation radius: the
        # cube [-r, r]^3 in (dx, dy, dz') with the central coordinate
        # polarized as dz = dz' + dx*dy/2, so each offset has
        # symmetrized norm at most r.
        cube = _halton_cube(budget.perturb_samples, seed, 3)
        pts = (2.0 * cube - 1.0) * budget.perturb_radius
        pts[..., 2] += 0.5 * pts[..., 0] * pts[..., 1]
        return np.vstack([np.zeros((1, 3)), pts])

    def perturb(self, point: NilPoint, offsets: np.ndarray) -> np.ndarray:
        base = np.array(point.as_tuple(), dtype=np.float64)
        return reduce_arr(mul_arr(offsets, base))

    def orbit(self, coords: np.ndarray, ns: np.ndarray) -> np.ndarray:
        return translate_arr(self.spec, self.to_point(coords), ns)

    def dist_rows(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return dist_arr(a, b)

    def dist_to_point(self, coords: np.ndarray, point: NilPoint) -> np.ndarray:
        return dist_arr(coords, np.array(point.as_tuple(), dtype=np.float64))

    def to_point(self, row: np.ndarray) -> NilPoint:
        return NilPoint(*(float(c) for c in row))

    def translate(self, point, n: int):
        return translate(self.spec, point, n)

    def point_dist(self, p, q) -> float:
        from .heisenberg import dist

        return dist(p, q)


class _TorusOps:
    """Rotation-side geometry: flat sup metric, isometric dynamics."""

    point_type = TorusPoint

    def __init__(self, spec: SystemSpec):
        self.spec = spec
        self.dims = spec.dims

    def offsets(self, budget: SearchBudget, seed: int) -> np.ndarray:
        cube = _halton_cube(budget.perturb_samples, seed, self.dims)
        pts = (2.0 * cube - 1.0) * budget.perturb_radius
        return np.vstack([np.zeros((1, self.dims)), pts])

    def perturb(self, point: TorusPoint, offsets: np.ndarray) -> np.ndarray:
        coords = np.asarray(point.coords, dtype=np.float64) + offsets
        coords -= np.floor(coords)
        coords[coords >= 1.0] = 0.0
        return coords

    def orbit(self, coords: np.ndarray, ns: np.ndarray) -> np.ndarray:
        return rotation_orbit(self.spec, self.to_point(coords), ns)

    def dist_rows(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return _circle_rows(a - b)

    def dist_to_point(self, coords: np.ndarray, point: TorusPoint) -> np.ndarray:
        return _circle_rows(coords - np.asarray(point.coords, dtype=np.float64))

    def to_point(self, row: np.ndarray) -> TorusPoint:
        return TorusPoint(tuple(float(c) for c in row))

    def translate(self, point, n: int):
        return rotation_step(self.spec, point, n)

    def point_dist(self, p, q) -> float:
        from .systems import torus_dist

        return torus_dist(p, q)


def _ops_for(spec: SystemSpec):
    return _NilOps(spec) if spec.kind == "heisenberg" else _TorusOps(spec)


def _check_points(ops, x, y) -> None:
    for name, p in (("x", x), ("y", y)):
        if not isinstance(p, ops.point_type):
            raise ValueError(
                f"{name} must be a {ops.point_type.__name__} for a {ops.spec.kind} system"
            )


def _pair_order(bx: np.ndarray, by: np.ndarray):
    """(i, j) pairs sorted by max(bx[i], by[j]) with deterministic ties."""
    K = len(bx)
    ii, jj = np.meshgrid(np.arange(K), np.arange(K), indexing="ij")
    ii = ii.ravel()
    jj = jj.ravel()
    base = np.maximum(bx[ii], by[jj])
    order = np.lexsort((jj, ii, base))
    return ii[order], jj[order], base[order]


def _min_grid_2d(f_m: np.ndarray, f_sum: np.ndarray, n_max: int):
    """Minimize max(f_m[m], f_m[n], f_sum[m+n]) over the (m, n) square.

    ``f_m`` covers shifts [-n_max, n_max]; ``f_sum`` covers
    [-2 n_max, 2 n_max].  Ties resolve by (|m| + |n|, m, n).
    """
    span = np.arange(-n_max, n_max + 1)
    grid = np.maximum(f_m[:, None], f_m[None, :])
    np.maximum(grid, f_sum[(span[:, None] + span[None, :]) + 2 * n_max], out=grid)
    vmin = grid.min()
    idx = np.argwhere(grid == vmin)
    ms = span[idx[:, 0]]
    ns = span[idx[:, 1]]
    shell = np.abs(ms) + np.abs(ns)
    i = np.lexsort((ns, ms, shell))[0]
    return float(vmin), int(ms[i]), int(ns[i])


def _run_search(ops, x, y, budget, seed, relation, pair_objective):
    """Shared scan driver: perturbation pairs in base-cost order, best-so-far."""
    deadline = time.monotonic() + budget.time_cap_ms / 1000.0
    offsets = ops.offsets(budget, seed)
    xp = ops.perturb(x, offsets)
    yp = ops.perturb(y, offsets)
    bx = ops.dist_to_point(xp, x)
    by = ops.dist_to_point(yp, y)
    ii, jj, base = _pair_order(bx, by)

    best = None  # (eps, m, n, i, j)
    exhausted = True
    for i, j, b in zip(ii, jj, base):
        if best is not None and b >= best[0]:
            break
        if time.monotonic() > deadline:
            exhausted = False
            break
        inner, m, n = pair_objective(int(i), int(j))
        eps = max(float(b), inner)
        if best is None or eps < best[0]:
            best = (eps, m, n, int(i), int(j))

    eps, m, n, i, j = best
    return WitnessRecord(
        eps_achieved=eps,
        m=m,
        n=n,
        x_prime=ops.to_point(xp[i]),
        y_prime=ops.to_point(yp[j]),
        relation=relation,
        exhausted=exhausted,
    )


def rp_search(
    spec: SystemSpec,
    x,
    y,
    budget: SearchBudget = DEFAULT_BUDGET,
    seed: int = 0,
) -> WitnessRecord:
    """Regional-proximality witness: one common shift n brings x', y' together."""
    ops = _ops_for(spec)
    _check_points(ops, x, y)
    N = budget.n_max
    ns = np.arange(-N, N + 1)
    offsets = ops.offsets(budget, seed)
    xp = ops.perturb(x, offsets)
    yp = ops.perturb(y, offsets)
    orbit_cache_x: dict[int, np.ndarray] = {}
    orbit_cache_y: dict[int, np.ndarray] = {}

    def objective(i: int, j: int):
        if i not in orbit_cache_x:
            orbit_cache_x[i] = ops.orbit(xp[i], ns)
        if j not in orbit_cache_y:
            orbit_cache_y[j] = ops.orbit(yp[j], ns)
        d = ops.dist_rows(orbit_cache_x[i], orbit_cache_y[j])
        vmin = d.min()
        ties = np.flatnonzero(d == vmin)
        shifts = ns[ties]
        k = np.lexsort((shifts, np.abs(shifts)))[0]
        return float(vmin), 0, int(shifts[k])

    return _run_search(ops, x, y, budget, seed, "RP", objective)


def rp2_search(
    spec: SystemSpec,
    x,
    y,
    budget: SearchBudget = DEFAULT_BUDGET,
    seed: int = 0,
) -> WitnessRecord:
    """Bi-regional-proximality witness: closeness at times m, n and m+n."""
    ops = _ops_for(spec)
    _check_points(ops, x, y)
    N = budget.n_max
    span2 = np.arange(-2 * N, 2 * N + 1)
    offsets = ops.offsets(budget, seed)
    xp = ops.perturb(x, offsets)
    yp = ops.perturb(y, offsets)
    orbit_cache_x: dict[int, np.ndarray] = {}
    orbit_cache_y: dict[int, np.ndarray] = {}

    def orbit(cache, coords_arr, idx):
        if idx not in cache:
            cache[idx] = ops.orbit(coords_arr[idx], span2)
        return cache[idx]

    def objective(i: int, j: int):
        f = ops.dist_rows(orbit(orbit_cache_x, xp, i), orbit(orbit_cache_y, yp, j))
        f_m = f[N : 3 * N + 1]  # restrict to |s| <= n_max
        vmin, m, n = _min_grid_2d(f_m, f, N)
        return vmin, m, n

    return _run_search(ops, x, y, budget, seed, "RP2", objective)


def rpds_search(
    spec: SystemSpec,
    x,
    y,
    budget: SearchBudget = DEFAULT_BUDGET,
    seed: int = 0,
) -> WitnessRecord:
    """Strong bi-regional-proximality witness: returns to y itself.

    Both perturbed orbits must pass epsilon-close to the unperturbed y
    at times m, n and m+n, so the per-shift cost is the pointwise max
    of the two return distances.
    """
    ops = _ops_for(spec)
    _check_points(ops, x, y)
    N = budget.n_max
    span2 = np.arange(-2 * N, 2 * N + 1)
    offsets = ops.offsets(budget, seed)
    xp = ops.perturb(x, offsets)
    yp = ops.perturb(y, offsets)
    return_cache_x: dict[int, np.ndarray] = {}
    return_cache_y: dict[int, np.ndarray] = {}

    def returns(cache, coords_arr, idx):
        if idx not in cache:
            cache[idx] = ops.dist_to_point(ops.orbit(coords_arr[idx], span2), y)
        return cache[idx]

    def objective(i: int, j: int):
        g = np.maximum(returns(return_cache_x, xp, i), returns(return_cache_y, yp, j))
        g_m = g[N : 3 * N + 1]
        vmin, m, n = _min_grid_2d(g_m, g, N)
        return vmin, m, n

    return _run_search(ops, x, y, budget, seed, "RPDS", objective)


def witness_to_cube(
    record: WitnessRecord,
    spec: SystemSpec,
    x=None,
    y=None,
) -> tuple[Oct, float]:
    """Assemble the octuple (x, y, a, a, b, b, c, c) from an RP2 witness.

    The proxies are a = T^m x', b = T^n x', c = T^{m+n} x'.  The
    returned residual is the max vertexwise distance between the
    octuple and the configuration the witness certifies, namely
    (x', y', T^m x', T^m y', T^n x', T^n y', T^{m+n} x', T^{m+n} y');
    it is bounded by the witness distances, hence at most
    8 * eps_achieved.  Callers wanting an independent membership score
    can run cubes.pped_search on the octuple.
    """
    if record.relation != "RP2":
        raise ValueError(f"witness_to_cube needs an RP2 record, got {record.relation}")
    ops = _ops_for(spec)
    xp, yp = record.x_prime, record.y_prime
    x0 = x if x is not None else xp
    y0 = y if y is not None else yp
    m, n = record.m, record.n
    a = ops.translate(xp, m)
    b = ops.translate(xp, n)
    c = ops.translate(xp, m + n)
    oct_ = Oct(x0, y0, a, a, b, b, c, c)
    certified = (
        xp,
        yp,
        a,
        ops.translate(yp, m),
        b,
        ops.translate(yp, n),
        c,
        ops.translate(yp, m + n),
    )
    residual = max(ops.point_dist(u, v) for u, v in zip(oct_.vertices, certified))
    return oct_, float(residual)
