"""Dynamical parallelograms and parallelepipeds.

The parallelogram set of a system is the closure in X^4 of the orbit
configurations (x, T^m x, T^n x, T^{m+n} x); the parallelepiped set is
the closure in X^8 of (x, T^m x, T^n x, T^{m+n} x, T^p x, T^{m+p} x,
T^{n+p} x, T^{m+n+p} x).  Vertex v of an octuple carries the shift
b1*m + b2*n + b3*p where (b1, b2, b3) are the bits of v (bit 0 <-> m,
bit 1 <-> n, bit 2 <-> p).

Membership tests are asymmetric by design:

- Parallelogram membership is *exact*: a quadruple is a parallelogram
  iff its projections to the maximal equicontinuous factor satisfy
  pi(v0) - pi(v1) - pi(v2) + pi(v3) = 0 on the torus, so the residual
  of that combination decides membership outright for the distal
  minimal systems implemented here.

- Parallelepiped membership is a one-sided witness search: a small
  residual at horizon H certifies proximity to the closure, while a
  large residual is never a disproof (the closure is not decidable
  from finite data).

The witness search exploits that each vertex of a sampled octuple
depends only on its total shift: the objective for (m, n, p) is a max
of seven table lookups D_v[shift_v], so the whole horizon cube can be
scanned with array arithmetic.  Scan order is by shells of
|m| + |n| + |p| with lexicographic (m, n, p) inside a shell; the search
early-exits at the first witness below ``resid_tol`` and otherwise
returns the global argmin (ties broken by shell order).
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .heisenberg import NilPoint, dist as nil_dist, dist_point
from .systems import (
    SystemSpec,
    TorusPoint,
    rotation_orbit,
    rotation_step,
    torus_dist,
    translate,
    translate_arr,
)

__all__ = [
    "Quad",
    "Oct",
    "CompletionResult",
    "PpedWitness",
    "FacePreconditionError",
    "DEFAULT_HORIZON",
    "DEFAULT_RESID_TOL",
    "DEFAULT_FACE_TOL",
    "DEFAULT_PGRAM_TOL",
    "sample_pgram",
    "sample_pped",
    "pgram_residual",
    "is_pgram",
    "face",
    "COMPLETION_FACES",
    "euclid_perm_quad",
    "euclid_perm_oct",
    "n_square_perms",
    "n_cube_perms",
    "pped_search",
    "pped_residual",
    "pped_complete",
]

DEFAULT_HORIZON = 200
DEFAULT_RESID_TOL = 1e-3
DEFAULT_FACE_TOL = 1e-6
DEFAULT_PGRAM_TOL = 1e-9

#: Cap on explicitly enumerated witness candidates before falling back to
#: the full grid scan.
_CANDIDATE_CAP = 100_000
_GRID_CHUNK = 1 << 21  # target entries per grid chunk


@dataclass(frozen=True)
class Quad:
    """A quadruple of points: a parallelogram candidate."""

    v0: object
    v1: object
    v2: object
    v3: object

    @property
    def vertices(self) -> tuple:
        return (self.v0, self.v1, self.v2, self.v3)


@dataclass(frozen=True)
class Oct:
    """An octuple of points: a parallelepiped candidate."""

    v0: object
    v1: object
    v2: object
    v3: object
    v4: object
    v5: object
    v6: object
    v7: object

    @property
    def vertices(self) -> tuple:
        return (self.v0, self.v1, self.v2, self.v3, self.v4, self.v5, self.v6, self.v7)


@dataclass(frozen=True)
class PpedWitness:
    """Outcome of a parallelepiped witness search."""

    residual: float
    m: int
    n: int
    p: int
    early_exit: bool


@dataclass(frozen=True)
class CompletionResult:
    """Eighth vertex recovered from seven, with uniqueness diagnostics.

    ``spread`` is the largest distance between the returned x7 and the
    completions produced by any witness whose objective is within twice
    the best residual; on systems with a strong parallelepiped
    structure it stays comparable to the residual itself.  ``status``
    is "ok" when the residual beat the tolerance and "inconclusive"
    otherwise (never "not a parallelepiped": the search is one-sided).
    """

    x7: object
    residual: float
    witness_mnp: tuple[int, int, int]
    spread: float
    status: str


class FacePreconditionError(ValueError):
    """A completion input whose named face fails the parallelogram test."""

    def __init__(self, face_name: str, vertex_ids: tuple[int, ...], residual: float, tol: float):
        self.face_name = face_name
        self.vertex_ids = vertex_ids
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"face {face_name} {vertex_ids} has parallelogram residual "
            f"{residual:.3e} >= {tol:.3e}"
        )


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def _advance(spec: SystemSpec, point, n: int):
    if spec.kind == "heisenberg":
        return translate(spec, point, n)
    return rotation_step(spec, point, n)


def sample_pgram(spec: SystemSpec, base, m: int, n: int) -> Quad:
    """The orbit quadruple (x, T^m x, T^n x, T^{m+n} x)."""
    return Quad(
        base,
        _advance(spec, base, m),
        _advance(spec, base, n),
        _advance(spec, base, m + n),
    )


def sample_pped(spec: SystemSpec, base, m: int, n: int, p: int) -> Oct:
    """The orbit octuple with shifts b1*m + b2*n + b3*p at vertex (b1, b2, b3)."""
    shifts = (0, m, n, m + n, p, m + p, n + p, m + n + p)
    return Oct(*(_advance(spec, base, s) for s in shifts))


# ---------------------------------------------------------------------------
# Exact parallelogram test
# ---------------------------------------------------------------------------


def _proj(point) -> np.ndarray:
    """Coordinates of the point's image in the maximal equicontinuous factor."""
    if isinstance(point, NilPoint):
        return np.array([point.x, point.y], dtype=np.float64)
    if isinstance(point, TorusPoint):
        return np.asarray(point.coords, dtype=np.float64)
    raise TypeError(f"unsupported point type {type(point).__name__}")


def _circle_dist(values: np.ndarray) -> float:
    frac = values - np.floor(values)
    return float(np.minimum(frac, 1.0 - frac).max()) if frac.size else 0.0


def pgram_residual(q: Quad) -> float:
    """Torus distance of pi(v0) - pi(v1) - pi(v2) + pi(v3) from zero.

    Zero exactly on parallelograms; for the distal minimal systems here
    a residual below tolerance decides membership.  The combination is
    evaluated as (v0 - v2) - (v1 - v3) so the diagonal and (a, b, a, b)
    patterns cancel exactly in float arithmetic.
    """
    combo = (_proj(q.v0) - _proj(q.v2)) - (_proj(q.v1) - _proj(q.v3))
    return _circle_dist(combo)


def is_pgram(q: Quad, tol: float = DEFAULT_PGRAM_TOL) -> bool:
    return pgram_residual(q) < tol


# ---------------------------------------------------------------------------
# Faces and euclidean permutations
# ---------------------------------------------------------------------------

# axis a of an octuple fixes vertex bit 3 - a, so axis=1 side=0 is the
# bottom quadruple (v0, v1, v2, v3) and axis=3 side=1 is (v1, v3, v5, v7).
_FACE_INDEX = {
    (axis, side): tuple(v for v in range(8) if (v >> (3 - axis)) & 1 == side)
    for axis in (1, 2, 3)
    for side in (0, 1)
}

#: The three faces whose parallelogram property makes seven vertices completable.
COMPLETION_FACES = (
    ("axis1-low", (0, 1, 2, 3)),
    ("axis2-low", (0, 1, 4, 5)),
    ("axis3-low", (0, 2, 4, 6)),
)


def face(o: Oct, axis: int, side: int) -> Quad:
    """The requested combinatorial cube face, vertices in cube order."""
    if axis not in (1, 2, 3) or side not in (0, 1):
        raise ValueError(f"invalid face axis={axis} side={side}")
    verts = o.vertices
    return Quad(*(verts[i] for i in _FACE_INDEX[(axis, side)]))


def _axis_perm_list(k: int) -> list[tuple[int, ...]]:
    return sorted(itertools.permutations(range(k)))


def _label_map(k: int, sigma: tuple[int, ...], refl: int) -> tuple[int, ...]:
    # Output bit j reads input bit sigma[j], then the reflection mask is
    # XORed per output axis.
    out = []
    for v in range(1 << k):
        w = 0
        for j in range(k):
            bit = (v >> sigma[j]) & 1
            bit ^= (refl >> j) & 1
            w |= bit << j
        out.append(w)
    return tuple(out)


def _perm_tables(k: int) -> list[tuple[int, ...]]:
    tables = []
    for sigma in _axis_perm_list(k):
        for refl in range(1 << k):
            tables.append(_label_map(k, sigma, refl))
    return tables


_SQUARE_MAPS = _perm_tables(2)
_CUBE_MAPS = _perm_tables(3)


def n_square_perms() -> int:
    return len(_SQUARE_MAPS)


def n_cube_perms() -> int:
    return len(_CUBE_MAPS)


def _apply_map(vertices: tuple, label_map: tuple[int, ...]):
    out = [None] * len(vertices)
    for v, point in enumerate(vertices):
        out[label_map[v]] = point
    return out


def euclid_perm_quad(q: Quad, perm_id: int) -> Quad:
    """One of the 8 euclidean symmetries of the square acting on vertex labels.

    perm_id = sigma_index * 4 + reflection_mask, with axis permutations
    in lexicographic order; id 0 is the identity.
    """
    if not 0 <= perm_id < len(_SQUARE_MAPS):
        raise ValueError(f"square perm_id must be in [0, {len(_SQUARE_MAPS)}), got {perm_id}")
    return Quad(*_apply_map(q.vertices, _SQUARE_MAPS[perm_id]))


def euclid_perm_oct(o: Oct, perm_id: int) -> Oct:
    """One of the 48 euclidean symmetries of the cube acting on vertex labels.

    perm_id = sigma_index * 8 + reflection_mask, with axis permutations
    in lexicographic order; id 0 is the identity.
    """
    if not 0 <= perm_id < len(_CUBE_MAPS):
        raise ValueError(f"cube perm_id must be in [0, {len(_CUBE_MAPS)}), got {perm_id}")
    return Oct(*_apply_map(o.vertices, _CUBE_MAPS[perm_id]))


# ---------------------------------------------------------------------------
# Parallelepiped witness search
# ---------------------------------------------------------------------------

_VERTEX_BITS = {v: ((v >> 0) & 1, (v >> 1) & 1, (v >> 2) & 1) for v in range(8)}


def _dist_table(spec: SystemSpec, base, target, smax: int) -> np.ndarray:
    """D[s + smax] = distance from T^s base to target, |s| <= smax."""
    ns = np.arange(-smax, smax + 1)
    if spec.kind == "heisenberg":
        pts = translate_arr(spec, base, ns)
        return dist_point(pts, target)
    orbit = rotation_orbit(spec, base, ns)
    delta = orbit - np.asarray(target.coords, dtype=np.float64)
    frac = delta - np.floor(delta)
    return np.minimum(frac, 1.0 - frac).max(axis=-1)


def _build_tables(spec: SystemSpec, base, targets: dict[int, object], horizon: int):
    """Distance tables per vertex, keyed by vertex index; value (offset, D)."""
    tables = {}
    for v, target in targets.items():
        weight = sum(_VERTEX_BITS[v])
        smax = weight * horizon
        tables[v] = (smax, _dist_table(spec, base, target, smax))
    return tables


def _objective(tables, m: int, n: int, p: int) -> float:
    worst = 0.0
    for v, (off, D) in tables.items():
        b1, b2, b3 = _VERTEX_BITS[v]
        s = b1 * m + b2 * n + b3 * p
        d = D[s + off]
        if d > worst:
            worst = d
    return worst


def _order_key(m: int, n: int, p: int) -> tuple[int, int, int, int]:
    return (abs(m) + abs(n) + abs(p), m, n, p)


def _enumerate_below(tables, horizon: int, threshold: float, cap: int):
    """All (m, n, p) with every table lookup below threshold, or None if over cap.

    Sound and complete for 'objective < threshold' because the
    objective is the max of the lookups.
    """
    offs = {v: tables[v][0] for v in tables}
    Ds = {v: tables[v][1] for v in tables}
    span = np.arange(-horizon, horizon + 1)

    def axis_cands(v):
        if v not in tables:
            return span
        off, D = tables[v]
        return span[D[span + off] < threshold]

    m_cands = axis_cands(1)
    n_cands = axis_cands(2)
    p_cands = axis_cands(4)
    if len(m_cands) * len(n_cands) > 4 * cap:
        return None
    out = []
    for m in m_cands:
        m = int(m)
        for n in n_cands:
            n = int(n)
            if 3 in tables and Ds[3][m + n + offs[3]] >= threshold:
                continue
            for p in p_cands:
                p = int(p)
                if 5 in tables and Ds[5][m + p + offs[5]] >= threshold:
                    continue
                if 6 in tables and Ds[6][n + p + offs[6]] >= threshold:
                    continue
                if 7 in tables and Ds[7][m + n + p + offs[7]] >= threshold:
                    continue
                out.append((m, n, p))
                if len(out) > cap:
                    return None
    return out


def _grid_scan(tables, horizon: int, resid_tol: float, workers: int = 1):
    """Exhaustive scan; returns (below_tol_hit, global_argmin).

    Each item is (objective, order_key, (m, n, p)) or None.  The merge
    across chunks minimizes the order key for below-tolerance hits and
    (objective, order key) for the argmin, so the outcome matches the
    sequential shell-order scan regardless of chunking or worker count.
    """
    span = np.arange(-horizon, horizon + 1)
    nspan = len(span)
    mn_chunk = max(1, _GRID_CHUNK // max(nspan * nspan, 1))

    def lookup(v, shift_grid):
        off, D = tables[v]
        return D[shift_grid + off]

    def scan_block(p_block: np.ndarray):
        obj = np.zeros((nspan, nspan, len(p_block)))
        if 1 in tables:
            np.maximum(obj, lookup(1, span)[:, None, None], out=obj)
        if 2 in tables:
            np.maximum(obj, lookup(2, span)[None, :, None], out=obj)
        if 3 in tables:
            np.maximum(obj, lookup(3, span[:, None] + span[None, :])[:, :, None], out=obj)
        if 4 in tables:
            np.maximum(obj, lookup(4, p_block)[None, None, :], out=obj)
        if 5 in tables:
            np.maximum(obj, lookup(5, span[:, None] + p_block[None, :])[:, None, :], out=obj)
        if 6 in tables:
            np.maximum(obj, lookup(6, span[:, None] + p_block[None, :])[None, :, :], out=obj)
        if 7 in tables:
            mn = span[:, None] + span[None, :]
            np.maximum(obj, lookup(7, mn[:, :, None] + p_block[None, None, :]), out=obj)

        def pick(mask):
            idx = np.argwhere(mask)
            if idx.size == 0:
                return None
            ms = span[idx[:, 0]]
            ns = span[idx[:, 1]]
            ps = p_block[idx[:, 2]]
            shell = np.abs(ms) + np.abs(ns) + np.abs(ps)
            i = np.lexsort((ps, ns, ms, shell))[0]
            mnp = (int(ms[i]), int(ns[i]), int(ps[i]))
            val = float(obj[idx[i, 0], idx[i, 1], idx[i, 2]])
            return (val, _order_key(*mnp), mnp)

        below = pick(obj < resid_tol)
        vmin = obj.min()
        argmin = pick(obj == vmin)
        return below, argmin

    blocks = [span[i : i + mn_chunk] for i in range(0, nspan, mn_chunk)]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(scan_block, blocks))
    else:
        results = [scan_block(b) for b in blocks]

    below = min(
        (r[0] for r in results if r[0] is not None),
        key=lambda t: t[1],
        default=None,
    )
    argmin = min(
        (r[1] for r in results if r[1] is not None),
        key=lambda t: (t[0], t[1]),
        default=None,
    )
    return below, argmin


def _search(spec, base, targets, horizon, resid_tol, workers):
    """Shared search core; returns (residual, (m, n, p), early_exit, tables)."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    tables = _build_tables(spec, base, targets, horizon)
    cands = _enumerate_below(tables, horizon, resid_tol, _CANDIDATE_CAP)
    if cands:
        best = min(
            ((_objective(tables, *mnp), _order_key(*mnp), mnp) for mnp in cands),
            key=lambda t: t[1],
        )
        return float(best[0]), best[2], True, tables
    if cands is None:
        below, argmin = _grid_scan(tables, horizon, resid_tol, workers)
        if below is not None:
            return float(below[0]), below[2], True, tables
        return float(argmin[0]), argmin[2], False, tables
    _, argmin = _grid_scan(tables, horizon, resid_tol, workers)
    return float(argmin[0]), argmin[2], False, tables


def pped_search(
    spec: SystemSpec,
    o: Oct,
    horizon: int = DEFAULT_HORIZON,
    resid_tol: float = DEFAULT_RESID_TOL,
    workers: int = 1,
) -> PpedWitness:
    """Witness search for parallelepiped proximity of an octuple.

    Minimizes over (m, n, p) in the horizon cube the max distance from
    the octuple sampled at (m, n, p) from o.v0 to the corresponding
    vertices of o.  Early-exits at the first shell-order witness below
    resid_tol.
    """
    targets = {v: o.vertices[v] for v in range(1, 8)}
    residual, mnp, early, _ = _search(spec, o.v0, targets, horizon, resid_tol, workers)
    return PpedWitness(residual, mnp[0], mnp[1], mnp[2], early)


def pped_residual(
    spec: SystemSpec,
    o: Oct,
    horizon: int = DEFAULT_HORIZON,
    resid_tol: float = DEFAULT_RESID_TOL,
    workers: int = 1,
) -> float:
    """Approximate parallelepiped membership score (one-sided; see module docs)."""
    return pped_search(spec, o, horizon, resid_tol, workers).residual


def pped_complete(
    spec: SystemSpec,
    seven,
    horizon: int = DEFAULT_HORIZON,
    face_tol: float = DEFAULT_FACE_TOL,
    resid_tol: float = DEFAULT_RESID_TOL,
    workers: int = 1,
) -> CompletionResult:
    """Complete seven vertices to a parallelepiped.

    Requires the three low faces spanned by vertices 0..6 to pass the
    exact parallelogram test at face_tol; raises FacePreconditionError
    naming the first failing face otherwise.  The eighth vertex is
    T^{m+n+p} v0 for the witness minimizing the max mismatch on
    vertices 0..6.
    """
    seven = tuple(seven)
    if len(seven) != 7:
        raise ValueError(f"need exactly 7 vertices, got {len(seven)}")
    for name, ids in COMPLETION_FACES:
        quad = Quad(*(seven[i] for i in ids))
        r = pgram_residual(quad)
        if not r < face_tol:
            raise FacePreconditionError(name, ids, r, face_tol)

    targets = {v: seven[v] for v in range(1, 7)}
    residual, mnp, _, tables = _search(spec, seven[0], targets, horizon, resid_tol, workers)
    m, n, p = mnp
    x7 = _advance(spec, seven[0], m + n + p)

    # Uniqueness diagnostic: completions from all witnesses within twice
    # the best residual.
    spread = 0.0
    threshold = max(2.0 * residual, 1e-12)
    near = _enumerate_below(tables, horizon, threshold, cap=4096)
    if near:
        pdist = nil_dist if spec.kind == "heisenberg" else torus_dist
        for cand in near:
            alt = _advance(spec, seven[0], cand[0] + cand[1] + cand[2])
            spread = max(spread, pdist(x7, alt))

    status = "ok" if residual < resid_tol else "inconclusive"
    return CompletionResult(x7, residual, mnp, spread, status)
