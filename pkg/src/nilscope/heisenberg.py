"""Exact arithmetic for the 3-dimensional Heisenberg group and its nilmanifold.

The group G is R^3 with the polarized product

    (x, y, z) * (x', y', z') = (x + x', y + y', z + z' + x*y'),

a 2-step nilpotent Lie group whose commutator subgroup G2 = {(0, 0, z)}
coincides with the center.  The integer points form a discrete cocompact
lattice Gamma, and the compact quotient X = G/Gamma is the simplest
nilmanifold that is not a torus.  Points of X are kept as the unique
right-coset representative with all coordinates in [0, 1).

The distance on X is a right-invariant gauge: for canonical representatives
p, q we minimize the symmetrized box norm

    ||(x, y, z)||_sym = max(|x|, |y|, |z - x*y/2|)

of p * (q * gamma)^{-1} over lattice elements gamma with coordinates in
{-LATTICE_WINDOW, ..., LATTICE_WINDOW}^3.  The symmetrized central
coordinate makes ||g|| = ||g^{-1}|| exact, so the gauge is symmetric.  It
separates points, is continuous, and is compatible with the quotient
topology, which is all the regional-proximality machinery needs.  It is
*not* a geodesic metric and the triangle inequality is not relied upon
anywhere.  Left translation (the dynamics) is deliberately not an isometry
of this gauge.

Scalar operations work on the frozen dataclasses below; the ``*_arr``
variants operate on (..., 3) float arrays for the scan engines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "GroupElement",
    "NilPoint",
    "IDENTITY",
    "LATTICE_WINDOW",
    "mul",
    "inv",
    "commutator",
    "reduce",
    "dist",
    "sym_norm",
    "mul_arr",
    "inv_arr",
    "reduce_arr",
    "dist_arr",
    "dist_point",
]

#: Half-width of the lattice window scanned when evaluating the gauge.
LATTICE_WINDOW = 2


@dataclass(frozen=True)
class GroupElement:
    """A Heisenberg group element in global (x, y, z) coordinates."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError("group element coordinates must be finite")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class NilPoint:
    """A point of X = G/Gamma as its canonical representative in [0, 1)^3."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for c in (self.x, self.y, self.z):
            if not (0.0 <= c < 1.0):
                raise ValueError(f"NilPoint coordinate {c!r} outside [0, 1)")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def as_group(self) -> GroupElement:
        return GroupElement(self.x, self.y, self.z)


IDENTITY = GroupElement(0.0, 0.0, 0.0)

# Largest double strictly below 1.0; used to keep half-open reduction
# half-open when a coordinate rounds up to exactly 1.0.
_BELOW_ONE = math.nextafter(1.0, 0.0)


def mul(a: GroupElement, b: GroupElement) -> GroupElement:
    """Group product a * b."""
    return GroupElement(a.x + b.x, a.y + b.y, a.z + b.z + a.x * b.y)


def inv(a: GroupElement) -> GroupElement:
    """Group inverse; mul(a, inv(a)) is the identity exactly in real arithmetic."""
    return GroupElement(-a.x, -a.y, -a.z + a.x * a.y)


def commutator(a: GroupElement, b: GroupElement) -> GroupElement:
    """Commutator a b a^-1 b^-1, always central.

    Evaluated in closed form so the abelianized coordinates are exactly
    zero regardless of rounding in the inputs.
    """
    return GroupElement(0.0, 0.0, a.x * b.y - a.y * b.x)


def _wrap_unit(v: float) -> float:
    """Fractional part in [0, 1), guarding the float that rounds to 1.0."""
    w = v - math.floor(v)
    if w >= 1.0:
        # v sits within half an ulp below an integer; keep the half-open
        # invariant with the closest representable value below 1.
        return _BELOW_ONE
    return w


def reduce(g: GroupElement) -> NilPoint:
    """Canonical right-coset representative of g modulo the integer lattice.

    Right-multiplying by gamma = (a, b, c) sends (x, y, z) to
    (x + a, y + b, z + c + x*b), so a = -floor(x), b = -floor(y) and then
    c = -floor(z + x*b) land every coordinate in [0, 1).
    """
    a = -math.floor(g.x)
    b = -math.floor(g.y)
    x = g.x + a
    y = g.y + b
    z1 = g.z + g.x * b
    c = -math.floor(z1)
    z = z1 + c
    if x >= 1.0:
        x = _BELOW_ONE
    if y >= 1.0:
        y = _BELOW_ONE
    if z >= 1.0:
        z = _BELOW_ONE
    return NilPoint(x, y, z)


def sym_norm(g: GroupElement) -> float:
    """Symmetrized box gauge max(|x|, |y|, |z - xy/2|); equals sym_norm(inv(g))."""
    return max(abs(g.x), abs(g.y), abs(g.z - 0.5 * g.x * g.y))


# Lattice window used by the gauge, as an array of shape (W, 3).
_LATTICE = np.array(
    [
        (a, b, c)
        for a in range(-LATTICE_WINDOW, LATTICE_WINDOW + 1)
        for b in range(-LATTICE_WINDOW, LATTICE_WINDOW + 1)
        for c in range(-LATTICE_WINDOW, LATTICE_WINDOW + 1)
    ],
    dtype=np.float64,
)


def dist(p: NilPoint, q: NilPoint) -> float:
    """Gauge distance on X: min over the lattice window of the symmetrized norm."""
    return float(dist_point(np.array([p.as_tuple()]), q)[0])


# ---------------------------------------------------------------------------
# Array kernels.  Shapes are (..., 3); the formulas mirror the scalar ops.
# ---------------------------------------------------------------------------


def mul_arr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Group product on (..., 3) arrays (broadcasting)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    out = np.empty(np.broadcast_shapes(a.shape, b.shape), dtype=np.float64)
    out[..., 0] = a[..., 0] + b[..., 0]
    out[..., 1] = a[..., 1] + b[..., 1]
    out[..., 2] = a[..., 2] + b[..., 2] + a[..., 0] * b[..., 1]
    return out


def inv_arr(a: np.ndarray) -> np.ndarray:
    """Group inverse on (..., 3) arrays."""
    a = np.asarray(a, dtype=np.float64)
    out = np.empty_like(a)
    out[..., 0] = -a[..., 0]
    out[..., 1] = -a[..., 1]
    out[..., 2] = -a[..., 2] + a[..., 0] * a[..., 1]
    return out


def reduce_arr(g: np.ndarray) -> np.ndarray:
    """Canonical representatives of (..., 3) group elements."""
    g = np.asarray(g, dtype=np.float64)
    x0 = g[..., 0]
    y0 = g[..., 1]
    b = -np.floor(y0)
    z1 = g[..., 2] + x0 * b
    out = np.empty_like(g)
    out[..., 0] = x0 - np.floor(x0)
    out[..., 1] = y0 + b
    out[..., 2] = z1 - np.floor(z1)
    # Same half-open guard as the scalar path.
    np.copyto(out, _BELOW_ONE, where=out >= 1.0)
    return out


def _sym_norm_arr(g: np.ndarray) -> np.ndarray:
    n = np.abs(g[..., 2] - 0.5 * g[..., 0] * g[..., 1])
    np.maximum(n, np.abs(g[..., 0]), out=n)
    np.maximum(n, np.abs(g[..., 1]), out=n)
    return n


def dist_arr(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Pairwise gauge distance between (..., 3) canonical-coordinate arrays."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    qg = mul_arr(q[..., None, :], _LATTICE)          # (..., W, 3)
    u = mul_arr(p[..., None, :], inv_arr(qg))        # (..., W, 3)
    return _sym_norm_arr(u).min(axis=-1)


def dist_point(points: np.ndarray, q: NilPoint) -> np.ndarray:
    """Gauge distance from each row of an (N, 3) array to a fixed point."""
    qrow = np.array(q.as_tuple(), dtype=np.float64)
    return dist_arr(np.asarray(points, dtype=np.float64), qrow)
