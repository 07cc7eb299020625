"""Dynamical systems on the Heisenberg nilmanifold and on tori.

A system is translation by a fixed element: on X = G/Gamma the map
T(p) = reduce(t * p) with t = (alpha, beta, gamma0), and on the
d-torus the rotation p -> p + (alpha, beta, ...) mod 1.  The torus
rotation doubles as the maximal equicontinuous factor of the
Heisenberg system: forgetting the central coordinate is a factor map
onto the 2-torus rotation by (alpha, beta), and the fibers of that
projection are exactly the central circles.

Powers of the translation have the closed form

    t^n = (n a, n b, n c + n(n-1)/2 * a b)

valid for every integer n (it matches inv(t^{-n}) for n < 0), so long
orbits never accumulate iteration drift.

Default parameters alpha = sqrt(2)-1, beta = sqrt(3)-1 make 1, alpha,
beta rationally independent at machine precision, hence a minimal base
rotation and a minimal nilsystem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .heisenberg import (
    GroupElement,
    NilPoint,
    inv,
    mul,
    mul_arr,
    reduce,
    reduce_arr,
)

__all__ = [
    "SystemSpec",
    "TorusPoint",
    "DEFAULT_ALPHA",
    "DEFAULT_BETA",
    "default_heisenberg",
    "step",
    "translate",
    "orbit_point",
    "orbit_points_arr",
    "translate_arr",
    "factor_pi",
    "rotation_step",
    "rotation_orbit",
    "torus_dist",
    "point_dist",
]

DEFAULT_ALPHA = math.sqrt(2.0) - 1.0
DEFAULT_BETA = math.sqrt(3.0) - 1.0

#: Denominator bound for the rational-dependence diagnostic.
_RATIONAL_DENOM_BOUND = 10**6


def _near_rational(value: float) -> bool:
    """True when a bounded-denominator fraction explains value to far below 1/q^2.

    Continued-fraction convergents of a generic irrational approximate it
    to about 1/q^2, so only errors much smaller than that scale signal a
    genuine rational value (up to machine fuzz).
    """
    if not math.isfinite(value):
        return False
    approx = Fraction(value).limit_denominator(_RATIONAL_DENOM_BOUND)
    q = approx.denominator
    return abs(value - float(approx)) < 1e-6 / (q * q)


@dataclass(frozen=True)
class TorusPoint:
    """A point of the d-torus with componentwise canonical coordinates in [0, 1)."""

    coords: tuple[float, ...]

    def __post_init__(self):
        for c in self.coords:
            if not (0.0 <= c < 1.0):
                raise ValueError(f"torus coordinate {c!r} outside [0, 1)")

    @property
    def dims(self) -> int:
        return len(self.coords)


@dataclass(frozen=True)
class SystemSpec:
    """Parameters of a system: a Heisenberg translation or a torus rotation.

    ``gamma0`` is ignored for torus rotations; ``dims`` (1 or 2) only
    applies to torus rotations.  ``rationally_dependent`` flags a small
    integer relation among 1, alpha, beta found by a bounded
    denominator search; minimality of the default systems relies on its
    absence.
    """

    kind: str = "heisenberg"
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA
    gamma0: float = 0.0
    dims: int = 2
    rationally_dependent: bool = field(init=False, default=False)

    def __post_init__(self):
        if self.kind not in ("heisenberg", "torus_rotation"):
            raise ValueError(f"unknown system kind {self.kind!r}")
        if self.dims not in (1, 2):
            raise ValueError("dims must be 1 or 2")
        for name in ("alpha", "beta", "gamma0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        flagged = (
            _near_rational(self.alpha)
            or (self.dims == 2 and _near_rational(self.beta))
            or (self.dims == 2 and _near_rational(self.alpha + self.beta))
            or (self.dims == 2 and _near_rational(self.alpha - self.beta))
        )
        object.__setattr__(self, "rationally_dependent", flagged)

    @property
    def translation(self) -> GroupElement:
        return GroupElement(self.alpha, self.beta, self.gamma0)

    @property
    def rotation_vector(self) -> tuple[float, ...]:
        return (self.alpha,) if self.dims == 1 else (self.alpha, self.beta)


def default_heisenberg(gamma0: float = 0.0) -> SystemSpec:
    """The default minimal Heisenberg nilsystem."""
    return SystemSpec(kind="heisenberg", gamma0=gamma0)


def _require(spec: SystemSpec, kind: str) -> None:
    if spec.kind != kind:
        raise ValueError(f"operation requires a {kind} system, got {spec.kind}")


def _power(spec: SystemSpec, n: int) -> GroupElement:
    """Closed form t^n; exact for both signs of n."""
    a, b, c = spec.alpha, spec.beta, spec.gamma0
    half = n * (n - 1) / 2.0
    return GroupElement(n * a, n * b, n * c + half * a * b)


def step(spec: SystemSpec, p: NilPoint) -> NilPoint:
    """One application of the nilsystem map p -> reduce(t * p)."""
    _require(spec, "heisenberg")
    return reduce(mul(spec.translation, p.as_group()))


def translate(spec: SystemSpec, p: NilPoint, n: int) -> NilPoint:
    """T^n applied to p via the closed-form power of t."""
    _require(spec, "heisenberg")
    return reduce(mul(_power(spec, n), p.as_group()))


def orbit_point(spec: SystemSpec, n: int) -> NilPoint:
    """T^n of the base point (the identity coset)."""
    _require(spec, "heisenberg")
    return reduce(_power(spec, n))


def _powers_arr(spec: SystemSpec, ns: np.ndarray) -> np.ndarray:
    ns = np.asarray(ns, dtype=np.float64)
    out = np.empty(ns.shape + (3,), dtype=np.float64)
    out[..., 0] = ns * spec.alpha
    out[..., 1] = ns * spec.beta
    out[..., 2] = ns * spec.gamma0 + ns * (ns - 1.0) / 2.0 * (spec.alpha * spec.beta)
    return out


def translate_arr(spec: SystemSpec, p: NilPoint, ns: np.ndarray) -> np.ndarray:
    """Canonical coordinates of T^n p for an array of integers n; shape (..., 3)."""
    _require(spec, "heisenberg")
    base = np.array(p.as_tuple(), dtype=np.float64)
    return reduce_arr(mul_arr(_powers_arr(spec, ns), base))


def orbit_points_arr(spec: SystemSpec, ns: np.ndarray) -> np.ndarray:
    """Canonical coordinates of T^n e for an array of integers n."""
    _require(spec, "heisenberg")
    return reduce_arr(_powers_arr(spec, ns))


def factor_pi(p: NilPoint) -> TorusPoint:
    """Projection to the maximal equicontinuous factor: forget the central coordinate."""
    return TorusPoint((p.x, p.y))


def _wrap01(v: float) -> float:
    w = v - math.floor(v)
    return w if w < 1.0 else 0.0


def rotation_step(spec: SystemSpec, p: TorusPoint, n: int = 1) -> TorusPoint:
    """n-fold rotation of a torus point by the spec's rotation vector."""
    _require(spec, "torus_rotation")
    vec = spec.rotation_vector
    if len(vec) != p.dims:
        raise ValueError(f"point has {p.dims} coordinates, rotation has {len(vec)}")
    return TorusPoint(tuple(_wrap01(c + n * v) for c, v in zip(p.coords, vec)))


def rotation_orbit(spec: SystemSpec, p: TorusPoint, ns: np.ndarray) -> np.ndarray:
    """Rotation orbit coordinates for an array of integers n; shape (len(ns), dims)."""
    _require(spec, "torus_rotation")
    vec = np.asarray(spec.rotation_vector, dtype=np.float64)
    ns = np.asarray(ns, dtype=np.float64)
    coords = np.asarray(p.coords, dtype=np.float64) + ns[..., None] * vec
    coords -= np.floor(coords)
    coords[coords >= 1.0] = 0.0
    return coords


def torus_dist(p: TorusPoint, q: TorusPoint) -> float:
    """Sup metric on the torus: max over components of circle distance."""
    if p.dims != q.dims:
        raise ValueError("torus points of different dimension")
    best = 0.0
    for a, b in zip(p.coords, q.coords):
        d = abs(a - b)
        d = min(d, 1.0 - d)
        best = max(best, d)
    return best


def point_dist(spec: SystemSpec, p, q) -> float:
    """System-appropriate distance: the nil gauge or the flat torus metric."""
    from .heisenberg import dist as nil_dist

    if spec.kind == "heisenberg":
        return nil_dist(p, q)
    return torus_dist(p, q)
