import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nilscope import heisenberg as h
from nilscope import systems as sy


class TestSpec:
    def test_default_is_rationally_independent(self, spec):
        assert not spec.rationally_dependent

    def test_rational_alpha_flagged(self):
        assert sy.SystemSpec(alpha=0.25).rationally_dependent
        assert sy.SystemSpec(alpha=1 / 3 + 1e-13).rationally_dependent

    def test_equal_frequencies_flagged(self):
        a = math.sqrt(2) - 1
        assert sy.SystemSpec(alpha=a, beta=a).rationally_dependent

    def test_rejects_bad_kind(self):
        with pytest.raises(ValueError):
            sy.SystemSpec(kind="circle")
        with pytest.raises(ValueError):
            sy.SystemSpec(dims=3)


class TestStep:
    def test_zero_translation_fixes(self):
        frozen = sy.SystemSpec(alpha=0.0, beta=0.0, gamma0=0.0)
        p = h.NilPoint(0.3, 0.4, 0.5)
        assert sy.step(frozen, p) == p

    def test_base_point_moves_to_translation(self, spec):
        e = h.reduce(h.IDENTITY)
        assert sy.step(spec, e) == h.reduce(spec.translation)

    def test_iteration_matches_closed_form(self, spec):
        p = h.reduce(h.IDENTITY)
        for _ in range(10_000):
            p = sy.step(spec, p)
        q = sy.orbit_point(spec, 10_000)
        assert h.dist(p, q) < 1e-6

    def test_requires_heisenberg(self):
        rot = sy.SystemSpec(kind="torus_rotation")
        with pytest.raises(ValueError):
            sy.step(rot, h.NilPoint(0, 0, 0))


class TestOrbitPoint:
    def test_zero_power(self, spec):
        assert sy.orbit_point(spec, 0) == h.NilPoint(0.0, 0.0, 0.0)

    def test_half_half_square(self):
        s2 = sy.SystemSpec(alpha=0.5, beta=0.5, gamma0=0.0)
        assert sy.orbit_point(s2, 2) == h.NilPoint(0.0, 0.0, 0.25)

    @pytest.mark.parametrize("n", [1, 10, 1000, -1, -10, -1000])
    def test_matches_iteration_both_signs(self, spec, n):
        p = h.reduce(h.IDENTITY)
        t = spec.translation if n > 0 else h.inv(spec.translation)
        for _ in range(abs(n)):
            p = h.reduce(h.mul(t, p.as_group()))
        assert h.dist(p, sy.orbit_point(spec, n)) < 1e-6

    @given(st.integers(-1000, 1000))
    def test_negative_power_is_inverse_power(self, n):
        spec = sy.default_heisenberg(gamma0=0.123)
        direct = sy.orbit_point(spec, -n)
        via_inv = h.reduce(h.inv(sy._power(spec, n)))
        assert h.dist(direct, via_inv) < 1e-9

    @given(st.integers(-1000, 1000), st.integers(-1000, 1000))
    def test_cocycle(self, m, n):
        spec = sy.default_heisenberg()
        combined = sy.orbit_point(spec, m + n)
        product = h.reduce(h.mul(sy._power(spec, m), sy._power(spec, n)))
        assert h.dist(combined, product) < 1e-9

    def test_array_matches_scalar(self, spec):
        ns = np.arange(-200, 201)
        arr = sy.orbit_points_arr(spec, ns)
        for row, n in zip(arr, ns):
            assert np.allclose(row, sy.orbit_point(spec, int(n)).as_tuple(), atol=1e-10)


class TestFactor:
    def test_projection_drops_center(self):
        assert sy.factor_pi(h.NilPoint(0.25, 0.5, 0.55)) == sy.TorusPoint((0.25, 0.5))

    def test_fibers_project_equal(self):
        p = h.NilPoint(0.2, 0.7, 0.1)
        q = h.NilPoint(0.2, 0.7, 0.9)
        assert sy.factor_pi(p) == sy.factor_pi(q)

    def test_equivariance(self, spec, rng):
        rot = sy.SystemSpec(kind="torus_rotation", alpha=spec.alpha, beta=spec.beta)
        for _ in range(500):
            p = h.NilPoint(*rng.random(3))
            lhs = sy.factor_pi(sy.step(spec, p))
            rhs = sy.rotation_step(rot, sy.factor_pi(p))
            assert sy.torus_dist(lhs, rhs) < 1e-12

    def test_central_translation_commutes_with_step(self, spec, rng):
        for _ in range(200):
            p = h.NilPoint(*rng.random(3))
            c = float(rng.random())
            shifted = h.reduce(h.mul(p.as_group(), h.GroupElement(0.0, 0.0, c)))
            lhs = sy.step(spec, shifted)
            rhs = h.reduce(h.mul(sy.step(spec, p).as_group(), h.GroupElement(0.0, 0.0, c)))
            assert h.dist(lhs, rhs) < 1e-12


class TestRotation:
    def test_zero_rotation(self):
        rot = sy.SystemSpec(kind="torus_rotation", alpha=0.0, beta=0.0)
        p = sy.TorusPoint((0.3, 0.9))
        assert sy.rotation_step(rot, p) == p

    def test_wraparound(self):
        rot = sy.SystemSpec(kind="torus_rotation", alpha=0.2, dims=1)
        p = sy.TorusPoint((0.9,))
        q = sy.rotation_step(rot, p)
        assert abs(q.coords[0] - 0.1) < 1e-12

    @given(st.integers(1, 10_000))
    def test_nfold_equals_single_multiple(self, n):
        rot = sy.SystemSpec(kind="torus_rotation", alpha=sy.DEFAULT_ALPHA, beta=sy.DEFAULT_BETA)
        p = sy.TorusPoint((0.25, 0.8))
        stepped = p
        # closed form: add n*alpha directly
        direct = sy.rotation_step(rot, p, n)
        expected = tuple((c + n * v) % 1.0 for c, v in zip(p.coords, rot.rotation_vector))
        assert all(
            min(abs(a - b), 1 - abs(a - b)) < 1e-9 for a, b in zip(direct.coords, expected)
        )

    def test_dimension_mismatch_rejected(self):
        rot = sy.SystemSpec(kind="torus_rotation", dims=2)
        with pytest.raises(ValueError):
            sy.rotation_step(rot, sy.TorusPoint((0.5,)))
