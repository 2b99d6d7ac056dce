"""Tests for the field abstraction, the library and the asymptotics validator."""

import numpy as np
import pytest

from zeronoise.fields import (
    FieldSpec,
    PolarPoint,
    angular_cosine_field,
    asymptotic_validate,
    counterexample_pair,
    custom_table_field,
    decompose,
    get_field,
    model_field,
    power_map,
    truncated_model_field,
)


def rotation_field():
    """Purely rotational planar field A(x) = (-x2, x1)."""

    def A(x):
        x = np.asarray(x, dtype=float)
        return np.stack([-x[..., 1], x[..., 0]], axis=-1)

    return FieldSpec(name="rotation", d=2, A=A, beta=0.5, gamma=0.5,
                     a_bar=lambda phi: np.ones(np.asarray(phi).shape[:-1]))


class TestPowerMap:
    def test_zero_maps_to_zero(self):
        assert np.allclose(power_map(np.zeros(3), 0.5), 0.0)
        assert np.allclose(power_map(np.zeros(2), -0.5), 0.0)

    def test_example(self):
        assert np.allclose(power_map(np.array([4.0, 0.0]), 0.5), [2.0, 0.0])

    def test_norm_identity(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(100, 3))
        for beta in (0.5, -0.3, 0.9):
            assert np.allclose(np.linalg.norm(power_map(x, beta), axis=1),
                               np.linalg.norm(x, axis=1) ** beta)

    def test_positive_homogeneity(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(50, 2))
        lam = rng.uniform(0.1, 5.0, size=(50, 1))
        beta = 0.7
        assert np.allclose(power_map(lam * x, beta), lam**beta * power_map(x, beta))


class TestDecompose:
    def test_purely_radial(self):
        f = FieldSpec(name="identity", d=2, A=lambda x: np.asarray(x, dtype=float),
                      beta=0.5, gamma=0.5, a_bar=lambda p: np.ones(np.asarray(p).shape[:-1]))
        a_rad, a_tan = decompose(f, np.array([3.0, 4.0]))
        assert np.allclose(a_rad, [3.0, 4.0])
        assert np.allclose(a_tan, 0.0)

    def test_purely_rotational(self):
        a_rad, a_tan = decompose(rotation_field(), np.array([1.0, 0.0]))
        assert np.allclose(a_rad, 0.0)
        assert np.allclose(a_tan, [0.0, 1.0])

    def test_reassembly_and_orthogonality(self):
        rng = np.random.default_rng(2)
        f = angular_cosine_field(0.5)
        for _ in range(1000):
            x = rng.normal(size=2)
            if np.linalg.norm(x) < 1e-6:
                continue
            a_rad, a_tan = decompose(f, x)
            total = f.A(x)
            assert np.allclose(a_rad + a_tan, total, rtol=1e-12, atol=1e-12)
            assert abs(np.dot(a_tan, x)) <= 1e-12 * max(1.0, np.linalg.norm(total) * np.linalg.norm(x))

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            decompose(rotation_field(), np.zeros(2))


class TestModelField:
    def test_pointwise(self):
        f = model_field(1.0, 0.5, 2)
        assert np.allclose(f.A(np.array([0.0, 9.0])), [0.0, 3.0])

    def test_tangential_vanishes(self):
        f = model_field(1.0, 0.5, 3)
        rng = np.random.default_rng(3)
        x = rng.normal(size=(200, 3))
        _, a_tan = decompose(f, x)
        assert np.max(np.linalg.norm(a_tan, axis=1)) < 1e-12

    def test_angular_cosine_value(self):
        f = angular_cosine_field(0.5, amp=0.3)
        assert np.allclose(f.A(np.array([1.0, 0.0])), [1.3, 0.0])

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(4)
        for d in (2, 3):
            f = model_field(1.0, 0.5, d)
            for _ in range(20):
                q, _ = np.linalg.qr(rng.normal(size=(d, d)))
                x = rng.normal(size=d)
                assert np.allclose(f.A(q @ x), q @ f.A(x), atol=1e-12)

    def test_invalid_a_bar(self):
        with pytest.raises(ValueError):
            model_field(-1.0, 0.5, 2)
        with pytest.raises(ValueError):
            model_field(lambda p: np.asarray(p)[..., 0], 0.5, 2)  # changes sign

    def test_invalid_beta(self):
        with pytest.raises(ValueError):
            model_field(1.0, 1.0, 2)

    def test_negative_beta_guard(self):
        # singular magnitude near 0 is clipped, never inf
        f = model_field(1.0, -0.5, 2)
        v = f.A(np.array([1e-12, 0.0]))
        assert np.all(np.isfinite(v))
        assert np.allclose(f.A(np.zeros(2)), 0.0)

    def test_truncated_matches_model_inside(self):
        t = truncated_model_field(1.0, 0.5, 1)
        m = model_field(1.0, 0.5, 1)
        x = np.linspace(-0.99, 0.99, 41)[:, None]
        assert np.allclose(t.A(x), m.A(x))
        # bounded beyond the unit ball, continuous at r = 1
        big = t.A(np.array([[100.0]]))
        assert abs(big[0, 0]) <= 1.0 + 0.5
        assert np.allclose(t.A(np.array([[1.0]])), m.A(np.array([[1.0]])))


class TestLibrary:
    def test_names(self):
        assert get_field("model", d=2, beta=0.5).name == "model"
        assert get_field("sign1d", d=1, beta=0.5).name == "sign1d"
        assert get_field("angular-cosine", d=2, beta=0.5).name == "angular-cosine"
        assert get_field("counterexample", d=2, beta=0.5).name == "counterexample"
        f = get_field("custom-table", d=1, beta=0.5, table_values=(1.0, 2.0))
        assert f.name == "custom-table"
        with pytest.raises(ValueError):
            get_field("nope", d=1, beta=0.5)

    def test_custom_table_2d(self):
        th = np.array([0.0, np.pi / 2, np.pi, 3 * np.pi / 2])
        f = custom_table_field(0.5, 2, th, [1.0, 2.0, 1.0, 2.0])
        v = f.A(np.array([4.0, 0.0]))
        assert np.allclose(v, [2.0, 0.0])  # a_bar = 1 at angle 0, r^beta = 2

    def test_exact_model_flag(self):
        assert get_field("model", d=1, beta=0.5).exact_model
        assert not get_field("sign1d", d=1, beta=0.5).exact_model


class TestCounterexample:
    def test_sigma_formula(self):
        pair = counterexample_pair(2, 0.5)
        assert pair.sigma == pytest.approx((3.0**0.5 - 2.0**0.5) / 0.5, rel=1e-12)
        assert pair.sigma == pytest.approx(0.6356744903915641)

    def test_forcing_bounded_and_zero_start(self):
        pair = counterexample_pair(2, 0.5)
        t = np.linspace(0.0, 100.0, 20001)
        xi = pair.forcing(t)
        assert np.allclose(xi[0], 0.0)
        assert np.max(np.linalg.norm(xi, axis=1)) <= 1.0

    def test_field_dimensions(self):
        pair = counterexample_pair(3, 0.4)
        assert pair.field.d == 2
        assert np.allclose(pair.field.A(np.zeros(2)), 0.0)
        # outside the steering zone the field is the pure radial power law
        v = pair.field.A(np.array([10.0, 0.0]))
        assert np.allclose(v, [10.0**0.4, 0.0], rtol=1e-12)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            counterexample_pair(0, 0.5)
        with pytest.raises(ValueError):
            counterexample_pair(2, 1.2)

    def test_tuple_unpacking(self):
        field, forcing = counterexample_pair(2, 0.5)
        assert field.name == "counterexample"
        assert callable(forcing)


class TestAsymptoticValidate:
    def test_model_field_exact(self):
        reports = asymptotic_validate(model_field(1.0, 0.5, 2), [1e-3, 1e-2, 1e-1, 1.0, 10.0])
        for rep in reports:
            assert rep.ok
            assert np.max(rep.radial_ratios) < 1e-12
            assert np.max(rep.tangential_ratios) < 1e-12

    def _with_tangential(self, exponent):
        # A = x^beta + r^exponent * rotation, declared beta = 0.5, gamma = 0.25 at zero
        beta = 0.5

        def A(x):
            x = np.asarray(x, dtype=float)
            r = np.linalg.norm(x, axis=-1, keepdims=True)
            safe = np.where(r > 0.0, r, 1.0)
            phi = np.where(r > 0.0, x / safe, 0.0)
            perp = np.stack([-phi[..., 1], phi[..., 0]], axis=-1)
            return np.where(r > 0.0, safe**beta * phi + safe**exponent * perp, 0.0)

        return FieldSpec(name="test", d=2, A=A, beta=beta, gamma=0.25,
                         a_bar=lambda p: np.ones(np.asarray(p).shape[:-1]),
                         asymptotics_at="zero")

    def test_bounded_tangential_ratio_passes(self):
        # |A_tan| = r^(beta+gamma) exactly: ratio constant 1, not flagged
        rep = asymptotic_validate(self._with_tangential(0.75), [1e-4, 1e-3, 1e-2, 1e-1])
        assert rep.ok
        assert np.allclose(rep.tangential_ratios, 1.0)

    def test_violating_field_flagged(self):
        # |A_tan| = r^(beta-gamma): ratio r^(-2 gamma) blows up toward 0
        rep = asymptotic_validate(self._with_tangential(0.25), [1e-4, 1e-3, 1e-2, 1e-1])
        assert not rep.ok
        assert not rep.tangential_ok
        assert rep.violations

    def test_builtin_fields_pass(self):
        small = [1e-4, 1e-3, 1e-2]
        large = [1e2, 1e3, 1e4]
        both = small + large
        for f, radii in [
            (model_field(1.0, 0.5, 2), both),
            (angular_cosine_field(0.3), both),
            (truncated_model_field(1.0, 0.5, 1), small),
            (counterexample_pair(2, 0.5).field, large),
        ]:
            rep = asymptotic_validate(f, radii)
            reports = rep if isinstance(rep, tuple) else (rep,)
            assert all(r.ok for r in reports), f.name

    def test_radii_validation(self):
        with pytest.raises(ValueError):
            asymptotic_validate(model_field(1.0, 0.5, 2), [0.0, 1.0])


class TestPolarPoint:
    def test_roundtrip(self):
        p = PolarPoint.from_cartesian(np.array([3.0, 4.0]))
        assert p.r == pytest.approx(5.0)
        assert np.allclose(p.to_cartesian(), [3.0, 4.0])

    def test_origin_convention(self):
        p = PolarPoint.from_cartesian(np.zeros(3))
        assert p.r == 0.0
        assert np.allclose(p.phi, [1.0, 0.0, 0.0])

    def test_unit_norm_enforced(self):
        with pytest.raises(ValueError):
            PolarPoint(r=1.0, phi=np.array([2.0, 0.0]))
