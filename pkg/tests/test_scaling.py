"""Tests for the rescaling transform and the identity-in-law check."""

import numpy as np
import pytest

from zeronoise.asymptotics import closed_form_solution
from zeronoise.engine import Trajectory, integrate_sde, make_grid
from zeronoise.fields import model_field
from zeronoise.scaling import exponents, rescale, scaling_identity_test
from zeronoise.stable_noise import StableParams


class TestExponents:
    @pytest.mark.parametrize("alpha,beta,space,time", [
        (2.0, 0.5, 4.0 / 3.0, 2.0 / 3.0),
        (2.0, 0.0, 2.0, 2.0),
        (1.5, 0.7, 1.25, 0.375),
    ])
    def test_examples(self, alpha, beta, space, time):
        e = exponents(alpha, beta)
        assert e.space_exp == pytest.approx(space, rel=1e-12)
        assert e.time_exp == pytest.approx(time, rel=1e-12)

    def test_invalid_regime(self):
        with pytest.raises(ValueError):
            exponents(1.2, -0.5)  # alpha + beta < 1
        with pytest.raises(ValueError):
            exponents(2.5, 0.5)
        with pytest.raises(ValueError):
            exponents(2.0, 1.0)

    def test_ratio_invariant(self):
        # space * (1 - beta) = time on a dense admissible grid
        for alpha in np.linspace(1.05, 2.0, 14):
            for beta in np.linspace(-0.9, 0.9, 19):
                if alpha + beta <= 1.0 + 1e-9:
                    continue
                e = exponents(alpha, float(beta))
                assert e.space_exp * (1.0 - beta) == pytest.approx(e.time_exp, rel=1e-12)
                assert e.space_exp > 0.0 and e.time_exp > 0.0


def _sample_traj(eps=0.5, seed=50):
    field = model_field(1.0, 0.5, 1)
    noise = StableParams(alpha=2.0, c=1.0, d=1)
    return integrate_sde(field, eps, noise, np.zeros(1), make_grid(1.0, 1e-2), seed=seed)


class TestRescale:
    def test_identity_at_eps_one(self):
        traj = _sample_traj()
        e = exponents(2.0, 0.5)
        out = rescale(traj, 1.0, e)
        assert np.array_equal(out.times, traj.times)
        assert np.array_equal(out.states, traj.states)

    def test_inverse_roundtrip(self):
        traj = _sample_traj()
        e = exponents(2.0, 0.5)
        back = rescale(rescale(traj, 0.5, e), 2.0, e)
        assert np.allclose(back.times, traj.times, rtol=1e-12)
        assert np.allclose(back.states, traj.states, rtol=1e-12)

    def test_group_property(self):
        traj = _sample_traj()
        e = exponents(2.0, 0.5)
        a = rescale(rescale(traj, 0.5, e), 0.3, e)
        b = rescale(traj, 0.15, e)
        assert np.allclose(a.times, b.times, rtol=1e-12)
        assert np.allclose(a.states, b.states, rtol=1e-12)

    def test_eps_validation(self):
        with pytest.raises(ValueError):
            rescale(_sample_traj(), 0.0, exponents(2.0, 0.5))

    def test_closed_form_is_fixed_point(self):
        # the zero-noise solution is invariant under the transform
        beta, alpha = 0.5, 2.0
        e = exponents(alpha, beta)
        times = np.linspace(0.0, 4.0, 81)
        states = closed_form_solution(1.0, beta, 0.0, np.array([1.0]), times)
        traj = Trajectory(times=times, states=states, epsilon=0.0)
        out = rescale(traj, 0.4, e)
        expected = closed_form_solution(1.0, beta, 0.0, np.array([1.0]), out.times)
        assert np.allclose(out.states, expected, rtol=1e-12, atol=1e-14)

    def test_amplitude_bookkeeping(self):
        traj = _sample_traj(eps=0.5)
        out = rescale(traj, 0.5, exponents(2.0, 0.5))
        assert out.epsilon == pytest.approx(1.0)


class TestIdentityCheck:
    def test_small_run_matches_in_law(self):
        field = model_field(1.0, 0.5, 1)
        noise = StableParams(alpha=2.0, c=1.0, d=1)
        rep = scaling_identity_test(field, 0.5, [1.0], 800, noise, seed=51, h=2e-3)
        assert rep.max_ks() < 0.08  # ~2x the 99th percentile at n = 800

    def test_beta_zero_case(self):
        # constant-magnitude drift: exponents degenerate to space = time = 2
        field = model_field(1.0, 0.0, 1)
        noise = StableParams(alpha=2.0, c=1.0, d=1)
        rep = scaling_identity_test(field, 0.5, [1.0], 2000, noise, seed=53, h=1e-3)
        assert rep.max_ks() < 0.05

    def test_warning_for_tiny_n(self):
        field = model_field(1.0, 0.5, 1)
        noise = StableParams(alpha=2.0, c=1.0, d=1)
        rep = scaling_identity_test(field, 0.5, [0.5], 50, noise, seed=52, h=5e-3)
        assert rep.warning is not None
