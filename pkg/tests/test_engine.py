"""Integrator tests: closed forms, exits, forcing, refinement, determinism."""

import json

import numpy as np
import pytest

from zeronoise.asymptotics import closed_form_solution
from zeronoise.engine import (
    SingularityError,
    first_exit,
    integrate_ode,
    integrate_sde,
    integrate_with_forcing,
    make_grid,
    save_trajectory,
    sde_exit_ensemble,
    sde_path_ensemble,
    sde_snapshot_ensemble,
    trajectory_to_csv,
)
from zeronoise.fields import FieldSpec, counterexample_pair, get_field, model_field
from zeronoise.stable_noise import StableParams
from zeronoise.stats import geodesic_distance, ks_distance

MODEL2 = model_field(1.0, 0.5, 2)
NOISE2 = StableParams(alpha=2.0, c=1.0, d=2)
NOISE1 = StableParams(alpha=2.0, c=1.0, d=1)


def rotation_field():
    def A(x):
        x = np.asarray(x, dtype=float)
        return np.stack([-x[..., 1], x[..., 0]], axis=-1)

    return FieldSpec(name="rotation", d=2, A=A, beta=0.5, gamma=0.5,
                     a_bar=lambda p: np.ones(np.asarray(p).shape[:-1]))


class TestOde:
    def test_model_closed_form(self):
        # r(t) = (1 + 0.5 t)^2 from |x0| = 1, beta = 0.5
        traj = integrate_ode(MODEL2, np.array([1.0, 0.0]), make_grid(1.0, 1e-3))
        r_num = traj.radii()[-1]
        assert abs(r_num / 2.25 - 1.0) < 1e-8

    def test_angle_constancy(self):
        x0 = np.array([0.6, 0.8])
        traj = integrate_ode(MODEL2, x0, make_grid(1.0, 1e-3), thinning=10)
        drift = np.max(geodesic_distance(traj.angles(), x0))
        assert drift < 1e-10

    def test_rotational_field_conserves_radius(self):
        traj = integrate_ode(rotation_field(), np.array([1.0, 0.0]), make_grid(5.0, 1e-3), thinning=50)
        assert np.max(np.abs(traj.radii() - 1.0)) < 1e-8

    def test_x0_zero_rejected(self):
        with pytest.raises(ValueError):
            integrate_ode(MODEL2, np.zeros(2), make_grid(1.0, 1e-2))

    def test_singularity_detection(self):
        # linear inward drift: radius e^{-t} crosses the floor in finite time
        def A(x):
            return -np.asarray(x, dtype=float)

        f = FieldSpec(name="inward", d=1, A=A, beta=0.5, gamma=0.5,
                      a_bar=lambda p: np.ones(np.asarray(p).shape[:-1]))
        with pytest.raises(SingularityError):
            integrate_ode(f, np.array([1.0]), make_grid(30.0, 1e-3), thinning=100)

    def test_rk4_refinement_order(self):
        x0 = np.array([1.0, 0.0])
        end = {}
        for h in (2e-3, 1e-3):
            end[h] = integrate_ode(MODEL2, x0, make_grid(1.0, h), thinning=1000).states[-1]
        exact = closed_form_solution(1.0, 0.5, -2.0, np.array([1.0, 0.0]), 1.0)
        err_coarse = np.linalg.norm(end[2e-3] - exact)
        err_fine = np.linalg.norm(end[1e-3] - exact)
        # fourth order: halving h divides the error by ~16; allow slack
        assert err_fine < err_coarse / 8.0


class TestSde:
    def test_eps_zero_matches_closed_form(self):
        # Euler with eps = 0 against the closed form started from matched radius:
        # r0 = 0.01 means t0 solves (0.5(t - t0))^2 = 0.01, i.e. t0 = -0.2
        x0 = np.array([0.01, 0.0])
        traj = integrate_sde(MODEL2, 0.0, NOISE2, x0, make_grid(1.0, 2e-4), thinning=1000)
        t0 = -2.0 * np.sqrt(0.01)
        exact = closed_form_solution(1.0, 0.5, t0, np.array([1.0, 0.0]), 1.0)
        assert np.linalg.norm(traj.states[-1]) == pytest.approx(np.linalg.norm(exact), rel=1e-3)

    def test_origin_is_rest_point(self):
        traj = integrate_sde(MODEL2, 0.0, NOISE2, np.zeros(2), make_grid(1.0, 1e-2))
        assert np.all(traj.states == 0.0)

    def test_symmetric_sign_split(self):
        field = model_field(1.0, 0.5, 1)
        snaps = sde_snapshot_ensemble(field, 1.0, NOISE1, np.zeros(1), 1e-2, [1.0],
                                      10_000, seed=41)
        frac = np.mean(snaps[0][:, 0] > 0.0)
        assert abs(frac - 0.5) < 3.0 * 0.5 / np.sqrt(10_000)

    def test_eps_negative_rejected(self):
        with pytest.raises(ValueError):
            integrate_sde(MODEL2, -0.1, NOISE2, np.zeros(2), make_grid(1.0, 1e-2))

    def test_nonuniform_grid_rejected(self):
        with pytest.raises(ValueError):
            integrate_sde(MODEL2, 0.1, NOISE2, np.zeros(2), np.array([0.0, 0.1, 0.3]))

    def test_determinism_bitwise(self):
        a = integrate_sde(MODEL2, 0.5, NOISE2, np.zeros(2), make_grid(0.5, 1e-3), seed=7, stream=3)
        b = integrate_sde(MODEL2, 0.5, NOISE2, np.zeros(2), make_grid(0.5, 1e-3), seed=7, stream=3)
        assert a.states.tobytes() == b.states.tobytes()

    def test_endpoint_distribution_stable_under_refinement(self):
        field = model_field(1.0, 0.5, 1)
        a = sde_snapshot_ensemble(field, 0.5, NOISE1, np.zeros(1), 2e-3, [1.0], 5000, seed=42)
        b = sde_snapshot_ensemble(field, 0.5, NOISE1, np.zeros(1), 1e-3, [1.0], 5000, seed=43)
        assert ks_distance(a[0][:, 0], b[0][:, 0]) < 0.03


class TestForcing:
    def test_zero_forcing_matches_ode(self):
        x0 = np.array([1.0, 0.0])
        grid = make_grid(1.0, 1e-3)
        forced = integrate_with_forcing(MODEL2, lambda t: np.zeros((len(t), 2)), x0, grid, thinning=1000)
        ode = integrate_ode(MODEL2, x0, grid, thinning=1000)
        # Euler against RK4: first-order difference
        assert np.linalg.norm(forced.states[-1] - ode.states[-1]) < 5e-3

    def test_rotational_forcing_still_grows(self):
        def xi(t):
            t = np.asarray(t, dtype=float)
            return np.stack([np.sin(t), np.cos(t) - 1.0], axis=-1)

        traj = integrate_with_forcing(MODEL2, xi, np.array([10.0, 0.0]),
                                      make_grid(10_000.0, 0.05), thinning=1000)
        assert traj.radii()[-1] > 1e3

    def test_counterexample_short_horizon(self):
        pair = counterexample_pair(2, 0.5)
        grid = make_grid(40.0, 1e-3)
        traj = integrate_with_forcing(pair.field, pair.forcing, np.array([2.0, 0.0]), grid, thinning=10)
        radii = traj.radii()
        assert np.max(radii) <= 4.0
        # shortly after each even multiple of sigma the orbit is back on the
        # exact loop: radius sqrt(n^2 + 2 c0 n^(3/2) s) at angle kappa log(r/n)
        kappa = np.pi / np.log(1.5)
        c0 = (3.0 ** 4 - 2.0 ** 4) / (4.0 * 2.0 ** 3.5 * pair.sigma)
        lag = 0.05
        for k in range(1, 30):
            t = 2.0 * k * pair.sigma + lag
            state = traj.state_at(t)
            r_exact = np.sqrt(4.0 + 2.0 * c0 * 2.0 ** 1.5 * lag)
            phi_exact = kappa * np.log(r_exact / 2.0)
            exact = r_exact * np.array([np.cos(phi_exact), np.sin(phi_exact)])
            assert np.linalg.norm(state - exact) < 0.05, f"t = {t}: {state} vs {exact}"

    def test_forcing_must_start_at_zero(self):
        with pytest.raises(ValueError):
            integrate_with_forcing(MODEL2, lambda t: np.ones((len(t), 2)),
                                   np.array([1.0, 0.0]), make_grid(1.0, 1e-2))


class TestFirstExit:
    def test_deterministic_exit_time(self):
        # r(t) = (sqrt(0.1) + 0.5 t)^2 hits 1 at t = 2(1 - sqrt(0.1))
        x0 = np.array([0.1, 0.0])
        traj = integrate_ode(MODEL2, x0, make_grid(2.0, 1e-3))
        rec = first_exit(traj, 1.0)
        t_exact = 2.0 * (1.0 - np.sqrt(0.1))
        assert rec is not None
        assert abs(rec.tau - t_exact) < 0.01
        assert rec.radius_at_exit >= 1.0

    def test_exit_at_start(self):
        traj = integrate_ode(MODEL2, np.array([2.0, 0.0]), make_grid(0.1, 1e-2))
        rec = first_exit(traj, 1.0)
        assert rec.tau == 0.0
        assert np.allclose(rec.state_at_exit, [2.0, 0.0])

    def test_no_exit_returns_none(self):
        traj = integrate_ode(MODEL2, np.array([0.01, 0.0]), make_grid(0.1, 1e-2))
        assert first_exit(traj, 100.0) is None

    def test_monotone_in_delta(self):
        traj = integrate_ode(MODEL2, np.array([0.1, 0.0]), make_grid(3.0, 1e-3))
        taus = [first_exit(traj, d).tau for d in (0.5, 1.0, 2.0)]
        assert taus[0] <= taus[1] <= taus[2]

    def test_delta_validation(self):
        traj = integrate_ode(MODEL2, np.array([1.0, 0.0]), make_grid(0.1, 1e-2))
        with pytest.raises(ValueError):
            first_exit(traj, 0.0)

    def test_jump_overshoot_frequency(self):
        # heavy-tailed driver: some exits happen by a jump well past the threshold
        field = model_field(1.0, 0.5, 1)
        noise = StableParams(alpha=1.5, c=1.0, d=1)
        ens = sde_exit_ensemble(field, 1.0, noise, np.zeros(1), 1.0, 1e-2, 50.0, 1000, seed=44)
        assert np.all(ens.exited)
        big = np.mean(ens.overshoots() > 0.5)
        assert big > 0.0


class TestEnsembles:
    def test_serial_equals_threaded(self):
        field = model_field(1.0, 0.5, 2)
        args = (field, 0.5, NOISE2, np.zeros(2), 1e-2, [0.5, 1.0], 64)
        a = sde_snapshot_ensemble(*args, seed=45, threads=1)
        b = sde_snapshot_ensemble(*args, seed=45, threads=3)
        assert a.tobytes() == b.tobytes()

    def test_exit_ensemble_serial_equals_threaded(self):
        field = model_field(1.0, 0.5, 2)
        a = sde_exit_ensemble(field, 1.0, NOISE2, np.zeros(2), 5.0, 1e-2, 100.0, 64, seed=46, threads=1)
        b = sde_exit_ensemble(field, 1.0, NOISE2, np.zeros(2), 5.0, 1e-2, 100.0, 64, seed=46, threads=4)
        assert a.tau.tobytes() == b.tau.tobytes()
        assert a.states.tobytes() == b.states.tobytes()

    def test_path_ensemble_shape(self):
        field = model_field(1.0, 0.5, 1)
        times, paths = sde_path_ensemble(field, 0.5, NOISE1, np.zeros(1),
                                         make_grid(1.0, 1e-2), 5, seed=47, thinning=10)
        assert paths.shape == (5, len(times), 1)

    def test_streams_independent_of_ensemble_split(self):
        # trajectory k of a size-n ensemble equals trajectory k of the first
        # block when the ensemble is generated in two thread blocks
        field = model_field(1.0, 0.5, 1)
        full = sde_snapshot_ensemble(field, 0.5, NOISE1, np.zeros(1), 1e-2, [1.0], 10,
                                     seed=48, threads=1)
        split = sde_snapshot_ensemble(field, 0.5, NOISE1, np.zeros(1), 1e-2, [1.0], 10,
                                      seed=48, threads=2)
        assert np.array_equal(full, split)


class TestSerialization:
    def test_csv_header_and_roundtrip(self, tmp_path):
        traj = integrate_ode(MODEL2, np.array([1.0, 0.0]), make_grid(0.1, 1e-2))
        path = tmp_path / "traj.csv"
        trajectory_to_csv(traj, path)
        text = path.read_text().splitlines()
        assert text[0] == "t,x1,x2"
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert np.allclose(data[:, 0], traj.times)
        assert np.allclose(data[:, 1:], traj.states)

    def test_metadata_block(self, tmp_path):
        traj = integrate_sde(MODEL2, 0.3, NOISE2, np.zeros(2), make_grid(0.1, 1e-2),
                             seed=9, stream=4, thinning=2)
        save_trajectory(traj, tmp_path / "run")
        meta = json.loads((tmp_path / "run.json").read_text())
        assert meta["field"] == "model"
        assert meta["eps"] == 0.3
        assert meta["alpha"] == 2.0
        assert meta["c"] == 1.0
        assert meta["seed"] == 9
        assert meta["stream"] == 4
        assert meta["h"] == pytest.approx(1e-2)
