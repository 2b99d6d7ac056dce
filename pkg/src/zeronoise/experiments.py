"""Named experiments: simulation pipelines with declared pass/fail thresholds.

Each runner is a pure function of (config, seed): rerunning produces a
byte-identical report, serial or threaded.  Reports carry every statistic
with its sample size and stream range, and experiments write ``report.json``
plus CSV tables into the output directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from . import __version__, stats
from .asymptotics import (
    AngleSample,
    closed_form_solution,
    exit_angle_distribution,
    limit_angle,
    polar_ode_solve,
    radial_fit,
    scale_function_oracle_1d,
)
from .config import ConfigError, ExperimentConfig, config_hash, report_config
from .engine import (
    integrate_with_forcing,
    make_grid,
    sde_exit_ensemble,
    sde_path_ensemble,
    sde_snapshot_ensemble,
)
from .fields import FieldSpec, asymptotic_validate, counterexample_pair, get_field, model_field
from .scaling import scaling_identity_test
from .stable_noise import StableParams, make_rng, sample_increments

__all__ = [
    "Metric",
    "ExperimentReport",
    "run_noise_selftest",
    "run_scaling_check",
    "run_zero_noise_convergence",
    "run_large_time",
    "run_exit_distribution",
    "run_modulus_diagnostic",
    "write_report",
    "RUNNERS",
]


@dataclass(frozen=True)
class Metric:
    """One reported statistic, optionally gated by a threshold."""

    name: str
    value: float
    op: str | None = None          # "<", "<=", ">", ">=", "in"
    threshold: object = None       # number, or [lo, hi] for op == "in"
    passed: bool | None = None     # None = informational
    n: int | None = None
    seeds: str | None = None


def _metric(name, value, *, lt=None, le=None, gt=None, ge=None, within=None,
            n=None, seeds=None, gate=True) -> Metric:
    value = float(value)
    op, threshold, passed = None, None, None
    if lt is not None:
        op, threshold, passed = "<", float(lt), value < float(lt)
    elif le is not None:
        op, threshold, passed = "<=", float(le), value <= float(le)
    elif gt is not None:
        op, threshold, passed = ">", float(gt), value > float(gt)
    elif ge is not None:
        op, threshold, passed = ">=", float(ge), value >= float(ge)
    elif within is not None:
        lo, hi = float(within[0]), float(within[1])
        op, threshold, passed = "in", [lo, hi], lo <= value <= hi
    if not gate:
        passed = None
    return Metric(name=name, value=value, op=op, threshold=threshold,
                  passed=bool(passed) if passed is not None else None, n=n, seeds=seeds)


@dataclass
class ExperimentReport:
    """Metrics plus provenance; ``artifacts`` holds CSV/JSON side outputs."""

    experiment: str
    config: dict
    config_hash: str
    version: str = __version__
    metrics: list = dc_field(default_factory=list)
    notes: list = dc_field(default_factory=list)
    artifacts: dict = dc_field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(m.passed is not False for m in self.metrics)

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "version": self.version,
            "config": self.config,
            "config_hash": self.config_hash,
            "passed": self.passed,
            "metrics": [asdict(m) for m in self.metrics],
            "notes": list(self.notes),
        }


def _new_report(cfg: ExperimentConfig) -> ExperimentReport:
    return ExperimentReport(experiment=cfg.experiment, config=report_config(cfg),
                            config_hash=config_hash(cfg))


def _field_from_config(cfg: ExperimentConfig) -> FieldSpec:
    return get_field(
        cfg.field,
        d=cfg.d,
        beta=cfg.beta,
        a_const=cfg.a_const,
        a_plus=cfg.a_plus,
        a_minus=cfg.a_minus,
        amp=cfg.amp,
        ce_n=cfg.ce_n,
        table_thetas=cfg.table_thetas,
        table_values=cfg.table_values,
    )


# ---------------------------------------------------------------------------
# noise self-test
# ---------------------------------------------------------------------------

_SELFTEST_GRID = ((2.0, 1.0), (1.5, 1.0), (1.8, 0.5))
_SELFTEST_FREQS = (0.25, 0.5, 1.0, 2.0, 4.0)


def run_noise_selftest(cfg: ExperimentConfig) -> ExperimentReport:
    """Distributional checks of the stable increment sampler.

    Empirical characteristic function against exp(-c|z|^alpha dt) on a
    parameter grid, self-similarity in law, isotropy of planar increments,
    and stream reproducibility/independence.
    """
    report = _new_report(cfg)
    n = cfg.N
    bound = 4.0 / np.sqrt(n)
    for k, (alpha, c) in enumerate(_SELFTEST_GRID):
        params = StableParams(alpha=alpha, c=c, d=1)
        rng = make_rng(cfg.seed, k)
        x = sample_increments(params, 1.0, n, rng)[:, 0]
        ecf = stats.empirical_cf(x, _SELFTEST_FREQS)
        target = np.exp(-c * np.abs(np.asarray(_SELFTEST_FREQS)) ** alpha)
        report.metrics.append(_metric(
            f"cf_error_alpha{alpha}_c{c}", np.max(np.abs(ecf - target)),
            lt=bound, n=n, seeds=f"seed {cfg.seed}, stream {k}",
        ))

    # self-similarity: B(a t) vs a^(1/alpha) B(t), one increment each
    params = StableParams(alpha=1.5, c=1.0, d=1)
    a_factor, t0 = 3.0, 0.7
    n_ss = min(n, 5000)
    xa = sample_increments(params, a_factor * t0, n_ss, make_rng(cfg.seed, 10))[:, 0]
    xb = sample_increments(params, t0, n_ss, make_rng(cfg.seed, 11))[:, 0]
    report.metrics.append(_metric(
        "self_similarity_ks", stats.ks_distance(xa, a_factor ** (1.0 / 1.5) * xb),
        lt=0.03, n=n_ss, seeds=f"seed {cfg.seed}, streams 10-11",
    ))

    # isotropy of planar increments
    params2 = StableParams(alpha=1.5, c=1.0, d=2)
    n_iso = min(n, 10_000)
    inc = sample_increments(params2, 1.0, n_iso, make_rng(cfg.seed, 12))
    theta = np.arctan2(inc[:, 1], inc[:, 0])
    report.metrics.append(_metric(
        "isotropy_ks", stats.ks_uniform_circle(theta),
        lt=0.03, n=n_iso, seeds=f"seed {cfg.seed}, stream 12",
    ))

    # reproducibility and stream independence
    p15 = StableParams(alpha=1.5, c=1.0, d=1)
    rep1 = sample_increments(p15, 1.0, 1000, make_rng(cfg.seed, 13))
    rep2 = sample_increments(p15, 1.0, 1000, make_rng(cfg.seed, 13))
    report.metrics.append(_metric(
        "replay_max_abs_diff", np.max(np.abs(rep1 - rep2)), le=0.0,
        n=1000, seeds=f"seed {cfg.seed}, stream 13",
    ))
    g = StableParams(alpha=2.0, c=1.0, d=1)
    ya = sample_increments(g, 1.0, 4000, make_rng(cfg.seed, 14))[:, 0]
    yb = sample_increments(g, 1.0, 4000, make_rng(cfg.seed, 15))[:, 0]
    report.metrics.append(_metric(
        "stream_correlation", abs(float(np.corrcoef(ya, yb)[0, 1])), lt=0.05,
        n=4000, seeds=f"seed {cfg.seed}, streams 14-15",
    ))

    rows = np.array([[alpha, c] for alpha, c in _SELFTEST_GRID])
    report.artifacts["cf_grid.csv"] = ("csv", "alpha,c", rows)
    return report


# ---------------------------------------------------------------------------
# scaling identity
# ---------------------------------------------------------------------------

def run_scaling_check(cfg: ExperimentConfig) -> ExperimentReport:
    """Rescaled unit-amplitude ensemble against the small-amplitude ensemble."""
    report = _new_report(cfg)
    field = _field_from_config(cfg)
    noise = StableParams(alpha=cfg.alpha, c=cfg.c, d=cfg.d)
    res = scaling_identity_test(field, cfg.eps, cfg.t_points, cfg.N, noise,
                                cfg.seed, h=cfg.h, threads=cfg.threads)
    if res.warning:
        report.notes.append(res.warning)
    threshold = 0.04 if cfg.alpha == 2.0 else 0.05
    gate = field.exact_model
    if not gate:
        report.notes.append(
            "field is not an exact power-law model field: the identity in law is not "
            "claimed, distances are reported without pass/fail"
        )
    seeds = f"seed {cfg.seed}, streams 0-{2 * cfg.N - 1}"
    rows = []
    for t, row in zip(res.t_points, res.ks):
        for name, val in row.items():
            report.metrics.append(_metric(
                f"{name}_t{t:g}", val, lt=threshold, n=cfg.N, seeds=seeds, gate=gate,
            ))
        rows.append([t] + [row[k] for k in sorted(row)])
    header = "t," + ",".join(sorted(res.ks[0]))
    report.artifacts["ks_table.csv"] = ("csv", header, np.asarray(rows))
    return report


# ---------------------------------------------------------------------------
# zero-noise convergence
# ---------------------------------------------------------------------------

def _radial_coefficient(field: FieldSpec):
    """Radial rate a(r, phi) = <A(r phi), phi> / r^beta, with the r -> 0 limit."""

    def a(r: float, phi) -> float:
        phi = np.asarray(phi, dtype=float)
        if r <= 0.0:
            return float(np.asarray(field.a_bar(phi)))
        return float(np.dot(field.A(r * phi), phi) / r**field.beta)

    return a


def _reference_states(field: FieldSpec, angles: np.ndarray, T: float) -> np.ndarray:
    """Terminal states of the selected zero-noise solutions along given angles.

    Exact-model fields use the closed form; otherwise the radius profile is
    solved once per distinct angle with the polar solver (the field must be
    purely radial, which assumption validation has already established).
    """
    if field.exact_model:
        ab = np.asarray(field.a_bar(angles))
        mags = (ab * (1.0 - field.beta) * T) ** (1.0 / (1.0 - field.beta))
        return mags[:, None] * angles
    a = _radial_coefficient(field)
    b = lambda r, phi: np.zeros(field.d)  # noqa: E731
    uniq, inverse = np.unique(np.round(angles, 12), axis=0, return_inverse=True)
    mags = np.empty(len(uniq))
    for i, phi in enumerate(uniq):
        sol = polar_ode_solve(a, b, field.beta, 0.5, 0.0, phi, T, n_out=8)
        mags[i] = sol.radii[-1]
    return mags[inverse][:, None] * angles


def run_zero_noise_convergence(cfg: ExperimentConfig) -> ExperimentReport:
    """Terminal-law convergence of the perturbed equation to the selected limit.

    Pipeline: (i) sample the limiting exit direction from the unit-amplitude
    model companion; (ii) build the reference ensemble X0(T, Phi) from those
    directions; (iii) for each amplitude simulate the perturbed equation and
    compare terminal laws; also check that the first exit from a small ball
    happens quickly at the smallest amplitude.
    """
    report = _new_report(cfg)
    field = _field_from_config(cfg)
    noise = StableParams(alpha=cfg.alpha, c=cfg.c, d=cfg.d)

    val = asymptotic_validate(field, np.logspace(-4, -1, 7))
    val_zero = val[0] if isinstance(val, tuple) else val
    if val_zero.convention != "zero" or not val_zero.ok:
        raise ConfigError(
            "field fails its declared small-radius asymptotics: "
            + "; ".join(val_zero.violations or ("no zero-radius declaration",))
        )

    # (i) limiting exit directions from the model companion at amplitude 1
    companion = model_field(field.a_bar, field.beta, field.d, name=f"{field.name}-model")
    angle_sample = exit_angle_distribution(companion, noise, cfg.R, cfg.N, cfg.seed,
                                           stream0=0, h=cfg.h_exit,
                                           horizon_factor=cfg.horizon_factor, threads=cfg.threads)
    angles = angle_sample.samples
    if len(angles) != cfg.N:  # non-exits dropped: resample to N for the reference
        pick = make_rng(cfg.seed, 2**20).integers(0, len(angles), size=cfg.N)
        angles = angles[pick]

    # (ii) reference ensemble for the selected limit at time T
    ref = _reference_states(field, angles, cfg.T)
    ref_radius = np.linalg.norm(ref, axis=1)

    # (iii) perturbed ensembles per amplitude
    k_levels = len(cfg.eps_list)
    rows = []
    dists = {}
    terminal_small = None
    for k, eps in enumerate(cfg.eps_list):
        stream0 = (k + 1) * cfg.N
        snaps = sde_snapshot_ensemble(field, eps, noise, np.zeros(cfg.d), cfg.h, [cfg.T],
                                      cfg.N, cfg.seed, stream0=stream0, threads=cfg.threads)
        term = snaps[0]
        if k == k_levels - 1:
            terminal_small = term
        row = {"eps": eps}
        for j in range(cfg.d):
            row[f"w1_x{j + 1}"] = stats.wasserstein_1d(term[:, j], ref[:, j])
            row[f"ks_x{j + 1}"] = stats.ks_distance(term[:, j], ref[:, j])
        row["w1_radius"] = stats.wasserstein_1d(np.linalg.norm(term, axis=1), ref_radius)
        row["ks_radius"] = stats.ks_distance(np.linalg.norm(term, axis=1), ref_radius)
        if cfg.d == 2:
            row["w1_angle"] = stats.circular_wasserstein(
                np.arctan2(term[:, 1], term[:, 0]), np.arctan2(ref[:, 1], ref[:, 0])
            )
        dists[eps] = max(v for key, v in row.items() if key.startswith("w1"))
        rows.append(row)

    seeds_note = f"seed {cfg.seed}, streams 0-{(k_levels + 2) * cfg.N - 1}"
    for row in rows:
        for key in sorted(row):
            if key != "eps":
                report.metrics.append(_metric(
                    f"{key}_eps{row['eps']:g}", row[key], n=cfg.N, seeds=seeds_note, gate=False,
                ))
    eps_hi, eps_lo = cfg.eps_list[0], cfg.eps_list[-1]
    report.metrics.append(_metric(
        "terminal_distance_ratio", dists[eps_lo] / dists[eps_hi], lt=0.5,
        n=cfg.N, seeds=seeds_note,
    ))
    report.metrics.append(_metric(
        f"terminal_distance_eps{eps_lo:g}", dists[eps_lo], lt=0.1, n=cfg.N, seeds=seeds_note,
    ))
    report.notes.append(
        "terminal-law distance = max 1-Wasserstein over coordinates and the radius; "
        "KS is reported alongside but cannot shrink against an atomic reference"
    )

    if cfg.d == 1:
        split = float(np.mean(terminal_small[:, 0] > 0.0))
        report.metrics.append(_metric(
            f"terminal_split_eps{eps_lo:g}", split, within=(0.47, 0.53), n=cfg.N, seeds=seeds_note,
        ))
        # residual spread around the reference radius; dominated by the
        # O(eps^time_exp) selection delay, so informational rather than gated
        mae = float(np.mean(np.abs(np.abs(terminal_small[:, 0]) - np.mean(ref_radius))))
        report.metrics.append(_metric(
            f"radius_concentration_mae_eps{eps_lo:g}", mae, n=cfg.N, seeds=seeds_note, gate=False,
        ))

    # exit-time smallness at the smallest amplitude: P(tau_delta > mu) < mu
    exits = sde_exit_ensemble(field, eps_lo, noise, np.zeros(cfg.d), cfg.delta, cfg.h,
                              cfg.T, cfg.N, cfg.seed, stream0=(k_levels + 1) * cfg.N,
                              threads=cfg.threads)
    tau = np.where(exits.exited, exits.tau, np.inf)
    p_slow = float(np.mean(tau > cfg.mu))
    report.metrics.append(_metric(
        f"exit_time_tail_p_eps{eps_lo:g}", p_slow, lt=cfg.mu, n=cfg.N, seeds=seeds_note,
    ))
    t_flow = cfg.delta ** (1.0 - cfg.beta) / (
        (1.0 - cfg.beta) * float(np.min(np.asarray(field.a_bar(angles))))
    )
    if t_flow > cfg.mu:
        report.notes.append(
            f"exit-time threshold is unattainable at these parameters: even the "
            f"noiseless selected solution needs t = {t_flow:.4g} > mu = {cfg.mu:g} "
            f"to reach radius {cfg.delta:g}; shrink delta below "
            f"{((1.0 - cfg.beta) * cfg.mu) ** (1.0 / (1.0 - cfg.beta)):.4g} to test the claim"
        )

    header = ",".join(["eps"] + [k for k in sorted(rows[0]) if k != "eps"])
    table = np.asarray([[row["eps"]] + [row[k] for k in sorted(row) if k != "eps"] for row in rows])
    report.artifacts["distances_vs_eps.csv"] = ("csv", header, table)
    report.artifacts["angle_sample.csv"] = (
        "csv", ",".join(f"x{j + 1}" for j in range(cfg.d)), angle_sample.samples,
    )
    report.artifacts["angle_sample.json"] = ("json", angle_sample.meta)
    return report


# ---------------------------------------------------------------------------
# large-time behaviour
# ---------------------------------------------------------------------------

def run_large_time(cfg: ExperimentConfig) -> ExperimentReport:
    """Growth and direction settling over long horizons.

    Three sub-experiments: a deterministically forced run (bounded forcing),
    a stochastic amplitude-1 run with heavy-tailed noise, and the
    bounded-orbit counterexample.
    """
    report = _new_report(cfg)
    window = (0.5 * cfg.T_large, cfg.T_large)
    store_thin = max(1, int(round(cfg.T_large / cfg.h_large)) // 20000)

    # (a) bounded forcing: xi(t) = (sin t, cos t) - (0, 1)
    field2 = model_field(1.0, cfg.beta, 2)

    def xi(t):
        t = np.asarray(t, dtype=float)
        out = np.stack([np.sin(t), np.cos(t) - 1.0], axis=-1)
        return out

    grid = make_grid(cfg.T_large, cfg.h_large)
    forced = integrate_with_forcing(field2, xi, np.array([cfg.x0_norm, 0.0]), grid, thinning=store_thin)
    fit = radial_fit(forced, cfg.beta, window)
    _, diag = limit_angle(forced, tail_fraction=0.5)
    report.metrics.append(_metric("forced_a_hat", fit.a_bar_hat, within=(0.98, 1.02),
                                  n=1, seeds="deterministic"))
    report.metrics.append(_metric("forced_angle_diag", diag, lt=0.05, n=1, seeds="deterministic"))
    report.metrics.append(_metric("forced_fit_residual", fit.residual, n=1, gate=False))

    # (b) stochastic growth at amplitude 1 with heavy-tailed noise
    noise = StableParams(alpha=cfg.alpha_large, c=cfg.c, d=2)
    times, paths = sde_path_ensemble(field2, 1.0, noise, np.zeros(2), grid, cfg.n_runs,
                                     cfg.seed, stream0=0, thinning=store_thin, threads=cfg.threads)
    good = 0
    ratios = []
    for i in range(cfg.n_runs):
        traj_i = _subpath(times, paths[i], cfg.h_large, store_thin, field2.name, noise)
        r_end = float(np.linalg.norm(traj_i.states[-1]))
        ratio = r_end ** (1.0 - cfg.beta) / ((1.0 - cfg.beta) * cfg.T_large)
        ratios.append(ratio)
        try:
            _, diag_i = limit_angle(traj_i, tail_fraction=0.2)
        except ValueError:
            diag_i = np.inf
        if 0.9 <= ratio <= 1.1 and diag_i < 0.1:
            good += 1
    report.metrics.append(_metric(
        "stochastic_good_runs", good, ge=int(np.ceil(0.8 * cfg.n_runs)),
        n=cfg.n_runs, seeds=f"seed {cfg.seed}, streams 0-{cfg.n_runs - 1}",
    ))
    report.metrics.append(_metric("stochastic_mean_growth_ratio", float(np.mean(ratios)), gate=False,
                                  n=cfg.n_runs))

    # (c) bounded counterexample orbit
    pair = counterexample_pair(cfg.ce_n, cfg.beta)
    grid_ce = make_grid(cfg.T_counter, cfg.h_counter)
    thin_ce = max(1, len(grid_ce) // 20000)
    ce = integrate_with_forcing(pair.field, pair.forcing, np.array([float(cfg.ce_n), 0.0]),
                                grid_ce, thinning=thin_ce)
    sup_r = float(np.max(ce.radii()))
    report.metrics.append(_metric("counterexample_sup_radius", sup_r, le=float(cfg.ce_n + 2),
                                  n=1, seeds="deterministic"))
    _, ce_diag = limit_angle(ce, tail_fraction=0.2)
    report.metrics.append(_metric("counterexample_angle_diag", ce_diag, gt=0.1,
                                  n=1, seeds="deterministic"))
    xi_sup = float(np.max(np.linalg.norm(pair.forcing(grid_ce[:: max(1, thin_ce)]), axis=-1)))
    report.metrics.append(_metric("counterexample_forcing_sup", xi_sup, le=1.0, n=1))
    report.notes.append(f"counterexample block length sigma = {pair.sigma!r}")

    report.artifacts["forced_trajectory.csv"] = (
        "csv", "t," + ",".join(f"x{j + 1}" for j in range(2)),
        np.column_stack([forced.times, forced.states]),
    )
    report.artifacts["counterexample_trajectory.csv"] = (
        "csv", "t,x1,x2", np.column_stack([ce.times, ce.states]),
    )
    report.artifacts["growth_ratios.csv"] = ("csv", "run,ratio",
                                             np.column_stack([np.arange(cfg.n_runs), ratios]))
    return report


def _subpath(times, states, h, thinning, field_name, noise: StableParams):
    from .engine import Trajectory

    return Trajectory(times=times, states=states, epsilon=1.0, field_name=field_name,
                      alpha=noise.alpha, c=noise.c, h=h, thinning=thinning)


# ---------------------------------------------------------------------------
# exit-angle distribution
# ---------------------------------------------------------------------------

def run_exit_distribution(cfg: ExperimentConfig) -> ExperimentReport:
    """Exit-angle law at radius R and 2R, with oracle and stability checks."""
    report = _new_report(cfg)
    field = _field_from_config(cfg)
    noise = StableParams(alpha=cfg.alpha, c=cfg.c, d=cfg.d)
    sample_r = exit_angle_distribution(field, noise, cfg.R, cfg.N, cfg.seed, stream0=0,
                                       h=cfg.h_exit, horizon_factor=cfg.horizon_factor,
                                       threads=cfg.threads)
    sample_2r = exit_angle_distribution(field, noise, 2.0 * cfg.R, cfg.N, cfg.seed,
                                        stream0=cfg.N, h=cfg.h_exit,
                                        horizon_factor=cfg.horizon_factor, threads=cfg.threads)
    seeds_note = f"seed {cfg.seed}, streams 0-{2 * cfg.N - 1}"
    report.metrics.append(_metric("non_exit_fraction_R", sample_r.meta["n_no_exit"] / cfg.N,
                                  le=0.01, n=cfg.N, seeds=seeds_note))
    if cfg.d == 1:
        p_r, p_2r = sample_r.prob_plus(), sample_2r.prob_plus()
        if cfg.a_plus == cfg.a_minus:
            report.metrics.append(_metric("p_plus", p_r, within=(0.485, 0.515),
                                          n=cfg.N, seeds=seeds_note))
        else:
            report.metrics.append(_metric("p_plus", p_r, n=cfg.N, seeds=seeds_note, gate=False))
        report.metrics.append(_metric("r_stability_gap", abs(p_r - p_2r), lt=0.04,
                                      n=cfg.N, seeds=seeds_note))
        if cfg.alpha == 2.0:
            oracle = scale_function_oracle_1d(cfg.a_plus, cfg.a_minus, cfg.beta, cfg.R, cfg.c)
            oracle_2r = scale_function_oracle_1d(cfg.a_plus, cfg.a_minus, cfg.beta, 2.0 * cfg.R, cfg.c)
            report.metrics.append(_metric("oracle_p_plus", oracle, gate=False))
            report.metrics.append(_metric("oracle_gap", abs(p_r - oracle), lt=0.03,
                                          n=cfg.N, seeds=seeds_note))
            report.metrics.append(_metric("oracle_r_stability", abs(oracle - oracle_2r), lt=1e-3))
        else:
            report.notes.append("no closed-form oracle for alpha < 2; validated by symmetry and R-stability")
    elif cfg.d == 2:
        th_r, th_2r = sample_r.thetas(), sample_2r.thetas()
        if field.exact_model and cfg.field == "model":
            report.metrics.append(_metric("uniformity_ks", stats.ks_uniform_circle(th_r),
                                          lt=0.03, n=cfg.N, seeds=seeds_note))
        report.metrics.append(_metric("r_stability_ks", stats.ks_distance(th_r, th_2r),
                                      lt=0.04, n=cfg.N, seeds=seeds_note))
    header = ",".join(f"x{j + 1}" for j in range(cfg.d))
    report.artifacts["angle_sample_R.csv"] = ("csv", header, sample_r.samples)
    report.artifacts["angle_sample_R.json"] = ("json", sample_r.meta)
    report.artifacts["angle_sample_2R.csv"] = ("csv", header, sample_2r.samples)
    report.artifacts["angle_sample_2R.json"] = ("json", sample_2r.meta)
    return report


# ---------------------------------------------------------------------------
# modulus-of-continuity diagnostic
# ---------------------------------------------------------------------------

def _oscillation_event(path: np.ndarray, lag_steps: int, mu: float) -> bool:
    """Whether two states within lag_steps grid steps differ by at least mu."""
    for lag in range(1, lag_steps + 1):
        diff = path[lag:] - path[:-lag]
        if np.any(np.linalg.norm(diff, axis=-1) >= mu):
            return True
    return False


def run_modulus_diagnostic(cfg: ExperimentConfig) -> ExperimentReport:
    """P(some close pair of times moves by mu) per amplitude; trend in eps.

    Informational support for tightness of the family: the probability of a
    mu-sized oscillation within a mod_delta window should not increase as
    the amplitude shrinks.
    """
    report = _new_report(cfg)
    field = _field_from_config(cfg)
    noise = StableParams(alpha=cfg.alpha, c=cfg.c, d=cfg.d)
    grid = make_grid(cfg.T, cfg.h)
    lag_steps = max(1, int(round(cfg.mod_delta / cfg.h)))
    probs = []
    for k, eps in enumerate(cfg.eps_list):
        _, paths = sde_path_ensemble(field, eps, noise, np.zeros(cfg.d), grid, cfg.N,
                                     cfg.seed, stream0=k * cfg.N, threads=cfg.threads)
        events = sum(_oscillation_event(paths[i], lag_steps, cfg.mod_mu) for i in range(cfg.N))
        probs.append(events / cfg.N)
    seeds_note = f"seed {cfg.seed}, streams 0-{len(cfg.eps_list) * cfg.N - 1}"
    for eps, p in zip(cfg.eps_list, probs):
        report.metrics.append(_metric(f"oscillation_p_eps{eps:g}", p, n=cfg.N,
                                      seeds=seeds_note, gate=False))
    report.metrics.append(_metric("oscillation_trend_gap", probs[-1] - probs[0], le=0.0,
                                  n=cfg.N, seeds=seeds_note))
    report.artifacts["oscillation_vs_eps.csv"] = (
        "csv", "eps,probability", np.column_stack([cfg.eps_list, probs]),
    )
    return report


# ---------------------------------------------------------------------------
# report output
# ---------------------------------------------------------------------------

def write_report(report: ExperimentReport, outdir: str) -> str:
    """Write report.json and the CSV/JSON artifacts; returns the report path."""
    os.makedirs(outdir, exist_ok=True)
    path = os.path.join(outdir, "report.json")
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    for fname, payload in report.artifacts.items():
        target = os.path.join(outdir, fname)
        if payload[0] == "csv":
            _, header, rows = payload
            np.savetxt(target, np.asarray(rows), delimiter=",", header=header,
                       comments="", fmt="%.17g")
        elif payload[0] == "json":
            with open(target, "w") as fh:
                json.dump(payload[1], fh, indent=2, sort_keys=True)
                fh.write("\n")
        else:
            raise ValueError(f"unknown artifact kind {payload[0]!r}")
    return path


RUNNERS = {
    "noise-selftest": run_noise_selftest,
    "scaling": run_scaling_check,
    "convergence": run_zero_noise_convergence,
    "large-time": run_large_time,
    "exit-dist": run_exit_distribution,
    "modulus": run_modulus_diagnostic,
}
