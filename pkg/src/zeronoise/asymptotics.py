"""Limit objects: closed-form solutions, limit angles, radial growth, exit laws.

The long-time behaviour of every growing trajectory here is governed by the
closed form r(t) = (a_bar(phi) (1-beta) t)^(1/(1-beta)) with a frozen
direction phi; the estimators in this module measure how fast simulated
paths settle onto that template and sample the law of the settled direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import integrate as spi

from . import stats
from .engine import Trajectory, sde_exit_ensemble
from .fields import FieldSpec
from .stable_noise import StableParams

__all__ = [
    "AngleSample",
    "RadialFit",
    "PolarSolution",
    "closed_form_solution",
    "limit_angle",
    "radial_fit",
    "exit_angle_distribution",
    "scale_function_oracle_1d",
    "polar_ode_solve",
]


@dataclass(frozen=True)
class AngleSample:
    """Empirical distribution of unit vectors on the sphere, with provenance."""

    samples: np.ndarray  # (n, d), unit rows
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self) -> None:
        norms = np.linalg.norm(self.samples, axis=1)
        if not np.all(np.abs(norms - 1.0) < 1e-10):
            raise ValueError("angle samples must have unit norm to 1e-10")

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    def thetas(self) -> np.ndarray:
        """Planar angles in [0, 2pi); only defined for d = 2."""
        if self.d != 2:
            raise ValueError("thetas() requires d = 2")
        return np.mod(np.arctan2(self.samples[:, 1], self.samples[:, 0]), 2.0 * np.pi)

    def prob_plus(self) -> float:
        """Fraction of +1 samples; only defined for d = 1."""
        if self.d != 1:
            raise ValueError("prob_plus() requires d = 1")
        return float(np.mean(self.samples[:, 0] > 0.0))


@dataclass(frozen=True)
class RadialFit:
    """Fitted growth constant of r(t) ~ ((1-beta) a_hat t)^(1/(1-beta))."""

    a_bar_hat: float
    window: tuple[float, float]
    residual: float

    def __post_init__(self) -> None:
        if not self.a_bar_hat > 0.0:
            raise ValueError("fitted constant must be positive")
        if not np.isfinite(self.residual):
            raise ValueError("residual must be finite")


def closed_form_solution(a_bar_at_phi: float, beta: float, t0: float, phi, t):
    """Solution of the limit equation along a fixed direction.

    Returns (a_bar (1-beta) (t - t0))^(1/(1-beta)) phi for t >= t0 and the
    zero vector on [0, t0]; vectorized over t (returns (len(t), d) for array
    input).
    """
    if not abs(beta) < 1.0:
        raise ValueError(f"|beta| < 1 required, got {beta}")
    if a_bar_at_phi <= 0.0:
        raise ValueError("a_bar must be positive")
    phi = np.asarray(phi, dtype=float)
    t_arr = np.asarray(t, dtype=float)
    rad = np.where(t_arr >= t0, (a_bar_at_phi * (1.0 - beta) * np.maximum(t_arr - t0, 0.0)) ** (1.0 / (1.0 - beta)), 0.0)
    out = rad[..., None] * phi
    return out if t_arr.ndim else out.reshape(phi.shape)


def limit_angle(traj: Trajectory, tail_fraction: float = 0.2):
    """Final direction and a settledness diagnostic over the tail window.

    Returns (phi_hat, cauchy_diag): phi_hat is the direction at the final
    time and cauchy_diag the largest geodesic distance between directions
    sampled in the last ``tail_fraction`` of the time span.  Small diagnostic
    means the angle has settled; order-one means it has not.
    """
    if not 0.0 < tail_fraction < 1.0:
        raise ValueError("tail_fraction must be in (0, 1)")
    t = traj.times
    cutoff = t[-1] - tail_fraction * (t[-1] - t[0])
    window = t >= cutoff
    r = traj.radii()
    if np.any(r[window] <= 0.0):
        raise ValueError("radius must stay positive on the tail window")
    angles = traj.states[window] / r[window][:, None]
    phi_hat = angles[-1]
    return phi_hat, stats.angular_diameter(angles)


def radial_fit(traj: Trajectory, beta: float, window: tuple[float, float]) -> RadialFit:
    """Least-squares growth constant over a time window.

    Fits r(t)^(1-beta) = s t + b, reports a_hat = s / (1-beta) and the
    maximum relative deviation of r^(1-beta) from the fitted line.
    """
    lo, hi = window
    mask = (traj.times >= lo) & (traj.times <= hi)
    if np.count_nonzero(mask) < 2:
        raise ValueError("window must contain at least two stored points")
    r = traj.radii()[mask]
    if np.any(r <= 0.0):
        raise ValueError("radii must be positive on the fit window")
    t = traj.times[mask]
    y = r ** (1.0 - beta)
    slope, intercept = np.polyfit(t, y, 1)
    fit = slope * t + intercept
    residual = float(np.max(np.abs(y - fit) / np.abs(y)))
    return RadialFit(a_bar_hat=float(slope / (1.0 - beta)), window=(float(lo), float(hi)), residual=residual)


def exit_angle_distribution(field: FieldSpec, noise: StableParams, R: float, N: int,
                            seed: int, *, stream0: int = 0, h: float = 5e-3,
                            horizon_factor: float = 10.0, threads: int = 1) -> AngleSample:
    """Empirical law of the direction at first exit from radius R.

    Runs the amplitude-1 equation from the origin until the radius reaches R
    and records the exit direction; for R large this approximates the law of
    the limiting direction at infinity, with error shrinking in R.  The
    horizon is ``horizon_factor`` times the noiseless time-to-R; individual
    non-exits are dropped and counted, more than 1% of them is an error.
    """
    if N < 100:
        raise ValueError("N must be at least 100")
    if R <= 0.0:
        raise ValueError("R must be positive")
    angles = _sphere_probe(field.d)
    a_min = float(np.min(np.asarray(field.a_bar(angles))))
    t_flow = R ** (1.0 - field.beta) / ((1.0 - field.beta) * a_min)
    t_max = horizon_factor * t_flow
    ens = sde_exit_ensemble(field, 1.0, noise, np.zeros(field.d), R, h, t_max, N,
                            seed, stream0=stream0, threads=threads)
    n_fail = int(np.count_nonzero(~ens.exited))
    if n_fail > 0.01 * N:
        raise RuntimeError(
            f"{n_fail}/{N} trajectories did not reach radius {R} within t = {t_max:g}; "
            "the horizon does not match R"
        )
    samples = ens.angles()[ens.exited]
    meta = {
        "field": field.name,
        "alpha": noise.alpha,
        "c": noise.c,
        "beta": field.beta,
        "d": field.d,
        "R": R,
        "h": h,
        "N": N,
        "n_exited": int(np.count_nonzero(ens.exited)),
        "n_no_exit": n_fail,
        "seed": seed,
        "streams": [stream0, stream0 + N - 1],
    }
    return AngleSample(samples=samples, meta=meta)


def _sphere_probe(d: int, n: int = 64) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    g = np.random.Generator(np.random.Philox(key=np.array([0, 0], dtype=np.uint64)))
    v = g.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def scale_function_oracle_1d(a_plus: float, a_minus: float, beta: float, R: float,
                             c: float = 1.0) -> float:
    """Exit probability oracle for the 1-d Gaussian case (alpha = 2 only).

    For dX = b(X)dt + dB_2 with b(x) = a_sign(x) |x|^beta sign(x) and B_2 of
    variance 2ct, the scale density is s'(y) = exp(-B(y)/c) with
    B(y) = a_sign(y) |y|^(beta+1)/(beta+1), and

        P(hit +R before -R | X(0) = 0) = I_minus / (I_plus + I_minus),
        I_pm = int_0^R exp(-a_pm y^(beta+1) / ((beta+1) c)) dy.

    Deterministic adaptive quadrature, tolerance 1e-8.  Valid only for the
    Gaussian driver; no closed form exists for alpha < 2.
    """
    if a_plus <= 0.0 or a_minus <= 0.0:
        raise ValueError("a_plus and a_minus must be positive")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must be in (0, 1)")
    if R <= 0.0 or c <= 0.0:
        raise ValueError("R and c must be positive")

    def integrand(y: float, a: float) -> float:
        return float(np.exp(-a * y ** (beta + 1.0) / ((beta + 1.0) * c)))

    results = []
    for a in (a_plus, a_minus):
        val, err = spi.quad(integrand, 0.0, R, args=(a,), epsabs=1e-12, epsrel=1e-10, limit=200)
        if err > 1e-8 * max(1.0, abs(val)):
            raise RuntimeError(f"quadrature did not converge: estimated error {err:g}")
        results.append(val)
    i_plus, i_minus = results
    return i_minus / (i_plus + i_minus)


@dataclass(frozen=True)
class PolarSolution:
    """Radius and direction of the polar system on an output grid."""

    times: np.ndarray   # (m,)
    radii: np.ndarray   # (m,)
    angles: np.ndarray  # (m, d), renormalized to the unit sphere
    renorm_drift: float  # largest |1 - |Phi|| seen before renormalization

    def states(self) -> np.ndarray:
        return self.radii[:, None] * self.angles


def polar_ode_solve(a, b, beta: float, delta: float, r0: float, phi0, T: float,
                    *, d: int | None = None, n_grid: int = 20000, n_out: int = 512) -> PolarSolution:
    """Solve dR = a(R,Phi) R^beta dt, dPhi = b(R,Phi) R^(beta+delta-1) dt.

    Handles the start at r0 = 0, where both right-hand sides are singular,
    by solving in the time scale where the radius moves at unit speed:
    R~(z) = r0 + z, and Phi~ obeys dPhi~/dz = (b/a)(r0+z, Phi~) (r0+z)^(delta-1).
    The integrable singularity is removed by the substitution u = (r0+z)^delta,
    where the angle equation becomes smooth and is integrated by RK4; the
    physical clock is recovered by inverting A~(z) = int a^{-1} R~^{-beta} dz,
    whose own integrable singularity is removed by w = (r0+z)^(1-beta).

    ``a`` must be positive and bounded away from zero (checked on the grid),
    ``b`` bounded; beta, delta in (0, 1).  For r0 = 0 the result is the
    unique solution with R > 0 for all t > 0 exiting the origin along phi0.
    """
    if not 0.0 < beta < 1.0 or not 0.0 < delta < 1.0:
        raise ValueError("beta and delta must be in (0, 1)")
    if r0 < 0.0:
        raise ValueError("r0 must be nonnegative")
    phi0 = np.asarray(phi0, dtype=float)
    if d is None:
        d = len(phi0)

    def solve_to(z_max: float):
        # angle in the u = (r0+z)^delta variable:
        # dPhi/du = (b/a)(u^(1/delta), Phi) / delta, smooth down to u = 0
        u_lo, u_hi = r0**delta, (r0 + z_max) ** delta
        u_grid = np.linspace(u_lo, u_hi, n_grid + 1)
        hu = (u_hi - u_lo) / n_grid
        phi_grid = np.empty((n_grid + 1, d))
        phi = phi0.astype(float).copy()
        phi_grid[0] = phi
        drift = 0.0

        def rhs(u: float, p: np.ndarray) -> np.ndarray:
            r = u ** (1.0 / delta)
            av = float(a(r, p))
            if av <= 0.0:
                raise ValueError(f"a(r, phi) must be positive; got {av} at r = {r:g}")
            return np.asarray(b(r, p), dtype=float) / (av * delta)

        for i in range(n_grid):
            u = u_grid[i]
            k1 = rhs(u, phi)
            k2 = rhs(u + 0.5 * hu, phi + 0.5 * hu * k1)
            k3 = rhs(u + 0.5 * hu, phi + 0.5 * hu * k2)
            k4 = rhs(u + hu, phi + hu * k3)
            phi = phi + (hu / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            nrm = float(np.linalg.norm(phi))
            drift = max(drift, abs(1.0 - nrm))
            phi = phi / nrm
            phi_grid[i + 1] = phi

        # physical time on the same radial grid, via w = (r0+z)^(1-beta):
        # dA~/dw = a^{-1}(r, Phi~) / (1-beta), again integrable down to w = 0
        r_grid = u_grid ** (1.0 / delta)
        w_grid = r_grid ** (1.0 - beta)
        a_vals = np.array([float(a(r_grid[i], phi_grid[i])) for i in range(n_grid + 1)])
        if np.any(a_vals <= 0.0):
            raise ValueError("a(r, phi) must be positive on the solution grid")
        integrand = 1.0 / (a_vals * (1.0 - beta))
        t_grid = np.concatenate([[0.0], np.cumsum(0.5 * (integrand[1:] + integrand[:-1]) * np.diff(w_grid))])
        return u_grid, r_grid, phi_grid, t_grid, drift

    # initial horizon guess from the largest radial rate seen near the start,
    # doubled until the physical clock covers T
    probe_r = np.linspace(r0, max(2.0 * r0, 1.0), 8)
    a_probe = max(float(a(r, phi0)) for r in probe_r)
    z_max = ((1.0 - beta) * 1.5 * max(a_probe, 1e-12) * T + r0 ** (1.0 - beta)) ** (1.0 / (1.0 - beta))
    z_max = max(z_max - r0, r0, 1e-6)
    for _ in range(8):
        u_grid, r_grid, phi_grid, t_grid, renorm_drift = solve_to(z_max)
        if t_grid[-1] >= T:
            break
        z_max *= 2.0
    else:
        raise RuntimeError("could not cover the requested horizon; a(r, phi) may be unbounded")

    times = np.linspace(0.0, T, n_out + 1)
    radii = r0 + np.interp(times, t_grid, r_grid - r0)
    angles = np.empty((len(times), d))
    u_of_t = radii**delta
    for j in range(d):
        angles[:, j] = np.interp(u_of_t, u_grid, phi_grid[:, j])
    norms = np.linalg.norm(angles, axis=1)
    angles = angles / np.where(norms > 0.0, norms, 1.0)[:, None]
    return PolarSolution(times=times, radii=radii, angles=angles, renorm_drift=renorm_drift)
