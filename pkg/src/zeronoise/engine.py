"""Time integration of the perturbed SDE, the plain ODE and forced equations.

Fixed-step Euler-Maruyama drives the stochastic runs (the noise is additive
and increments are exact in law, so no correction terms arise); the
deterministic ODE uses classical RK4.  Ensembles advance all trajectories in
lockstep with one counter-based stream per trajectory, so serial and
threaded execution produce identical results.

Noise consumption policy: each trajectory draws its increments from its own
stream in fixed-size step blocks whose size is a function of the ensemble
shape only, never of the thread count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fields import FieldSpec
from .stable_noise import StableParams, make_rng, sample_increments

__all__ = [
    "Trajectory",
    "ExitRecord",
    "ExitEnsemble",
    "IntegrationError",
    "SingularityError",
    "make_grid",
    "integrate_sde",
    "integrate_ode",
    "integrate_with_forcing",
    "first_exit",
    "sde_snapshot_ensemble",
    "sde_path_ensemble",
    "sde_exit_ensemble",
    "trajectory_to_csv",
    "trajectory_meta",
    "save_trajectory",
]

# target buffer size (floats) for one block of pre-drawn increments
_CHUNK_TARGET = 2**22
_R_FLOOR = 1e-10


class IntegrationError(RuntimeError):
    """Integration failure; carries the time at which the state went bad."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} at t = {time:g}")
        self.time = time


class SingularityError(IntegrationError):
    """The deterministic solution reached the origin, leaving the Lipschitz region."""


@dataclass(frozen=True)
class Trajectory:
    """Time grid plus states, with the provenance needed to reproduce the run."""

    times: np.ndarray   # (m,)
    states: np.ndarray  # (m, d)
    epsilon: float
    field_name: str = ""
    alpha: float | None = None
    c: float | None = None
    h: float | None = None
    seed: int | None = None
    stream: int | None = None
    thinning: int = 1

    @property
    def d(self) -> int:
        return self.states.shape[1]

    def radii(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def angles(self) -> np.ndarray:
        """Unit directions; rows at the origin get e_1 by convention."""
        r = self.radii()
        safe = np.where(r > 0.0, r, 1.0)
        out = self.states / safe[:, None]
        at_zero = r == 0.0
        if np.any(at_zero):
            out = out.copy()
            out[at_zero] = 0.0
            out[at_zero, 0] = 1.0
        return out

    def state_at(self, t: float) -> np.ndarray:
        """Linear interpolation of the stored states at time t."""
        return np.array([np.interp(t, self.times, self.states[:, j]) for j in range(self.d)])


@dataclass(frozen=True)
class ExitRecord:
    """First-passage data at a radius threshold."""

    tau: float
    state_at_exit: np.ndarray
    angle_at_exit: np.ndarray
    radius_at_exit: float
    overshoot: float


@dataclass(frozen=True)
class ExitEnsemble:
    """First-passage data for a whole ensemble; non-exits are flagged, not errors."""

    delta: float
    tau: np.ndarray      # (n,), nan where not exited
    states: np.ndarray   # (n, d), state at exit (last state where not exited)
    exited: np.ndarray   # (n,) bool

    def angles(self) -> np.ndarray:
        r = np.linalg.norm(self.states, axis=1)
        return self.states / np.where(r > 0.0, r, 1.0)[:, None]

    def overshoots(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1) - self.delta


def make_grid(T: float, h: float) -> np.ndarray:
    """Uniform grid 0, h, 2h, ..., covering [0, T]."""
    if h <= 0.0:
        raise ValueError("step h must be positive")
    n = int(round(T / h))
    if n < 1:
        raise ValueError("horizon shorter than one step")
    return np.arange(n + 1) * h


def _uniform_step(grid: np.ndarray) -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2:
        raise ValueError("grid must contain at least two points")
    dt = np.diff(grid)
    h = dt[0]
    if h <= 0.0 or not np.allclose(dt, h, rtol=1e-9, atol=0.0):
        raise ValueError("grid must be uniform with positive step")
    return float(h)


def _chunk_steps(n_steps: int, n_traj: int, d: int) -> int:
    per_step = max(1, n_traj * d)
    return int(max(16, min(n_steps, _CHUNK_TARGET // per_step, 8192)))


def _draw_block(noise: StableParams, h: float, gens, idx, k: int, eps: float) -> np.ndarray | None:
    """Increments eps*dB for steps [0, k) of the active trajectories, (k, n_active, d)."""
    if eps == 0.0:
        return None
    out = np.empty((k, len(idx), noise.d))
    for j, i in enumerate(idx):
        out[:, j, :] = sample_increments(noise, h, k, gens[i])
    out *= eps
    return out


def _sde_store_block(field: FieldSpec, eps: float, noise: StableParams, x0: np.ndarray, h: float,
                     n_steps: int, seed: int, streams, chunk_steps: int,
                     store_idx: np.ndarray) -> np.ndarray:
    """Lockstep Euler-Maruyama over one block of streams, storing at store_idx.

    Returns (n_store, n, d).  Trajectory j of the block owns the stream
    streams[j]; increments are drawn in blocks of ``chunk_steps`` steps.
    """
    streams = list(streams)
    n = len(streams)
    gens = [make_rng(seed, s) for s in streams] if eps != 0.0 else None
    state = np.broadcast_to(np.asarray(x0, dtype=float), (n, noise.d)).copy()
    stored = np.empty((len(store_idx), n, noise.d))
    pos = 0
    if store_idx[0] == 0:
        stored[0] = state
        pos = 1
    all_idx = np.arange(n)
    k = 0
    while k < n_steps:
        kb = min(chunk_steps, n_steps - k)
        inc = _draw_block(noise, h, gens, all_idx, kb, eps)
        for j in range(kb):
            state = state + field.A(state) * h
            if inc is not None:
                state = state + inc[j]
            if pos < len(store_idx) and store_idx[pos] == k + j + 1:
                stored[pos] = state
                pos += 1
        if not np.all(np.isfinite(state)):
            raise IntegrationError("non-finite state", (k + kb) * h)
        k += kb
    return stored


def _sde_exit_block(field: FieldSpec, eps: float, noise: StableParams, x0: np.ndarray,
                    delta: float, h: float, n_steps: int, seed: int, streams,
                    chunk_steps: int):
    """Lockstep Euler-Maruyama until radius delta, at full grid resolution.

    Trajectories stop consuming noise at their first grid point with radius
    >= delta; the block stops once all have exited or the horizon is hit.
    Returns (tau, exit_states, exited).
    """
    streams = list(streams)
    n = len(streams)
    gens = [make_rng(seed, s) for s in streams] if eps != 0.0 else None
    state = np.broadcast_to(np.asarray(x0, dtype=float), (n, noise.d)).copy()
    tau = np.full(n, np.nan)
    exit_states = state.copy()
    exited = np.linalg.norm(state, axis=1) >= delta
    tau[exited] = 0.0
    idx = np.nonzero(~exited)[0]
    sub = state[idx]
    k = 0
    while k < n_steps and len(idx) > 0:
        kb = min(chunk_steps, n_steps - k)
        inc = _draw_block(noise, h, gens, idx, kb, eps)
        for j in range(kb):
            sub = sub + field.A(sub) * h
            if inc is not None:
                sub = sub + inc[j]
            hit = np.linalg.norm(sub, axis=1) >= delta
            if np.any(hit):
                gidx = idx[hit]
                tau[gidx] = (k + j + 1) * h
                exit_states[gidx] = sub[hit]
                exited[gidx] = True
                keep = ~hit
                idx = idx[keep]
                sub = sub[keep]
                if inc is not None:
                    inc = inc[:, keep, :]
                if len(idx) == 0:
                    break
        if not np.all(np.isfinite(sub)):
            raise IntegrationError("non-finite state", (k + kb) * h)
        k += kb
    exit_states[idx] = sub
    return tau, exit_states, exited


def _split_streams(n: int, stream0: int, threads: int):
    streams = np.arange(stream0, stream0 + n)
    return [b for b in np.array_split(streams, max(1, threads)) if len(b)]


def _run_blocks(worker, blocks, threads: int):
    if threads <= 1 or len(blocks) <= 1:
        return [worker(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, blocks))


def integrate_sde(field: FieldSpec, eps: float, noise: StableParams, x0, grid,
                  seed: int = 0, stream: int = 0, *, thinning: int = 1) -> Trajectory:
    """Euler-Maruyama for dX = A(X)dt + eps dB on a uniform grid.

    X[k+1] = X[k] + A(X[k]) h + eps dB[k] with exact-in-law stable increments.
    eps = 0 runs the same scheme without touching the stream.  Storage keeps
    every ``thinning``-th grid point (first and last always).
    """
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    grid = np.asarray(grid, dtype=float)
    h = _uniform_step(grid)
    n_steps = len(grid) - 1
    store_idx = _thin_indices(n_steps, thinning)
    chunk = _chunk_steps(n_steps, 1, noise.d)
    stored = _sde_store_block(field, eps, noise, np.asarray(x0, dtype=float), h, n_steps,
                              seed, [stream], chunk, store_idx)
    return Trajectory(times=grid[store_idx], states=stored[:, 0, :], epsilon=eps,
                      field_name=field.name, alpha=noise.alpha, c=noise.c, h=h,
                      seed=seed, stream=stream, thinning=thinning)


def _thin_indices(n_steps: int, thinning: int) -> np.ndarray:
    if thinning < 1:
        raise ValueError("thinning must be >= 1")
    idx = np.arange(0, n_steps + 1, thinning)
    if idx[-1] != n_steps:
        idx = np.append(idx, n_steps)
    return idx


def integrate_ode(field: FieldSpec, x0, grid, *, thinning: int = 1, r_floor: float = _R_FLOOR) -> Trajectory:
    """Classical RK4 for dX = A(X)dt from x0 != 0.

    Raises SingularityError if the radius falls below ``r_floor``: the
    solution left the region where the drift is Lipschitz and uniqueness is
    guaranteed.
    """
    x = np.asarray(x0, dtype=float)
    if np.linalg.norm(x) == 0.0:
        raise ValueError("integrate_ode requires x0 != 0")
    grid = np.asarray(grid, dtype=float)
    h = _uniform_step(grid)
    n_steps = len(grid) - 1
    store_idx = _thin_indices(n_steps, thinning)
    stored = np.empty((len(store_idx), len(x)))
    pos = 0
    if store_idx[0] == 0:
        stored[0] = x
        pos = 1
    A = field.A
    for k in range(n_steps):
        k1 = A(x)
        k2 = A(x + 0.5 * h * k1)
        k3 = A(x + 0.5 * h * k2)
        k4 = A(x + h * k3)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationError("non-finite state", grid[k + 1])
        if np.linalg.norm(x) < r_floor:
            raise SingularityError("radius reached 0 within tolerance", grid[k + 1])
        while pos < len(store_idx) and store_idx[pos] == k + 1:
            stored[pos] = x
            pos += 1
    return Trajectory(times=grid[store_idx], states=stored, epsilon=0.0,
                      field_name=field.name, h=h, thinning=thinning)


def integrate_with_forcing(field: FieldSpec, xi: Callable[[np.ndarray], np.ndarray], x0, grid,
                           *, thinning: int = 1) -> Trajectory:
    """Euler scheme for the forced equation dZ = A(Z)dt + dxi.

    Z[k+1] = Z[k] + A(Z[k]) h + (xi(t[k+1]) - xi(t[k])); ``xi`` is evaluated
    on the grid and must satisfy xi(0) = 0.
    """
    x = np.asarray(x0, dtype=float)
    grid = np.asarray(grid, dtype=float)
    h = _uniform_step(grid)
    xi_vals = np.asarray(xi(grid), dtype=float)
    if xi_vals.shape != (len(grid), len(x)):
        raise ValueError("forcing must evaluate to shape (len(grid), d)")
    if not np.allclose(xi_vals[0], 0.0):
        raise ValueError("forcing must satisfy xi(0) = 0")
    d_xi = np.diff(xi_vals, axis=0)
    n_steps = len(grid) - 1
    store_idx = _thin_indices(n_steps, thinning)
    stored = np.empty((len(store_idx), len(x)))
    pos = 0
    if store_idx[0] == 0:
        stored[0] = x
        pos = 1
    A = field.A
    for k in range(n_steps):
        x = x + A(x) * h + d_xi[k]
        if not np.all(np.isfinite(x)):
            raise IntegrationError("non-finite state", grid[k + 1])
        while pos < len(store_idx) and store_idx[pos] == k + 1:
            stored[pos] = x
            pos += 1
    return Trajectory(times=grid[store_idx], states=stored, epsilon=0.0,
                      field_name=field.name, h=h, thinning=thinning)


def first_exit(traj: Trajectory, delta: float) -> ExitRecord | None:
    """First stored grid point with radius >= delta, or None if there is none.

    Jumps may carry the state beyond delta, so the overshoot
    radius - delta can be positive; detection is at the resolution of the
    stored grid.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    r = traj.radii()
    hits = np.nonzero(r >= delta)[0]
    if len(hits) == 0:
        return None
    i = int(hits[0])
    state = traj.states[i]
    radius = float(r[i])
    angle = state / radius if radius > 0.0 else np.eye(1, traj.d, 0)[0]
    return ExitRecord(tau=float(traj.times[i]), state_at_exit=state.copy(),
                      angle_at_exit=angle, radius_at_exit=radius, overshoot=radius - delta)


def sde_snapshot_ensemble(field: FieldSpec, eps: float, noise: StableParams, x0, h: float,
                          snapshot_times, n: int, seed: int, stream0: int = 0,
                          threads: int = 1) -> np.ndarray:
    """States of n independent trajectories at the requested times, (n_snap, n, d).

    Trajectory i uses stream stream0 + i; the output is a deterministic
    function of (config, seed) regardless of ``threads``.
    """
    snap = np.asarray(snapshot_times, dtype=float)
    idx = np.round(snap / h).astype(int)
    if not np.allclose(idx * h, snap, rtol=0.0, atol=1e-9 * max(1.0, float(snap.max()))):
        raise ValueError("snapshot times must lie on the integration grid")
    order = np.argsort(idx)
    idx_sorted = idx[order]
    n_steps = int(idx_sorted[-1])
    chunk = _chunk_steps(n_steps, n, noise.d)

    def worker(streams):
        return _sde_store_block(field, eps, noise, np.asarray(x0, dtype=float), h,
                                n_steps, seed, streams, chunk, idx_sorted)

    parts = _run_blocks(worker, _split_streams(n, stream0, threads), threads)
    out_sorted = np.concatenate(parts, axis=1)
    out = np.empty_like(out_sorted)
    out[order] = out_sorted
    return out


def sde_path_ensemble(field: FieldSpec, eps: float, noise: StableParams, x0, grid, n: int,
                      seed: int, stream0: int = 0, thinning: int = 1, threads: int = 1):
    """Thinned paths of n independent trajectories: (times, states (n, m, d))."""
    grid = np.asarray(grid, dtype=float)
    h = _uniform_step(grid)
    n_steps = len(grid) - 1
    store_idx = _thin_indices(n_steps, thinning)
    chunk = _chunk_steps(n_steps, n, noise.d)

    def worker(streams):
        return _sde_store_block(field, eps, noise, np.asarray(x0, dtype=float), h,
                                n_steps, seed, streams, chunk, store_idx)

    parts = _run_blocks(worker, _split_streams(n, stream0, threads), threads)
    return grid[store_idx], np.concatenate(parts, axis=1).transpose(1, 0, 2)


def sde_exit_ensemble(field: FieldSpec, eps: float, noise: StableParams, x0, delta: float,
                      h: float, t_max: float, n: int, seed: int, stream0: int = 0,
                      threads: int = 1) -> ExitEnsemble:
    """First exits at radius delta for n independent trajectories.

    Detection runs at full grid resolution; trajectories stop consuming
    noise once they exit.  Not exiting within t_max is recorded, not raised.
    """
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    n_steps = int(np.ceil(t_max / h))
    chunk = _chunk_steps(n_steps, n, noise.d)

    def worker(streams):
        return _sde_exit_block(field, eps, noise, np.asarray(x0, dtype=float), delta, h,
                               n_steps, seed, streams, chunk)

    parts = _run_blocks(worker, _split_streams(n, stream0, threads), threads)
    tau = np.concatenate([p[0] for p in parts])
    states = np.concatenate([p[1] for p in parts])
    exited = np.concatenate([p[2] for p in parts])
    return ExitEnsemble(delta=delta, tau=tau, states=states, exited=exited)


def trajectory_to_csv(traj: Trajectory, path) -> None:
    """Write the trajectory as CSV with header t,x1,...,xd."""
    header = "t," + ",".join(f"x{j + 1}" for j in range(traj.d))
    data = np.column_stack([traj.times, traj.states])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.17g")


def trajectory_meta(traj: Trajectory) -> dict:
    return {
        "field": traj.field_name,
        "eps": traj.epsilon,
        "alpha": traj.alpha,
        "c": traj.c,
        "seed": traj.seed,
        "stream": traj.stream,
        "h": traj.h,
        "thinning": traj.thinning,
        "d": traj.d,
        "n_points": int(len(traj.times)),
    }


def save_trajectory(traj: Trajectory, basepath) -> None:
    """Write <basepath>.csv (data) and <basepath>.json (metadata block)."""
    trajectory_to_csv(traj, f"{basepath}.csv")
    with open(f"{basepath}.json", "w") as fh:
        json.dump(trajectory_meta(traj), fh, indent=2, sort_keys=True)
        fh.write("\n")
