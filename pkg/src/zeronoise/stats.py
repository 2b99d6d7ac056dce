"""Distances and diagnostics shared by the statistical experiments.

Kolmogorov-Smirnov distances come from scipy; the 1-Wasserstein distance on
the circle is implemented exactly for empirical measures via the
weighted-median formula, because no scipy primitive covers the circular case.
"""

from __future__ import annotations

import numpy as np
from scipy import stats as sps

__all__ = [
    "ks_distance",
    "ks_uniform_circle",
    "wasserstein_1d",
    "circular_wasserstein",
    "geodesic_distance",
    "angular_diameter",
    "empirical_cf",
]


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|."""
    return float(sps.ks_2samp(np.asarray(a), np.asarray(b)).statistic)


def ks_uniform_circle(theta) -> float:
    """One-sample KS distance of angles (radians) against Uniform[0, 2pi)."""
    th = np.mod(np.asarray(theta, dtype=float), 2.0 * np.pi)
    return float(sps.kstest(th, "uniform", args=(0.0, 2.0 * np.pi)).statistic)


def wasserstein_1d(a, b) -> float:
    """1-Wasserstein distance between two empirical samples on the line."""
    return float(sps.wasserstein_distance(np.asarray(a), np.asarray(b)))


def circular_wasserstein(theta_a, theta_b) -> float:
    """Exact 1-Wasserstein distance between empirical angle samples on the circle.

    Angles in radians; the cost is arc length.  With both empirical CDFs on
    the unit-circumference circle, W1 = min_c int |F_a - F_b - c|, and the
    minimiser is the weighted median of the piecewise-constant difference.
    Exact for empirical measures, O(n log n).
    """
    xa = np.sort(np.mod(np.asarray(theta_a, dtype=float), 2.0 * np.pi)) / (2.0 * np.pi)
    xb = np.sort(np.mod(np.asarray(theta_b, dtype=float), 2.0 * np.pi)) / (2.0 * np.pi)
    na, nb = len(xa), len(xb)
    if na == 0 or nb == 0:
        raise ValueError("empty angle sample")
    pos = np.concatenate([xa, xb])
    jump = np.concatenate([np.full(na, 1.0 / na), np.full(nb, -1.0 / nb)])
    order = np.argsort(pos, kind="stable")
    pos, jump = pos[order], jump[order]
    diff = np.cumsum(jump)  # F_a - F_b on [pos[i], pos[i+1])
    seg = np.empty_like(pos)
    seg[:-1] = np.diff(pos)
    seg[-1] = 1.0 - pos[-1] + pos[0]  # wrap-around segment carries diff[-1] = 0
    # weighted median of diff with weights seg
    o = np.argsort(diff, kind="stable")
    d_sorted, w_sorted = diff[o], seg[o]
    cum = np.cumsum(w_sorted)
    median = d_sorted[np.searchsorted(cum, 0.5 * cum[-1])]
    return float(np.sum(seg * np.abs(diff - median)) * 2.0 * np.pi)


def geodesic_distance(u, v) -> np.ndarray:
    """Arc distance on the unit sphere between unit vectors (broadcasting).

    Uses the chord form 2 asin(|u - v|/2) for nearby vectors (arccos of a
    near-unit dot product floors out around 1e-8) and the antipodal chord
    form near the far end, so the distance is accurate at both extremes.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    dot = np.sum(u * v, axis=-1)
    near = 2.0 * np.arcsin(np.clip(0.5 * np.linalg.norm(u - v, axis=-1), 0.0, 1.0))
    far = np.pi - 2.0 * np.arcsin(np.clip(0.5 * np.linalg.norm(u + v, axis=-1), 0.0, 1.0))
    return np.where(dot >= 0.0, near, far)


def angular_diameter(points: np.ndarray, block: int = 1024) -> float:
    """Largest pairwise geodesic distance within a set of unit vectors.

    Pairwise chord lengths are taken directly in coordinates, so tiny
    diameters are measured to machine precision rather than the arccos floor.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or len(pts) == 0:
        raise ValueError("points must be a nonempty (n, d) array")
    max_chord = 0.0
    for i in range(0, len(pts), block):
        diff = pts[i : i + block, None, :] - pts[None, :, :]
        max_chord = max(max_chord, float(np.linalg.norm(diff, axis=-1).max()))
    return float(2.0 * np.arcsin(np.clip(0.5 * max_chord, 0.0, 1.0)))


def empirical_cf(samples, freqs) -> np.ndarray:
    """Real part of the empirical characteristic function at scalar frequencies.

    For a symmetric law the imaginary part vanishes, so Re E[exp(izX)] =
    E[cos(zX)] is the whole story; ``samples`` is 1-d.
    """
    x = np.asarray(samples, dtype=float)
    z = np.asarray(freqs, dtype=float)
    return np.cos(np.outer(z, x)).mean(axis=1)
