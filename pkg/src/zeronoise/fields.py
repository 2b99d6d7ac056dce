"""Vector fields with radial/tangential structure and the built-in field library.

A field is a total map A: R^d -> R^d with A(0) = 0 that decays or grows like
a_bar(phi) r^beta along the radius.  All library fields evaluate on batched
inputs of shape (..., d).  Library names: "model", "sign1d", "angular-cosine",
"counterexample", "custom-table".
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

__all__ = [
    "FieldSpec",
    "PolarPoint",
    "AsymptoticsReport",
    "CounterexamplePair",
    "power_map",
    "decompose",
    "model_field",
    "truncated_model_field",
    "angular_cosine_field",
    "custom_table_field",
    "counterexample_pair",
    "get_field",
    "asymptotic_validate",
]

# Radius floor guarding r^(beta-1) evaluations when beta < 0.  A numerical
# guard only: the exact convention A(0) = 0 is applied separately.
R_MIN = 1e-8


def _unit_angles(d: int, n: int = 64, seed: int = 0) -> np.ndarray:
    """Deterministic sample of unit vectors used for grid checks."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=1)
    g = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    v = g.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@dataclass(frozen=True)
class FieldSpec:
    """A drift field together with its declared power-law asymptotic data.

    ``A`` evaluates on arrays of shape (..., d).  ``a_bar`` maps unit vectors
    of shape (..., d) to positive scalars; ``asymptotics_at`` declares where
    the radial equivalence <A(x), phi> ~ a_bar(phi) r^beta holds: "zero",
    "infinity" or "both".
    """

    name: str
    d: int
    A: Callable[[np.ndarray], np.ndarray]
    beta: float
    gamma: float
    a_bar: Callable[[np.ndarray], np.ndarray]
    asymptotics_at: str = "both"
    exact_model: bool = False  # True iff A(x) = a_bar(phi) r^beta phi globally

    def __post_init__(self) -> None:
        if not abs(self.beta) < 1.0:
            raise ValueError(f"|beta| < 1 required, got {self.beta}")
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.asymptotics_at not in ("zero", "infinity", "both"):
            raise ValueError(f"unknown asymptotics flag {self.asymptotics_at!r}")
        if self.d < 1:
            raise ValueError(f"dimension d must be >= 1, got {self.d}")
        origin = np.zeros(self.d)
        if not np.allclose(self.A(origin), 0.0):
            raise ValueError("A(0) must be the zero vector")
        vals = np.asarray(self.a_bar(_unit_angles(self.d)))
        if not np.all(vals > 0.0):
            raise ValueError("a_bar must be strictly positive on the sphere")


@dataclass(frozen=True)
class PolarPoint:
    """Radius and unit direction of a point; phi = e_1 by convention at r = 0."""

    r: float
    phi: np.ndarray

    @classmethod
    def from_cartesian(cls, x) -> "PolarPoint":
        x = np.asarray(x, dtype=float)
        r = float(np.linalg.norm(x))
        if r == 0.0:
            phi = np.zeros(len(x))
            phi[0] = 1.0
            return cls(r=0.0, phi=phi)
        return cls(r=r, phi=x / r)

    def to_cartesian(self) -> np.ndarray:
        return self.r * self.phi

    def __post_init__(self) -> None:
        if self.r < 0.0:
            raise ValueError("radius must be nonnegative")
        if self.r > 0.0 and not np.isclose(np.linalg.norm(self.phi), 1.0, atol=1e-10):
            raise ValueError("phi must be a unit vector when r > 0")


def _radii(x: np.ndarray) -> np.ndarray:
    return np.linalg.norm(x, axis=-1, keepdims=True)


def power_map(x, beta: float) -> np.ndarray:
    """x^beta := |x|^(beta-1) x, with 0^beta := 0.  Total for every beta."""
    x = np.asarray(x, dtype=float)
    r = _radii(x)
    safe = np.where(r > 0.0, r, 1.0)
    return np.where(r > 0.0, safe ** (beta - 1.0) * x, 0.0)


def decompose(fieldspec: FieldSpec, x) -> tuple[np.ndarray, np.ndarray]:
    """Split A(x) into the radial part <A, phi> phi and the tangential rest.

    Requires x != 0 (rows of a batch included); A_rad + A_tan reassembles
    A(x) exactly and <A_tan, x> = 0.
    """
    x = np.asarray(x, dtype=float)
    r = _radii(x)
    if np.any(r == 0.0):
        raise ValueError("decompose requires x != 0")
    phi = x / r
    a = fieldspec.A(x)
    a_rad = np.sum(a * phi, axis=-1, keepdims=True) * phi
    return a_rad, a - a_rad


def _as_a_bar(a_bar) -> Callable[[np.ndarray], np.ndarray]:
    if callable(a_bar):
        return a_bar
    const = float(a_bar)
    return lambda phi: np.full(np.asarray(phi).shape[:-1], const)


def model_field(a_bar, beta: float, d: int, *, gamma: float = 0.5, name: str = "model") -> FieldSpec:
    """Purely radial field A(x) = a_bar(phi) r^beta phi, exact at 0 and infinity.

    ``a_bar`` is a positive constant or a callable on unit vectors.  For
    beta < 0 the singular magnitude is clipped at radius R_MIN.
    """
    ab = _as_a_bar(a_bar)
    if not abs(beta) < 1.0:
        raise ValueError(f"|beta| < 1 required, got {beta}")
    vals = np.asarray(ab(_unit_angles(d)))
    if not np.all(vals > 0.0):
        raise ValueError("a_bar must be strictly positive on the sphere")

    def A(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = _radii(x)
        safe = np.where(r > 0.0, np.maximum(r, R_MIN if beta < 0.0 else 0.0), 1.0)
        phi = np.where(r > 0.0, x / safe, 0.0)
        amp = np.asarray(ab(np.where(r > 0.0, x / safe, 1.0)))[..., None]
        return np.where(r > 0.0, amp * safe**beta * phi, 0.0)

    return FieldSpec(name=name, d=d, A=A, beta=beta, gamma=gamma, a_bar=ab,
                     asymptotics_at="both", exact_model=True)


def _smooth_saturation(r: np.ndarray, beta: float) -> np.ndarray:
    """C^1 radial profile: r^beta below 1, saturating to 1 + beta above 1.

    Value and slope match at r = 1 (both sides give 1 and beta), so the
    global Lipschitz property away from the origin holds by construction.
    """
    r = np.asarray(r, dtype=float)
    inner = np.where(r > 0.0, np.where(r < 1.0, r, 1.0), 1.0) ** beta
    outer = 1.0 + beta * (1.0 - 1.0 / np.maximum(r, 1.0))
    return np.where(r < 1.0, np.where(r > 0.0, inner, 0.0), outer)


def truncated_model_field(a_bar, beta: float, d: int, *, gamma: float = 0.5, name: str = "sign1d") -> FieldSpec:
    """Model field near the origin, smoothly saturated to a bounded drift at r >= 1.

    A(x) = a_bar(phi) s(r) phi with s(r) = r^beta for r <= 1 and a C^1
    bounded continuation beyond; coincides exactly with the model field
    inside the unit ball, so small-noise runs that stay there see the pure
    power drift while the field stays globally well behaved.
    """
    ab = _as_a_bar(a_bar)

    def A(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = _radii(x)
        safe = np.where(r > 0.0, r, 1.0)
        phi = np.where(r > 0.0, x / safe, 0.0)
        amp = np.asarray(ab(np.where(r > 0.0, x / safe, 1.0)))[..., None]
        return amp * _smooth_saturation(r, beta) * phi

    return FieldSpec(name=name, d=d, A=A, beta=beta, gamma=gamma, a_bar=ab, asymptotics_at="zero")


def angular_cosine_field(beta: float, amp: float = 0.3, *, gamma: float = 0.5) -> FieldSpec:
    """Planar model field with angle-dependent rate a_bar(theta) = 1 + amp cos(theta)."""
    if not -1.0 < amp < 1.0:
        raise ValueError("amplitude must be in (-1, 1) to keep a_bar positive")

    def ab(phi: np.ndarray) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        return 1.0 + amp * phi[..., 0]

    return model_field(ab, beta, 2, gamma=gamma, name="angular-cosine")


def custom_table_field(beta: float, d: int, thetas, values, *, gamma: float = 0.5) -> FieldSpec:
    """Model field with a_bar given by a table.

    d = 2: (theta_i, a_i) pairs, periodic linear interpolation on [0, 2pi).
    d = 1: two values (a at -1, a at +1).
    """
    vals = np.asarray(values, dtype=float)
    if np.any(vals <= 0.0):
        raise ValueError("table values must be positive")
    if d == 1:
        if len(vals) != 2:
            raise ValueError("1-d table needs exactly (a_minus, a_plus)")
        a_minus, a_plus = vals

        def ab1(phi: np.ndarray) -> np.ndarray:
            phi = np.asarray(phi, dtype=float)
            return np.where(phi[..., 0] > 0.0, a_plus, a_minus)

        return model_field(ab1, beta, 1, gamma=gamma, name="custom-table")
    if d == 2:
        th = np.mod(np.asarray(thetas, dtype=float), 2.0 * np.pi)
        order = np.argsort(th)
        th, tv = th[order], vals[order]
        th_ext = np.concatenate([th, [th[0] + 2.0 * np.pi]])
        tv_ext = np.concatenate([tv, [tv[0]]])

        def ab2(phi: np.ndarray) -> np.ndarray:
            phi = np.asarray(phi, dtype=float)
            ang = np.mod(np.arctan2(phi[..., 1], phi[..., 0]), 2.0 * np.pi)
            shifted = np.where(ang < th_ext[0], ang + 2.0 * np.pi, ang)
            return np.interp(shifted, th_ext, tv_ext)

        return model_field(ab2, beta, 2, gamma=gamma, name="custom-table")
    raise ValueError("custom-table fields support d in {1, 2}")


@dataclass(frozen=True)
class CounterexamplePair:
    """Field plus bounded forcing whose forced solution is a closed loop."""

    field: FieldSpec
    forcing: Callable[[np.ndarray], np.ndarray]
    sigma: float

    def __iter__(self):
        return iter((self.field, self.forcing))


def counterexample_period(n: int, beta: float) -> float:
    """Block length sigma = ((n+1)^(1-beta) - n^(1-beta)) / (1-beta)."""
    return ((n + 1.0) ** (1.0 - beta) - float(n) ** (1.0 - beta)) / (1.0 - beta)


def counterexample_pair(n: int, beta: float, *, zone_margin: float = 0.5) -> CounterexamplePair:
    """Planar field and alternating unit step forcing with a bounded forced orbit.

    The radial part is r^beta phi away from the annulus around [n, n+1]; the
    forcing alternates between (0,0) and (1,0) on blocks of length sigma.
    Inside the annulus a steering term turns the state by half a revolution
    per transit n -> n+1, so each unit step of the forcing lands the state
    back on (n, 0) or (-n, 0): the forced solution from (n, 0) returns to
    (n, 0) at every even multiple of sigma and never leaves radius n + 1.

    Numerical realization.  The loop with unit radial rate and constant-rate
    steering is a repelling cycle (radius and phase deviations grow by the
    factors ((n+1)/n)^beta and (n+1)/n per block), so no finite-precision
    integration tracks it over long horizons.  Inside the steering zone the
    radial rate is therefore reshaped to a(r) = c0 (n/r)^(beta+3), which has
    the same transit time n -> n+1 = sigma but contracts radius deviations,
    and the turning rate is locked to the radius through the invariant
    u = phi - kappa log(r/n), making the loop attracting while keeping the
    exact orbit identical outside the annulus.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must be in (0, 1)")
    nf = float(n)
    sigma = counterexample_period(n, beta)
    kappa = np.pi / np.log((nf + 1.0) / nf)
    p = beta + 3.0
    # transit-time calibration: int_n^(n+1) dr / (a(r) r^beta) = sigma
    c0 = ((nf + 1.0) ** (p - beta + 1.0) - nf ** (p - beta + 1.0)) / ((p - beta + 1.0) * nf**p * sigma)
    mu = 12.0
    zone_lo, zone_hi = nf - zone_margin, nf + 1.0 + zone_margin

    def A(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = _radii(x)
        safe = np.where(r > 0.0, r, 1.0)
        phi = np.where(r > 0.0, x / safe, 0.0)
        perp = np.stack([-phi[..., 1], phi[..., 0]], axis=-1)
        inside = (r >= zone_lo) & (r <= zone_hi)
        a = np.where(inside, c0 * (nf / safe) ** p, 1.0)
        two_u = 2.0 * (np.arctan2(x[..., 1:2], x[..., 0:1]) - kappa * np.log(safe / nf))
        steer = np.where(inside, (kappa * a - 0.5 * mu * np.sin(two_u)) * safe**beta, 0.0)
        return np.where(r > 0.0, a * safe**beta * phi + steer * perp, 0.0)

    def ab(phi: np.ndarray) -> np.ndarray:
        return np.ones(np.asarray(phi).shape[:-1])

    spec = FieldSpec(name="counterexample", d=2, A=A, beta=beta, gamma=0.5, a_bar=ab, asymptotics_at="infinity")

    def forcing(t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        block = np.floor(t / sigma).astype(int)
        out = np.zeros(t.shape + (2,))
        out[..., 0] = (block % 2 == 1).astype(float)
        return out

    return CounterexamplePair(field=spec, forcing=forcing, sigma=sigma)


def get_field(name: str, *, d: int, beta: float, **params) -> FieldSpec:
    """Field library lookup used by experiment configs.

    Knobs: a_const ("model", d >= 2), a_plus/a_minus (1-d variants),
    amp ("angular-cosine"), ce_n ("counterexample"),
    table_thetas/table_values ("custom-table").
    """
    if name == "model":
        if d == 1 and params.get("a_plus", 1.0) != params.get("a_minus", 1.0):
            return custom_table_field(beta, 1, (), (params["a_minus"], params["a_plus"]), gamma=0.5)
        return model_field(params.get("a_const", 1.0), beta, d)
    if name == "sign1d":
        a_plus = params.get("a_plus", 1.0)
        a_minus = params.get("a_minus", 1.0)

        def ab(phi: np.ndarray) -> np.ndarray:
            phi = np.asarray(phi, dtype=float)
            return np.where(phi[..., 0] > 0.0, a_plus, a_minus)

        return truncated_model_field(ab if a_plus != a_minus else a_plus, beta, 1)
    if name == "angular-cosine":
        if d != 2:
            raise ValueError("angular-cosine is a planar field")
        return angular_cosine_field(beta, params.get("amp", 0.3))
    if name == "counterexample":
        if d != 2:
            raise ValueError("counterexample is a planar field")
        return counterexample_pair(params.get("ce_n", 2), beta).field
    if name == "custom-table":
        return custom_table_field(beta, d, params.get("table_thetas", ()), params.get("table_values", ()))
    raise ValueError(f"unknown field {name!r}")


@dataclass(frozen=True)
class AsymptoticsReport:
    """Grid check of the declared radial and tangential power-law behaviour."""

    convention: str
    radii: np.ndarray
    radial_ratios: np.ndarray      # worst |<A,phi> - a_bar r^beta| / r^beta per radius
    tangential_ratios: np.ndarray  # worst |A_tan| / r^(beta +/- gamma) per radius
    radial_ok: bool
    tangential_ok: bool
    violations: tuple[str, ...] = dc_field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return self.radial_ok and self.tangential_ok


def _validate_one_convention(fieldspec: FieldSpec, radii: np.ndarray, angles: np.ndarray, convention: str,
                             atol: float, grow_tol: float) -> AsymptoticsReport:
    # order radii from farthest to nearest the declared limit point
    order = np.argsort(radii)[::-1] if convention == "zero" else np.argsort(radii)
    rr = radii[order]
    tan_exp = fieldspec.beta + fieldspec.gamma if convention == "zero" else fieldspec.beta - fieldspec.gamma
    ab_vals = np.asarray(fieldspec.a_bar(angles))
    radial_ratios, tangential_ratios = [], []
    for r in rr:
        x = r * angles
        a_rad, a_tan = decompose(fieldspec, x)
        rad_mag = np.sum(a_rad * (x / r), axis=-1)
        radial_ratios.append(float(np.max(np.abs(rad_mag - ab_vals * r**fieldspec.beta)) / r**fieldspec.beta))
        tangential_ratios.append(float(np.max(np.linalg.norm(a_tan, axis=-1)) / r**tan_exp))
    radial_ratios = np.asarray(radial_ratios)
    tangential_ratios = np.asarray(tangential_ratios)
    violations = []
    # radial equivalence is little-o: the ratio must die out toward the limit
    radial_ok = bool(radial_ratios[-1] <= max(atol, 0.5 * radial_ratios[0]))
    if not radial_ok:
        violations.append(
            f"radial ratio does not vanish toward the {convention} limit: "
            f"{radial_ratios[0]:.3e} -> {radial_ratios[-1]:.3e}"
        )
    # tangential bound is big-O: the ratio must stay bounded toward the limit
    tangential_ok = bool(tangential_ratios[-1] <= max(atol, grow_tol * tangential_ratios[0]))
    if not tangential_ok:
        violations.append(
            f"tangential ratio grows toward the {convention} limit: "
            f"{tangential_ratios[0]:.3e} -> {tangential_ratios[-1]:.3e}"
        )
    return AsymptoticsReport(
        convention=convention,
        radii=rr,
        radial_ratios=radial_ratios,
        tangential_ratios=tangential_ratios,
        radial_ok=radial_ok,
        tangential_ok=tangential_ok,
        violations=tuple(violations),
    )


def asymptotic_validate(fieldspec: FieldSpec, radii, angles=None, *, n_angles: int = 64,
                        atol: float = 1e-9, grow_tol: float = 2.0):
    """Check the declared asymptotics of a field on a radius/angle grid.

    At r -> 0 the tangential bound reads |A_tan| <= const r^(beta+gamma); at
    r -> infinity it reads |A_tan| <= const r^(beta-gamma); the radial part
    must satisfy |<A, phi> - a_bar(phi) r^beta| = o(r^beta) in both regimes.
    The two sign conventions are checked exactly as declared and never mixed.
    Returns one report, or a (zero, infinity) tuple for fields declaring both.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0.0):
        raise ValueError("radii must be positive")
    if angles is None:
        angles = _unit_angles(fieldspec.d, n_angles)
    angles = np.asarray(angles, dtype=float)
    if fieldspec.asymptotics_at == "both":
        return (
            _validate_one_convention(fieldspec, radii, angles, "zero", atol, grow_tol),
            _validate_one_convention(fieldspec, radii, angles, "infinity", atol, grow_tol),
        )
    return _validate_one_convention(fieldspec, radii, angles, fieldspec.asymptotics_at, atol, grow_tol)
