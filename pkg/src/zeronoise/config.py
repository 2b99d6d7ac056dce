"""Experiment configuration: a flat key-value file mirrored into a dataclass.

Config files contain ``key = value`` lines ('#' starts a comment); list
values are comma separated.  Every knob has a default, so a config file only
names what it overrides.  Validation happens at load time and rejects
parameter combinations outside the admissible regime.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace

__all__ = ["ExperimentConfig", "ConfigError", "load_config_file", "build_config", "config_hash"]

EXPERIMENTS = ("convergence", "scaling", "large-time", "exit-dist", "modulus", "noise-selftest")


class ConfigError(Exception):
    """Invalid configuration; the CLI maps this to exit code 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    """All experiment knobs; each runner reads the subset it needs."""

    experiment: str = ""
    field: str = "model"
    alpha: float = 2.0
    beta: float = 0.5
    c: float = 1.0
    d: int = 1
    eps_list: tuple[float, ...] = (0.5, 0.1, 0.02)
    eps: float = 0.5              # single amplitude (scaling experiment)
    delta: float = 0.05           # exit ball radius for small-time statistics
    mu: float = 0.1               # exit-time smallness level
    R: float = 50.0               # exit radius approximating the angle at infinity
    T: float = 1.0
    h: float = 1e-3
    N: int = 2000
    seed: int = 12345
    output_dir: str = "out"
    thinning: int = 1
    threads: int = 1
    # field knobs
    a_const: float = 1.0
    a_plus: float = 1.0
    a_minus: float = 1.0
    amp: float = 0.3
    ce_n: int = 2
    table_thetas: tuple[float, ...] = ()
    table_values: tuple[float, ...] = ()
    # scaling experiment
    t_points: tuple[float, ...] = (1.0,)
    # large-time experiment
    T_large: float = 1e4
    h_large: float = 1e-2
    alpha_large: float = 1.5
    n_runs: int = 10
    x0_norm: float = 10.0
    T_counter: float = 1e3
    h_counter: float = 1e-3
    # exit-distribution experiment
    h_exit: float = 5e-3
    horizon_factor: float = 10.0
    # modulus diagnostic
    mod_mu: float = 0.2
    mod_delta: float = 0.01

    def noise_seed_note(self) -> str:
        return f"seed={self.seed}"


def _parse_value(raw: str, target_type) -> object:
    raw = raw.strip()
    if target_type is float:
        return float(raw)
    if target_type is int:
        return int(raw)
    if target_type is str:
        return raw
    # tuples of floats
    if raw == "":
        return ()
    return tuple(float(v) for v in raw.split(","))


def load_config_file(path: str) -> dict:
    """Parse a flat key-value config file into an override dict."""
    types = {f.name: (float if f.type == "float" else int if f.type == "int" else str if f.type == "str" else tuple)
             for f in fields(ExperimentConfig)}
    overrides: dict = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.rstrip()!r}")
            key, raw = (part.strip() for part in text.split("=", 1))
            if key not in types:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                overrides[key] = _parse_value(raw, types[key])
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: cannot parse value for {key!r}: {exc}") from exc
    return overrides


# experiment-specific defaults applied before user overrides
_EXPERIMENT_DEFAULTS: dict[str, dict] = {
    "noise-selftest": {"N": 100_000},
    "scaling": {"N": 5000},
    "convergence": {"field": "sign1d"},
    "exit-dist": {"N": 10_000},
    "modulus": {"field": "sign1d", "N": 1000, "eps_list": (0.5, 0.02)},
}


def build_config(experiment: str, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults plus overrides, validated for the admissible parameter regime."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    merged = dict(_EXPERIMENT_DEFAULTS.get(experiment, {}))
    if overrides:
        merged.update(overrides)
    try:
        cfg = replace(ExperimentConfig(experiment=experiment), **merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if not 1.0 < cfg.alpha <= 2.0:
        raise ConfigError(f"alpha must be in (1, 2], got {cfg.alpha}")
    if not abs(cfg.beta) < 1.0:
        raise ConfigError(f"|beta| < 1 required, got {cfg.beta}")
    if cfg.alpha + cfg.beta <= 1.0:
        raise ConfigError(
            f"alpha + beta = {cfg.alpha + cfg.beta} <= 1: uniqueness of the perturbed "
            "equation (and the rescaling identity) requires alpha + beta > 1"
        )
    if cfg.c <= 0.0:
        raise ConfigError(f"noise scale c must be positive, got {cfg.c}")
    if cfg.d < 1:
        raise ConfigError(f"dimension must be >= 1, got {cfg.d}")
    if cfg.h <= 0.0 or cfg.h_large <= 0.0 or cfg.h_counter <= 0.0 or cfg.h_exit <= 0.0:
        raise ConfigError("all step sizes must be positive")
    if cfg.N < 1 or cfg.n_runs < 1:
        raise ConfigError("sample sizes must be positive")
    if cfg.thinning < 1:
        raise ConfigError("thinning must be >= 1")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")
    if cfg.seed < 0:
        raise ConfigError("seed must be nonnegative")
    if cfg.experiment == "convergence":
        diffs = [cfg.eps_list[i] - cfg.eps_list[i + 1] for i in range(len(cfg.eps_list) - 1)]
        if len(cfg.eps_list) < 2 or any(dd <= 0.0 for dd in diffs):
            raise ConfigError("eps_list must be strictly decreasing with at least two levels")
    if cfg.experiment == "modulus":
        if len(cfg.eps_list) < 2 or any(cfg.eps_list[i] <= cfg.eps_list[i + 1] for i in range(len(cfg.eps_list) - 1)):
            raise ConfigError("eps_list must be strictly decreasing with at least two levels")
    if any(e <= 0.0 for e in cfg.eps_list) or cfg.eps <= 0.0:
        raise ConfigError("noise amplitudes must be positive")
    if not 0.0 < cfg.alpha_large <= 2.0 or cfg.alpha_large <= 1.0:
        raise ConfigError(f"alpha_large must be in (1, 2], got {cfg.alpha_large}")


# execution-only knobs: they affect how a run is carried out, never its results,
# and are excluded from report payloads so serial and parallel runs match bytewise
EXECUTION_KEYS = ("threads", "output_dir")


def report_config(cfg: ExperimentConfig) -> dict:
    """Config as recorded in reports: statistical identity only."""
    payload = asdict(cfg)
    for key in EXECUTION_KEYS:
        payload.pop(key)
    return payload


def config_hash(cfg: ExperimentConfig) -> str:
    """Stable hash of the statistical configuration, for report provenance."""
    payload = json.dumps(report_config(cfg), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]
