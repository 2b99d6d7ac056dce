"""zeronoise: simulation lab for small-noise limits of power-law ODEs.

The library samples isotropic symmetric alpha-stable noise, integrates the
perturbed ODE dX = A(X)dt + eps dB_alpha, applies the exact time-space
rescaling that links small amplitudes to the unit-amplitude model equation,
and estimates first-exit statistics such as the limiting exit-angle law.
"""

__version__ = "0.1.0"

from .stable_noise import StableParams, NoisePath, make_rng, sample_increment, sample_path
from .fields import FieldSpec, PolarPoint, power_map, decompose, model_field, get_field
from .engine import Trajectory, ExitRecord, integrate_sde, integrate_ode, integrate_with_forcing, first_exit
from .scaling import ScalingExponents, exponents, rescale
from .asymptotics import (
    AngleSample,
    RadialFit,
    closed_form_solution,
    limit_angle,
    radial_fit,
    exit_angle_distribution,
    scale_function_oracle_1d,
    polar_ode_solve,
)

__all__ = [
    "__version__",
    "StableParams",
    "NoisePath",
    "make_rng",
    "sample_increment",
    "sample_path",
    "FieldSpec",
    "PolarPoint",
    "power_map",
    "decompose",
    "model_field",
    "get_field",
    "Trajectory",
    "ExitRecord",
    "integrate_sde",
    "integrate_ode",
    "integrate_with_forcing",
    "first_exit",
    "ScalingExponents",
    "exponents",
    "rescale",
    "AngleSample",
    "RadialFit",
    "closed_form_solution",
    "limit_angle",
    "radial_fit",
    "exit_angle_distribution",
    "scale_function_oracle_1d",
    "polar_ode_solve",
]
