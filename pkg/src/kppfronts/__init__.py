"""Transition fronts of time-heterogeneous Fisher-KPP equations.

Submodules
----------
model         reaction terms, hypothesis checks, theta envelope, diffusivity time change
solver        implicit finite-difference evolution on a recentering window
waves         traveling-wave profiles, u_mu envelopes, steepness envelopes
constructors  recipes that build transition fronts with prescribed speeds
diagnostics   front position, speed fits, decay rates, profile distances
speedset      closed-form speed-set and admissibility layer
config, cli   TOML experiment configuration and the command-line tool
"""
from . import constructors, diagnostics, model, solver, speedset, waves
from .constructors import (ConstructionSpec, RunParams, bc_front, build, critical_front,
                           glued_front, spreading_front, supercritical_front,
                           two_speed_homogeneous)
from .diagnostics import (estimate_decay, estimate_speed, fit_speed, global_mean_speed_profile,
                          interface_width, locate_front, profile_distance, sandwich_check)
from .model import (KppNonlinearity, homogeneous, logistic, mu_of_t, separable, tanh_profile,
                    theta_envelope, time_change, validate_kpp)
from .solver import FieldState, FrontTrajectory, Grid1D, SchemeParams, evolve, step
from .speedset import admissible, nr1_future_speed, region_sample, speeds_from_decays
from .waves import compute_profile, critical_speed, decay_constants, umu_envelopes

__version__ = "0.1.0"

__all__ = [
    "constructors", "diagnostics", "model", "solver", "speedset", "waves",
    "ConstructionSpec", "RunParams", "bc_front", "build", "critical_front", "glued_front",
    "spreading_front", "supercritical_front", "two_speed_homogeneous",
    "estimate_decay", "estimate_speed", "fit_speed", "global_mean_speed_profile",
    "interface_width", "locate_front", "profile_distance", "sandwich_check",
    "KppNonlinearity", "homogeneous", "logistic", "mu_of_t", "separable", "tanh_profile",
    "theta_envelope", "time_change", "validate_kpp",
    "FieldState", "FrontTrajectory", "Grid1D", "SchemeParams", "evolve", "step",
    "admissible", "nr1_future_speed", "region_sample", "speeds_from_decays",
    "compute_profile", "critical_speed", "decay_constants", "umu_envelopes",
]
