"""
Central configuration for all frachs experiments.
Adjust these parameters to control resolution, tolerances and truncation.
"""

import math

# Numerical defaults shared by the library modules
TORUS_FACTOR = 4  # periodic box / support box ratio for the Riesz form
DENSE_LIMIT = 4096  # largest matrix handled by the dense eigensolver
EIGEN_RESIDUAL_TOL = 1e-8
ORTHONORMALITY_TOL = 1e-10
TAIL_MASS_TOL = 1e-10  # coefficient mass allowed outside a truncated decomposition

T_MIN_FACTOR = 1e-4  # t_min = T_MIN_FACTOR / sqrt(lambda_max)
T_RATIO = 1.15  # geometric grading of the extension variable
BESSEL_CUTOFF = 1e-14  # last t-node where the slowest mode falls below this
BESSEL_SWITCH = 2.0  # series below, integral representation above
BESSEL_TAIL = 1e-18

EL_MAX_ITER = 3000
EL_TOL = 1e-7
PROJECTION_FLOOR = 1e-14  # negative entries larger than this are counted

SPHERE_NODES = 64  # trapezoid nodes on the circle for n = 3
POHOZAEV_EPS_FACTOR = 4  # eps >= 4h
SCHEMA_VERSION = 1
LOGFILE = "frachs.log"

# Experiment presets; a config file only needs to name what it changes
PRESETS = {
    "norm-identity": {
        "params": {"n": 2, "s": 0.5, "sigma": 0.25},
        "settings": {
            "bounds": [[0.0, math.pi]],
            "nodes": [200],
            "s_values": [0.3, 0.5, 0.7],
            "modes": 5,
            "t_ratio": T_RATIO,
        },
        "tolerances": {"relative": 0.01},
    },
    "form-inequality": {
        "params": {"n": 2, "s": 0.5, "sigma": 0.25},
        "settings": {
            "bounds": [[0.0, math.pi]],
            "nodes": [256],
            "count": 50,
            "torus_factor": TORUS_FACTOR,
            "torus_sweep": [2, 4, 8],
        },
        "tolerances": {"slack": 1e-9, "min_norm": 1e-3},
    },
    "bessel": {
        "params": {"n": 2, "s": 0.5, "sigma": 0.25},
        "settings": {
            "nu_values": [0.3, 0.5, 0.7],
            "tau_min": 0.01,
            "tau_max": 20.0,
            "points": 200,
            "tau_small": 1e-3,
            "tau_large": 25.0,
        },
        "tolerances": {"closed_form": 1e-8, "asymptotic": 0.01},
    },
    "green-kernels": {
        "params": {"n": 3, "s": 0.5, "sigma": 0.25},
        "settings": {
            "samples": 1000,
            "steps": [0.1, 0.05, 0.025],
            "b_values": [0.0, 0.5, 1.0],
        },
        "tolerances": {"symmetry": 1e-12, "min_order": 1.8},
    },
    "kelvin": {
        "params": {"n": 2, "s": 0.5, "sigma": 0.25},
        "settings": {"samples": 1000, "steps": [0.02, 0.01]},
        "tolerances": {"involution": 1e-12, "min_order": 1.8},
    },
    "halfspace-minimizer": {
        "params": {"n": 2, "s": 0.5, "sigma": 0.25},
        "settings": {"radius": 20.0, "resolution": 64, "max_iter": EL_MAX_ITER},
        "tolerances": {"tol": 1e-7, "stability": 0.15},
    },
    "nonattainment": {
        "params": {"n": 1, "s": 0.4, "sigma": 0.3},
        "settings": {"bounds": [[-1.0, 1.0]], "nodes": [63], "levels": 3},
        "tolerances": {"tol": 1e-7, "min_gap": 1e-6},
    },
    "pohozaev": {
        "params": {"n": 1, "s": 0.4, "sigma": 0.3},
        "settings": {
            "bounds": [[-1.0, 1.0]],
            "nodes": [31],
            "levels": 3,
            "eps": 0.5,
            "t_ratio": T_RATIO,
            "state": "minimizer",
            "eps_schedule": "fixed",
        },
        "tolerances": {"min_order": 1.0, "tol": 1e-7},
    },
    "curvature": {
        "params": {"n": 3, "s": 0.5, "sigma": 0.25},
        "settings": {
            "tau_min": 1e-3,
            "tau_max": 1e-1,
            "points": 20,
            "profiles": [
                {"kind": "power", "alpha": 2.0},
                {"kind": "power", "alpha": 1.5},
                {"kind": "power", "alpha": 2.5},
                {"kind": "convex", "alpha": 2.0},
            ],
        },
        "tolerances": {"closed_form": 1e-10, "alpha": 0.05},
    },
    "corrections": {
        "params": {"n": 2, "s": 0.6, "sigma": 0.3},
        "settings": {"alpha": 2.0, "radius": 20.0, "resolutions": [32, 64]},
        "tolerances": {"tol": 1e-7, "stability": 0.10},
    },
    "trial-sweep": {
        "params": {"n": 2, "s": 0.5, "sigma": 0.25},
        "settings": {
            "profile": {"kind": "power", "alpha": 2.0},
            "eps_list": [0.16, 0.12, 0.08],
            "delta": 0.6,
            "resolutions": [63, 79],
            "radius": 20.0,
            "resolution": 64,
        },
        "tolerances": {"tol": 1e-7},
    },
}

# Current preset selection for settings a config file leaves out
CURRENT_PRESET = "norm-identity"  # Change this to switch the default experiment

EXPERIMENTS = tuple(PRESETS)
