# Copyright 2026 The fvrnet Authors
# SPDX-License-Identifier: Apache-2.0
"""Rigid slice-to-volume registration for freehand ultrasound sweeps."""

from ._core import (
    Frame,
    FvrError,
    NetParams,
    RegistrationPair,
    RegistrationResult,
    RigidParams,
    SubvolumeSpec,
    Sweep,
    Trajectory,
    Volume,
    corner_distance_error,
    load_sweep,
    load_volume,
    make_pair,
    matrix_to_params,
    mse,
    ncc,
    params_to_matrix,
    phantom,
    predict,
    register,
    relative_params,
    sample_slice,
    save_sweep,
    save_volume,
    simulate_sweep,
)

__all__ = [
    "Frame",
    "FvrError",
    "NetParams",
    "RegistrationPair",
    "RegistrationResult",
    "RigidParams",
    "SubvolumeSpec",
    "Sweep",
    "Trajectory",
    "Volume",
    "corner_distance_error",
    "load_sweep",
    "load_volume",
    "make_pair",
    "matrix_to_params",
    "mse",
    "ncc",
    "params_to_matrix",
    "phantom",
    "predict",
    "register",
    "relative_params",
    "sample_slice",
    "save_sweep",
    "save_volume",
    "simulate_sweep",
]
