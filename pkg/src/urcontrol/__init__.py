"""Quantum optimal control with first-order robustness to unknown errors.

Synthesizes piecewise-constant pulses that realize a target unitary or state
transfer while suppressing the leading-order sensitivity to static or slowly
fluctuating Hamiltonian perturbations, by driving the time-averaging
superoperator of the ideal evolution toward a projector onto the identity.
"""
from __future__ import annotations

__version__ = "0.1.0"

from . import engine, functionals, grad, models, optimize, qcore, superop, verify
from .models import (
    Channel,
    ControlModel,
    OperatorBasis,
    Pulse,
    TargetSpec,
    collective_spin_model,
    dicke_state,
    fixture_targets,
    pauli_basis,
    single_qubit_model,
    symmetric_subspace_basis,
)
from .optimize import OptimizeOptions, optimize_pulse, mct_scan, preset, preset_names

__all__ = [
    "__version__",
    "engine",
    "qcore",
    "models",
    "superop",
    "functionals",
    "grad",
    "optimize",
    "verify",
    "Channel",
    "ControlModel",
    "OperatorBasis",
    "Pulse",
    "TargetSpec",
    "collective_spin_model",
    "dicke_state",
    "fixture_targets",
    "pauli_basis",
    "single_qubit_model",
    "symmetric_subspace_basis",
    "OptimizeOptions",
    "optimize_pulse",
    "mct_scan",
    "preset",
    "preset_names",
]
