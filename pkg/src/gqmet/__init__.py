"""Quantum metrology with single-mode Gaussian probes.

Covariance-matrix toolkit, attenuator and amplifier channels, quantum Fisher
information by three independent routes, Fock-basis coherence and brute-force
numerical oracles.
"""

from .core import GaussianState, fidelity, bures_distance, make_thermal, make_vacuum, purity, symplectic_eigenvalue, von_neumann_entropy
from .channels import GaussianChannel, amplifier, apply_channel, attenuator, cp_check
from .probe import ProbeSpec, prepare_probe, validate_probe
from .metrology import channel_family, qfi_bures, qfi_closed, qfi_from_moments, qfi_generic
from .coherence import coherence, coherence_derivative

__version__ = "0.1.0"

__all__ = [
    "GaussianState",
    "GaussianChannel",
    "ProbeSpec",
    "amplifier",
    "apply_channel",
    "attenuator",
    "bures_distance",
    "channel_family",
    "coherence",
    "coherence_derivative",
    "cp_check",
    "fidelity",
    "make_thermal",
    "make_vacuum",
    "prepare_probe",
    "purity",
    "qfi_bures",
    "qfi_closed",
    "qfi_from_moments",
    "qfi_generic",
    "symplectic_eigenvalue",
    "validate_probe",
    "von_neumann_entropy",
]
