"""Relative entropy of coherence in the Fock basis for single-mode Gaussian states.

The reference state is the thermal state carrying the same mean photon
number as the input, ``N = (Tr cov + |d|^2 - 2) / 4``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GaussianState, symplectic_eigenvalue, entropy_from_nu, thermal_entropy
from .metrology import StateFamily, finite_difference

DEFAULT_STEP = 1e-4


@dataclass(frozen=True)
class CoherenceReport:
    coherence: float
    ref_occupation: float
    state_entropy: float
    ref_entropy: float


def ref_occupation(state: GaussianState) -> float:
    symplectic_eigenvalue(state)  # physicality check
    return float((np.trace(state.cov) + state.mean @ state.mean - 2) / 4)


def coherence(state: GaussianState) -> CoherenceReport:
    s = entropy_from_nu(symplectic_eigenvalue(state))
    n_ref = max(ref_occupation(state), 0.0)
    s_ref = thermal_entropy(n_ref)
    return CoherenceReport(s_ref - s, n_ref, s, s_ref)


def coherence_value(state: GaussianState) -> float:
    return coherence(state).coherence


def coherence_derivative(f: StateFamily, theta: float, step: float = DEFAULT_STEP) -> float:
    """d(coherence)/d(theta) by central differences with one Richardson step ``(step, step/2)``.

    At a domain edge (e.g. ``mbar = 0``) the stencil becomes one-sided.
    """

    def d(h):
        return float(finite_difference(lambda t: coherence_value(f(t)), theta, h))

    return float((4 * d(step / 2) - d(step)) / 3)
