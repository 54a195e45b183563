"""Probe preparation by sequential q- and p- Gaussian measurements on a thermal state.

The measurement widths use the dimensionless parametrisation in which
``sigma_q = sigma_p = 1`` leaves the thermal state untouched. The
measurements are non-selective, so the means stay at zero.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import GaussianState, thermal_occupation
from .errors import DomainError, UnphysicalProbeWarning

PROBE_TOL = 1e-12


@dataclass(frozen=True)
class MeasurementSettings:
    sigma_q: float
    sigma_p: float

    def __post_init__(self):
        for name in ("sigma_q", "sigma_p"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive and finite, got {v}")


@dataclass(frozen=True)
class AsymmetrySettings:
    """Overall width ``sigma`` and asymmetry ``epsilon`` in (-1, 1)."""

    sigma: float
    epsilon: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise DomainError(f"sigma must be positive and finite, got {self.sigma}")
        if not (np.isfinite(self.epsilon) and abs(self.epsilon) < 1):
            raise DomainError(f"|epsilon| must be < 1, got {self.epsilon}")


Settings = Union[MeasurementSettings, AsymmetrySettings]


def settings_from_asymmetry(a: AsymmetrySettings) -> MeasurementSettings:
    return MeasurementSettings(a.sigma / np.sqrt(1 - a.epsilon), a.sigma / np.sqrt(1 + a.epsilon))


@dataclass(frozen=True)
class ProbeSpec:
    """Thermal occupation plus measurement settings.

    Build from ``(beta, omega)`` with :meth:`from_temperature`.
    """

    nbar: float
    settings: Settings

    def __post_init__(self):
        if not (np.isfinite(self.nbar) and self.nbar >= 0):
            raise DomainError(f"nbar must be >= 0, got {self.nbar}")

    @classmethod
    def from_temperature(cls, beta: float, omega: float, settings: Settings) -> "ProbeSpec":
        return cls(thermal_occupation(beta, omega), settings)

    @classmethod
    def make(cls, nbar: float, sigma_q: float = 1.0, sigma_p: float = 1.0) -> "ProbeSpec":
        return cls(nbar, MeasurementSettings(sigma_q, sigma_p))

    @property
    def measurement(self) -> MeasurementSettings:
        s = self.settings
        return settings_from_asymmetry(s) if isinstance(s, AsymmetrySettings) else s

    @property
    def sigma_q(self) -> float:
        return self.measurement.sigma_q

    @property
    def sigma_p(self) -> float:
        return self.measurement.sigma_p


def probe_cov(nbar: float, m: MeasurementSettings) -> np.ndarray:
    """``diag((2 nbar + 1) / sigma_p^2, (2 nbar + 1) / sigma_q^2)``."""
    if nbar < 0:
        raise DomainError(f"nbar must be >= 0, got {nbar}")
    c = 2 * nbar + 1
    return np.diag([c / m.sigma_p**2, c / m.sigma_q**2])


def validate_probe(spec: ProbeSpec) -> bool:
    m = spec.measurement
    return bool(m.sigma_q * m.sigma_p <= (2 * spec.nbar + 1) * (1 + PROBE_TOL))


def prepare_probe(spec: ProbeSpec, warn: bool = True) -> GaussianState:
    """Probe state after both measurements.

    Unphysical settings still return a state (with ``is_physical == False``)
    and emit :class:`UnphysicalProbeWarning`, so sweeps can flag grid points.
    """
    if warn and not validate_probe(spec):
        m = spec.measurement
        warnings.warn(
            f"sigma_q * sigma_p = {m.sigma_q * m.sigma_p:.6g} exceeds 2 nbar + 1 = {2 * spec.nbar + 1:.6g}",
            UnphysicalProbeWarning,
            stacklevel=2,
        )
    return GaussianState(np.zeros(2), probe_cov(spec.nbar, spec.measurement))


def effective_occupation(nbar: float, sigma: float) -> float:
    """Occupation of the thermal state produced by symmetric settings ``sigma_q = sigma_p = sigma``."""
    return ((2 * nbar + 1) / sigma**2 - 1) / 2


def probe_purity(nbar: float, sigma_q: float, sigma_p: float) -> float:
    """Closed-form purity ``sigma_q sigma_p / (2 nbar + 1)``."""
    return sigma_q * sigma_p / (2 * nbar + 1)
