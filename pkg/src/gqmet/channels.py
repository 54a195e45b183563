"""Single-mode Gaussian channels acting as ``d -> M d (+ shift)``, ``cov -> M cov M^T + N``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import OMEGA, GaussianState, _frozen
from .errors import DomainError, MalformedInputError, UnphysicalChannelError

CP_TOL = 1e-12


@dataclass(frozen=True)
class GaussianChannel:
    """Affine Gaussian map. ``shift`` carries the displacement of unitary displacements."""

    M: np.ndarray
    N: np.ndarray
    shift: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        M, N, shift = _frozen(self.M), _frozen(self.N), _frozen(self.shift)
        if M.shape != (2, 2) or N.shape != (2, 2) or shift.shape != (2,):
            raise MalformedInputError("channel matrices must be 2x2 and shift of length 2")
        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(N)) and np.all(np.isfinite(shift))):
            raise MalformedInputError("channel entries must be finite")
        if abs(N[0, 1] - N[1, 0]) > 1e-12 * max(1.0, np.abs(N).max()):
            raise MalformedInputError("N must be symmetric")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "shift", shift)

    @property
    def is_physical(self) -> bool:
        return cp_check(self).physical


@dataclass(frozen=True)
class CPReport:
    """Complete-positivity verdict.

    ``margin`` is the smallest eigenvalue of ``N + i Omega - i M Omega M^T``;
    ``scalar_physical`` is the equivalent test ``N >= 0 and det N >= (det M - 1)^2``.
    """

    physical: bool
    margin: float
    scalar_physical: bool

    def __bool__(self):
        return self.physical


def cp_matrix(ch: GaussianChannel) -> np.ndarray:
    return ch.N + 1j * OMEGA - 1j * (ch.M @ OMEGA @ ch.M.T)


def cp_check_scalar(ch: GaussianChannel, tol: float = CP_TOL) -> bool:
    N = ch.N
    det_n = float(np.linalg.det(N))
    n_psd = np.linalg.eigvalsh(N).min() >= -tol
    return bool(n_psd and det_n >= (np.linalg.det(ch.M) - 1.0) ** 2 - tol)


def cp_check(ch: GaussianChannel, tol: float = CP_TOL) -> CPReport:
    margin = float(np.linalg.eigvalsh(cp_matrix(ch)).min())
    return CPReport(margin >= -tol, margin, cp_check_scalar(ch, tol))


def apply_channel(ch: GaussianChannel, s: GaussianState) -> GaussianState:
    report = cp_check(ch)
    if not report.physical:
        raise UnphysicalChannelError(f"channel is not completely positive (margin {report.margin:.3e})")
    cov = ch.M @ s.cov @ ch.M.T + ch.N
    return GaussianState(ch.M @ s.mean + ch.shift, 0.5 * (cov + cov.T))


@dataclass(frozen=True)
class AttenuatorParams:
    """Beam-splitter angle ``phi`` in [0, pi/2] and environment occupation ``mbar``."""

    phi: float
    mbar: float

    def __post_init__(self):
        if not (np.isfinite(self.phi) and 0.0 <= self.phi <= np.pi / 2 + 1e-15):
            raise DomainError(f"phi must lie in [0, pi/2], got {self.phi}")
        if not (np.isfinite(self.mbar) and self.mbar >= 0):
            raise DomainError(f"mbar must be >= 0, got {self.mbar}")

    @property
    def eta(self) -> float:
        return float(np.cos(self.phi) ** 2)


@dataclass(frozen=True)
class AmplifierParams:
    """Two-mode squeezing ``rg >= 0`` and environment occupation ``mbar``."""

    rg: float
    mbar: float

    def __post_init__(self):
        if not (np.isfinite(self.rg) and self.rg >= 0):
            raise DomainError(f"rg must be >= 0, got {self.rg}")
        if not (np.isfinite(self.mbar) and self.mbar >= 0):
            raise DomainError(f"mbar must be >= 0, got {self.mbar}")

    @property
    def gain(self) -> float:
        return float(np.cosh(self.rg) ** 2)


def attenuator(phi: float, mbar: float) -> GaussianChannel:
    p = AttenuatorParams(phi, mbar)
    eye = np.eye(2)
    return GaussianChannel(np.cos(p.phi) * eye, np.sin(p.phi) ** 2 * (2 * p.mbar + 1) * eye)


def amplifier(rg: float, mbar: float) -> GaussianChannel:
    p = AmplifierParams(rg, mbar)
    eye = np.eye(2)
    return GaussianChannel(np.cosh(p.rg) * eye, np.sinh(p.rg) ** 2 * (2 * p.mbar + 1) * eye)


def squeeze(r: float) -> GaussianChannel:
    return GaussianChannel(np.diag([np.exp(-r), np.exp(r)]), np.zeros((2, 2)))


def rotate(angle: float) -> GaussianChannel:
    c, s = np.cos(angle), np.sin(angle)
    return GaussianChannel(np.array([[c, -s], [s, c]]), np.zeros((2, 2)))


def displace(d) -> GaussianChannel:
    return GaussianChannel(np.eye(2), np.zeros((2, 2)), np.asarray(d, dtype=float))


def unitary_channel(kind: str, value) -> GaussianChannel:
    """Build a noiseless channel: ``kind`` is ``"squeeze"``, ``"rotate"`` or ``"displace"``."""
    builders = {"squeeze": squeeze, "rotate": rotate, "displace": displace}
    try:
        return builders[kind](value)
    except KeyError:
        raise DomainError(f"unknown unitary kind {kind!r}") from None
