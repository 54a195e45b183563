r"""Single-mode Gaussian states and their elementary functionals.

Units: :math:`\hbar = m = \omega = 1` and the covariance matrix is normalised
so that the vacuum has ``cov = identity`` and a thermal state with mean
occupation ``nbar`` has ``cov = (2 nbar + 1) identity``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import DomainError, MalformedInputError, NumericalFailure, UnphysicalStateError

#: Tolerance on ``det(cov) >= 1``.
DET_TOL = 1e-12
#: Below this value of ``nu - 1`` the entropy is returned as exactly 0.
PURE_TOL = 1e-12

OMEGA = np.array([[0.0, 1.0], [-1.0, 0.0]])
OMEGA.setflags(write=False)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GaussianState:
    """First and second moments of a single-mode Gaussian state.

    Args:
        mean: quadrature means ``(q, p)``.
        cov: symmetric 2x2 covariance matrix.
    """

    mean: np.ndarray = field(default_factory=lambda: np.zeros(2))
    cov: np.ndarray = field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        mean = _frozen(self.mean)
        cov = _frozen(self.cov)
        if mean.shape != (2,) or cov.shape != (2, 2):
            raise MalformedInputError(
                f"expected mean of shape (2,) and cov of shape (2, 2), got {mean.shape} and {cov.shape}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise MalformedInputError("state moments must be finite")
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12 * max(1.0, np.abs(cov).max()):
            raise MalformedInputError("covariance matrix must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def is_physical(self) -> bool:
        return validate_cov(self.cov).physical

    def swapped(self) -> "GaussianState":
        """The same state with the roles of q and p exchanged."""
        perm = np.array([[0.0, 1.0], [1.0, 0.0]])
        return GaussianState(perm @ self.mean, perm @ self.cov @ perm)


CovLike = Union[GaussianState, np.ndarray]


def _cov(x: CovLike) -> np.ndarray:
    if isinstance(x, GaussianState):
        return x.cov
    cov = np.asarray(x, dtype=float)
    if cov.shape != (2, 2):
        raise MalformedInputError(f"covariance must be 2x2, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise MalformedInputError("covariance entries must be finite")
    return cov


@dataclass(frozen=True)
class Validity:
    """Outcome of a physicality check; ``margin`` is ``det(cov) - 1``."""

    physical: bool
    margin: float

    def __bool__(self):
        return self.physical


def thermal_occupation(beta: float, omega: float) -> float:
    """Bose-Einstein occupation ``1 / (exp(beta omega) - 1)``."""
    for name, v in (("beta", beta), ("omega", omega)):
        if not np.isfinite(v) or v <= 0:
            raise DomainError(f"{name} must be positive and finite, got {v}")
    return float(1.0 / np.expm1(beta * omega))


def make_thermal(nbar: float) -> GaussianState:
    if not np.isfinite(nbar) or nbar < 0:
        raise DomainError(f"nbar must be >= 0, got {nbar}")
    return GaussianState(np.zeros(2), (2 * nbar + 1) * np.eye(2))


def make_vacuum() -> GaussianState:
    return GaussianState()


def validate_cov(cov: CovLike) -> Validity:
    """Check ``cov[0, 0] > 0`` and ``det(cov) >= 1 - DET_TOL``."""
    c = _cov(cov)
    det = float(np.linalg.det(c))
    return Validity(bool(c[0, 0] > 0 and det >= 1 - DET_TOL), det - 1.0)


def _checked_det(cov: CovLike) -> float:
    c = _cov(cov)
    v = validate_cov(c)
    if not v.physical:
        raise UnphysicalStateError(f"unphysical covariance (det - 1 = {v.margin:.3e})")
    return max(v.margin + 1.0, 1.0)


def symplectic_eigenvalue(cov: CovLike) -> float:
    """``sqrt(det(cov))``; at least 1 for a physical state."""
    return float(np.sqrt(_checked_det(cov)))


def purity(state: CovLike) -> float:
    """``Tr(rho^2) = det(cov)^(-1/2)``."""
    return float(1.0 / np.sqrt(_checked_det(state)))


def entropy_from_nu(nu: float) -> float:
    """Von Neumann entropy (nats) of a single mode with symplectic eigenvalue ``nu``."""
    if nu - 1.0 < PURE_TOL:
        return 0.0
    a, b = (nu + 1) / 2, (nu - 1) / 2
    return float(a * np.log(a) - b * np.log(b))


def thermal_entropy(nbar: float) -> float:
    """``(n+1) ln(n+1) - n ln n``; the same function as :func:`entropy_from_nu` at ``nu = 2n+1``."""
    if nbar < 0:
        raise DomainError(f"occupation must be >= 0, got {nbar}")
    if nbar == 0:
        return 0.0
    return float((nbar + 1) * np.log1p(nbar) - nbar * np.log(nbar))


def von_neumann_entropy(state: CovLike) -> float:
    return entropy_from_nu(symplectic_eigenvalue(state))


def _adj(a: np.ndarray) -> np.ndarray:
    return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]])


def log_fidelity(a: GaussianState, b: GaussianState) -> float:
    r"""Logarithm of the Gaussian fidelity.

    Evaluates

    .. math::
        F = \frac{2}{\sqrt{\Delta + \delta} - \sqrt{\delta}}
            \exp\left[-\tfrac12 \Delta d^T (\Sigma_a + \Sigma_b)^{-1} \Delta d\right]

    with :math:`\Delta = \det(\Sigma_a + \Sigma_b)` and
    :math:`\delta = (\det\Sigma_a - 1)(\det\Sigma_b - 1)`.

    The denominator is rewritten as ``2 + x`` with ``x`` computed from the
    difference ``Sigma_a - Sigma_b`` directly, using
    ``Delta - 4 - 4 sqrt(delta) = -det(E) + 2 (sqrt(da - 1) - sqrt(db - 1))^2``.
    This keeps ``1 - F`` accurate for nearly identical states, which the
    Bures-based QFI estimator depends on.
    """
    da, db = _checked_det(a), _checked_det(b)
    sa, sb = a.cov, b.cov
    tot = sa + sb
    big_delta = float(np.linalg.det(tot))
    if not np.isfinite(big_delta) or big_delta <= 0:
        raise NumericalFailure(f"singular sum of covariances (det = {big_delta})")
    small_delta = (da - 1.0) * (db - 1.0)

    e = sa - sb
    det_e = float(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])
    ra, rb = np.sqrt(da - 1.0), np.sqrt(db - 1.0)
    if ra + rb > 0:
        ddet = float(np.trace(_adj(sa) @ e)) - det_e  # da - db without cancellation
        root_diff = ddet / (ra + rb)
    else:
        root_diff = 0.0
    numer = -det_e + 2.0 * root_diff**2
    x = numer / (np.sqrt(big_delta + small_delta) + np.sqrt(small_delta) + 2.0)

    dd = a.mean - b.mean
    expo = -0.5 * float(dd @ np.linalg.solve(tot, dd))
    out = -np.log1p(x / 2.0) + expo
    if not np.isfinite(out):
        raise NumericalFailure("non-finite fidelity")
    return float(out)


def fidelity(a: GaussianState, b: GaussianState) -> float:
    """Uhlmann fidelity between two single-mode Gaussian states (symmetric, in [0, 1])."""
    return float(min(1.0, np.exp(log_fidelity(a, b))))


def bures_distance(a: GaussianState, b: GaussianState) -> float:
    """``sqrt(2) * sqrt(1 - sqrt(F))``."""
    one_minus_sqrt_f = -np.expm1(0.5 * log_fidelity(a, b))
    return float(np.sqrt(2.0) * np.sqrt(max(one_minus_sqrt_f, 0.0)))
