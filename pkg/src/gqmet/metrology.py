r"""Quantum Fisher information for single-mode Gaussian families.

Three independent routes are provided:

* :func:`qfi_generic` -- the three-term moment formula
  (covariance, purity and mean contributions),
* :func:`qfi_bures` -- a finite-difference estimate from the fidelity,
* closed forms for the attenuator and amplifier channels acting on a
  measured thermal probe (:func:`qfi_att_phi`, :func:`qfi_att_mbar`,
  :func:`qfi_amp_rg`, :func:`qfi_amp_mbar`).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .channels import amplifier, apply_channel, attenuator
from .core import GaussianState, _adj, log_fidelity
from .errors import DivergenceWarning, DomainError, NumericalFailure, PureStateSingularity
from .probe import ProbeSpec, prepare_probe

DEFAULT_STEP = 1e-4
DEFAULT_TAU = 1e-5
PURE_LIMIT_TOL = 1e-9
DIVERGENCE_TOL = 1e-12

CHANNEL_PARAMS = {"attenuator": ("phi", "mbar"), "amplifier": ("rg", "mbar")}


@dataclass(frozen=True)
class StateFamily:
    """A one-parameter family ``theta -> GaussianState``.

    ``dcov`` and ``dmean`` are optional analytic derivatives. When ``dcov``
    is missing, :func:`qfi_generic` falls back to central differences.
    """

    evaluate: Callable[[float], GaussianState]
    dcov: Optional[Callable[[float], np.ndarray]] = None
    dmean: Optional[Callable[[float], np.ndarray]] = None
    name: str = "theta"

    def __call__(self, theta: float) -> GaussianState:
        return self.evaluate(theta)


@dataclass(frozen=True)
class QfiBreakdown:
    term_cov: float
    term_purity: float
    term_mean: float

    @property
    def total(self) -> float:
        return self.term_cov + self.term_purity + self.term_mean


@dataclass(frozen=True)
class AttenuatorEigenvalues:
    nu1: float
    nu2: float

    @property
    def product(self) -> float:
        return self.nu1 * self.nu2


@dataclass(frozen=True)
class AmplifierEigenvalues:
    mu1: float
    mu2: float

    @property
    def product(self) -> float:
        return self.mu1 * self.mu2


def finite_difference(fn, theta, step):
    """Central difference; second-order one-sided stencils at domain edges."""
    try:
        return (np.asarray(fn(theta + step)) - np.asarray(fn(theta - step))) / (2 * step)
    except DomainError:
        pass
    for h in (step, -step):
        try:
            f0, f1, f2 = (np.asarray(fn(theta + k * h)) for k in (0, 1, 2))
        except DomainError:
            continue
        return (-3 * f0 + 4 * f1 - f2) / (2 * h)
    raise DomainError(f"no finite-difference stencil fits the domain at theta={theta}")


def qfi_from_moments(cov, dcov, dmean) -> QfiBreakdown:
    """QFI from ``cov``, its derivative and the derivative of the mean."""
    cov = np.asarray(cov, dtype=float)
    dcov = np.asarray(dcov, dtype=float)
    dmean = np.asarray(dmean, dtype=float)
    if not (np.all(np.isfinite(dcov)) and np.all(np.isfinite(dmean))):
        raise NumericalFailure("non-finite derivative")

    det = float(np.linalg.det(cov))
    inv = np.linalg.inv(cov)
    a = inv @ dcov
    pur = det**-0.5
    # d/dtheta det = tr(adj(cov) dcov)
    dpur = -0.5 * det**-1.5 * float(np.trace(_adj(cov) @ dcov))

    term_cov = 0.5 * float(np.trace(a @ a)) / (1 + pur**2)
    if abs(pur - 1) < PURE_LIMIT_TOL:
        if abs(dpur) >= PURE_LIMIT_TOL:
            raise PureStateSingularity(f"purity is 1 but its derivative is {dpur:.3e}")
        term_pur = 0.0
    else:
        term_pur = 2 * dpur**2 / (1 - pur**4)
    term_mean = float(dmean @ inv @ dmean)
    out = QfiBreakdown(term_cov, term_pur, term_mean)
    if not np.isfinite(out.total):
        raise NumericalFailure("non-finite QFI")
    return out


def qfi_generic(f: StateFamily, theta: float, step: float = DEFAULT_STEP) -> QfiBreakdown:
    """Three-term QFI of ``f`` at ``theta``; analytic derivatives are used when available."""
    s = f(theta)
    if f.dcov is not None:
        dcov = f.dcov(theta)
    else:
        if step <= 0:
            raise DomainError("step must be positive when no analytic derivative is supplied")
        dcov = finite_difference(lambda t: f(t).cov, theta, step)
    if f.dmean is not None:
        dmean = f.dmean(theta)
    elif step > 0:
        dmean = finite_difference(lambda t: f(t).mean, theta, step)
    else:
        dmean = np.zeros(2)
    return qfi_from_moments(s.cov, dcov, dmean)


def _bures_rate(f: StateFamily, theta: float, tau: float, ref: GaussianState) -> float:
    one_minus_sqrt_f = -np.expm1(0.5 * log_fidelity(ref, f(theta + tau)))
    return 8.0 * one_minus_sqrt_f / tau**2


def qfi_bures(f: StateFamily, theta: float, tau: float = DEFAULT_TAU) -> float:
    """QFI as ``8 (1 - sqrt F(theta, theta + tau)) / tau^2``, Richardson-extrapolated over ``(tau, tau/2)``."""
    if tau <= 0:
        raise DomainError("tau must be positive")
    ref = f(theta)
    coarse = _bures_rate(f, theta, tau, ref)
    fine = _bures_rate(f, theta, tau / 2, ref)
    return float(2 * fine - coarse)


# --- families ---------------------------------------------------------------


def displacement_family(nbar: float = 0.0) -> StateFamily:
    """Thermal state displaced along q by ``theta``."""
    cov = (2 * nbar + 1) * np.eye(2)
    return StateFamily(
        lambda t: GaussianState(np.array([t, 0.0]), cov),
        dcov=lambda t: np.zeros((2, 2)),
        dmean=lambda t: np.array([1.0, 0.0]),
        name="displacement",
    )


def constant_family(state: GaussianState) -> StateFamily:
    return StateFamily(lambda t: state, lambda t: np.zeros((2, 2)), lambda t: np.zeros(2), "constant")


def channel_family(
    channel: str,
    param: str,
    probe: ProbeSpec,
    phi: float = np.pi / 4,
    rg: float = 1.0,
    mbar: float = 0.5,
) -> StateFamily:
    """Probe sent through an attenuator or amplifier, as a function of one channel parameter.

    Args:
        channel: ``"attenuator"`` or ``"amplifier"``.
        param: the estimated parameter, ``"phi"``/``"mbar"`` or ``"rg"``/``"mbar"``.
        probe: prepared-probe specification.
        phi, rg, mbar: values of the parameters held fixed.
    """
    if channel not in CHANNEL_PARAMS or param not in CHANNEL_PARAMS[channel]:
        raise DomainError(f"cannot estimate {param!r} on channel {channel!r}")
    s0 = prepare_probe(probe, warn=False)
    cov0, mean0 = s0.cov, s0.mean
    eye = np.eye(2)

    if channel == "attenuator":

        def build(t):
            return attenuator(t, mbar) if param == "phi" else attenuator(phi, t)

        if param == "phi":

            def dcov(t):
                return np.sin(2 * t) * ((2 * mbar + 1) * eye - cov0)

            def dmean(t):
                return -np.sin(t) * mean0

        else:

            def dcov(t):
                return 2 * np.sin(phi) ** 2 * eye

            def dmean(t):
                return np.zeros(2)

    else:

        def build(t):
            return amplifier(t, mbar) if param == "rg" else amplifier(rg, t)

        if param == "rg":

            def dcov(t):
                return np.sinh(2 * t) * ((2 * mbar + 1) * eye + cov0)

            def dmean(t):
                return np.sinh(t) * mean0

        else:

            def dcov(t):
                return 2 * np.sinh(rg) ** 2 * eye

            def dmean(t):
                return np.zeros(2)

    return StateFamily(lambda t: apply_channel(build(t), s0), dcov, dmean, f"{channel}-{param}")


# --- closed forms -----------------------------------------------------------


def att_eigenvalues(phi, mbar, nbar, sigma_q, sigma_p) -> AttenuatorEigenvalues:
    c2, s2 = np.cos(phi) ** 2, np.sin(phi) ** 2
    c = 2 * nbar + 1
    env = (2 * mbar + 1) * s2
    return AttenuatorEigenvalues(c * c2 / sigma_p**2 + env, c * c2 / sigma_q**2 + env)


def amp_eigenvalues(rg, mbar, nbar, sigma_q, sigma_p) -> AmplifierEigenvalues:
    ch2, sh2 = np.cosh(rg) ** 2, np.sinh(rg) ** 2
    c = 2 * nbar + 1
    env = (2 * mbar + 1) * sh2
    return AmplifierEigenvalues(c * ch2 / sigma_p**2 + env, c * ch2 / sigma_q**2 + env)


def _second_term(numer: float, denom: float) -> float:
    if abs(denom) < DIVERGENCE_TOL:
        if numer == 0:
            return 0.0
        warnings.warn("QFI diverges: product of symplectic eigenvalues is 1", DivergenceWarning, stacklevel=3)
        return np.inf
    return numer / denom


def _two_term(a1, a2, d1, d2, product_factor=True):
    """``(a2^2 d1^2 + a1^2 d2^2) / (a1 a2 (a1 a2 + 1)) + (d2 a1 + d1 a2)^2 / (k (a1^2 a2^2 - 1))``.

    ``d1``, ``d2`` are the derivative weights; ``k`` is ``a1 a2`` unless
    ``product_factor`` is False.
    """
    p = a1 * a2
    first = (a2**2 * d1**2 + a1**2 * d2**2) / (p * (p + 1))
    k = p if product_factor else 1.0
    return first + _second_term((d2 * a1 + d1 * a2) ** 2, k * (p**2 - 1))


def qfi_att_phi(phi, mbar, nbar, sigma_q, sigma_p) -> float:
    ev = att_eigenvalues(phi, mbar, nbar, sigma_q, sigma_p)
    c = 2 * nbar + 1
    h_p = (2 * mbar + 1) - c / sigma_p**2
    h_q = (2 * mbar + 1) - c / sigma_q**2
    return float(np.sin(2 * phi) ** 2 / 2 * _two_term(ev.nu1, ev.nu2, h_p, h_q))


def qfi_att_mbar(phi, mbar, nbar, sigma_q, sigma_p, variant: str = "corrected") -> float:
    """QFI for the attenuator environment occupation.

    ``variant="as_printed"`` drops the ``nu1 nu2`` factor from the second
    denominator. It disagrees with :func:`qfi_generic` and is kept only for
    regression purposes.
    """
    if variant not in ("corrected", "as_printed"):
        raise DomainError(f"unknown variant {variant!r}")
    ev = att_eigenvalues(phi, mbar, nbar, sigma_q, sigma_p)
    bracket = _two_term(ev.nu1, ev.nu2, 1.0, 1.0, product_factor=(variant == "corrected"))
    return float(2 * np.sin(phi) ** 4 * bracket)


def qfi_amp_rg(rg, mbar, nbar, sigma_q, sigma_p) -> float:
    ev = amp_eigenvalues(rg, mbar, nbar, sigma_q, sigma_p)
    c = 2 * nbar + 1
    f_p = (2 * mbar + 1) + c / sigma_p**2
    f_q = (2 * mbar + 1) + c / sigma_q**2
    return float(np.sinh(2 * rg) ** 2 / 2 * _two_term(ev.mu1, ev.mu2, f_p, f_q))


def qfi_amp_mbar(rg, mbar, nbar, sigma_q, sigma_p) -> float:
    ev = amp_eigenvalues(rg, mbar, nbar, sigma_q, sigma_p)
    return float(2 * np.sinh(rg) ** 4 * _two_term(ev.mu1, ev.mu2, 1.0, 1.0))


def qfi_closed(channel: str, param: str, phi=np.pi / 4, rg=1.0, mbar=0.5, nbar=0.0, sigma_q=1.0, sigma_p=1.0):
    """Dispatch to the closed form for ``(channel, param)``."""
    if channel == "attenuator" and param == "phi":
        return qfi_att_phi(phi, mbar, nbar, sigma_q, sigma_p)
    if channel == "attenuator" and param == "mbar":
        return qfi_att_mbar(phi, mbar, nbar, sigma_q, sigma_p)
    if channel == "amplifier" and param == "rg":
        return qfi_amp_rg(rg, mbar, nbar, sigma_q, sigma_p)
    if channel == "amplifier" and param == "mbar":
        return qfi_amp_mbar(rg, mbar, nbar, sigma_q, sigma_p)
    raise DomainError(f"no closed form for {param!r} on {channel!r}")


def eigen_product(channel: str, phi=np.pi / 4, rg=1.0, mbar=0.5, nbar=0.0, sigma_q=1.0, sigma_p=1.0) -> float:
    if channel == "attenuator":
        return att_eigenvalues(phi, mbar, nbar, sigma_q, sigma_p).product
    if channel == "amplifier":
        return amp_eigenvalues(rg, mbar, nbar, sigma_q, sigma_p).product
    raise DomainError(f"unknown channel {channel!r}")
