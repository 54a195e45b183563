"""Brute-force validators that share no code path with the closed forms.

Two oracles live here:

* a position-space density-kernel pipeline that applies the Gaussian
  q- and p-measurements as dephasing kernels and reads back the covariance
  matrix by quadrature;
* a truncated Fock-basis construction of a squeezed thermal state whose
  coherence is computed from matrix eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.special import erfc

from .core import GaussianState, make_thermal
from .errors import CutoffError, DomainError, GridError
from .probe import MeasurementSettings, probe_cov

DEFAULT_N = 2048
MIN_N = 1024
TAIL_TOL = 1e-10
EDGE_TOL = 1e-9
EDGE_FRACTION = 0.05
FOCK_TAIL_TOL = 1e-10


@dataclass(frozen=True)
class KernelGrid:
    """Samples of a density kernel on a square ``N x N`` grid.

    ``basis`` is ``"position"`` (samples of rho(x, x')) or ``"momentum"``
    (samples of rho(k, k')). The spacing of the active basis is ``spacing``.
    """

    half_width: float
    n: int
    values: np.ndarray = field(repr=False)
    basis: str = "position"

    @property
    def dx(self) -> float:
        return 2 * self.half_width / self.n

    @property
    def dk(self) -> float:
        return 2 * np.pi / (self.n * self.dx)

    @property
    def spacing(self) -> float:
        return self.dx if self.basis == "position" else self.dk

    @property
    def axis(self) -> np.ndarray:
        """Coordinates of the active basis, centred so index ``n // 2`` is the origin."""
        return (np.arange(self.n) - self.n // 2) * self.spacing

    def trace(self) -> float:
        return float(np.real(np.trace(self.values)) * self.spacing)


def _tail(half_width: float, std: float) -> float:
    return float(erfc(half_width / (np.sqrt(2) * std)))


def default_half_width(*variances: float) -> float:
    """``8`` standard deviations of the widest quadrature, given ``<x^2>`` values."""
    return 8.0 * float(np.sqrt(max(variances)))


def kernel_from_state(state: GaussianState, half_width: Optional[float] = None, n: int = DEFAULT_N) -> KernelGrid:
    """Position kernel ``rho(x, x') ~ exp[-u^2 / (2 s_x^2) - s_p^2 v^2 / 2]``, ``u = (x+x')/2``, ``v = x-x'``."""
    cov = state.cov
    if abs(cov[0, 1]) > 0 or np.any(state.mean != 0):
        raise DomainError("kernel oracle needs a zero-mean state with diagonal covariance")
    if n < MIN_N or n & (n - 1):
        raise GridError(f"n must be a power of two >= {MIN_N}, got {n}")
    var_x, var_p = cov[0, 0] / 2, cov[1, 1] / 2
    min_l = default_half_width(var_x, var_p)
    if half_width is None:
        half_width = min_l
    elif half_width < min_l * (1 - 1e-12):
        raise GridError(f"half width {half_width} below 8 standard deviations ({min_l:.6g})")
    grid = KernelGrid(half_width, n, np.empty((0, 0)))
    tail_x = _tail(half_width, np.sqrt(var_x))
    tail_p = _tail(np.pi / grid.dx, np.sqrt(var_p))
    if max(tail_x, tail_p) > TAIL_TOL:
        raise GridError(f"grid tail mass too large (position {tail_x:.2e}, momentum {tail_p:.2e})")

    x = grid.axis
    u = 0.5 * (x[:, None] + x[None, :])
    v = x[:, None] - x[None, :]
    values = np.exp(-(u**2) / (2 * var_x) - var_p * v**2 / 2).astype(complex)
    values /= np.real(np.trace(values)) * grid.dx
    return replace(grid, values=values)


def _edge_mass(k: KernelGrid) -> float:
    diag = np.abs(np.real(np.diag(k.values))) * k.spacing
    m = max(1, int(EDGE_FRACTION * k.n))
    return float(diag[:m].sum() + diag[-m:].sum())


def _unitary_dft(a: np.ndarray, inverse: bool = False) -> np.ndarray:
    """``U a U^dagger`` with ``U[m, j] = exp(-i k_m x_j) / sqrt(N)`` on centred grids."""
    fwd, back = (np.fft.ifft, np.fft.fft) if inverse else (np.fft.fft, np.fft.ifft)
    a = np.fft.ifftshift(a)
    a = fwd(a, axis=0, norm="ortho")
    a = back(a, axis=1, norm="ortho")
    return np.fft.fftshift(a)


def _change_basis(k: KernelGrid, target: str) -> KernelGrid:
    if k.basis == target:
        return k
    r = _unitary_dft(k.values * k.spacing, inverse=(target == "position"))
    out = replace(k, basis=target)
    out = replace(out, values=r / out.spacing)
    if _edge_mass(out) > EDGE_TOL:
        raise GridError(f"aliasing: {target}-space edge mass {_edge_mass(out):.2e}")
    return out


def to_momentum_rep(kernel: KernelGrid) -> KernelGrid:
    return _change_basis(kernel, "momentum")


def to_position_rep(kernel: KernelGrid) -> KernelGrid:
    return _change_basis(kernel, "position")


def _dephase(k: KernelGrid, sigma: float) -> KernelGrid:
    if not sigma > 0:
        raise DomainError(f"measurement width must be positive, got {sigma}")
    a = k.axis
    v = a[:, None] - a[None, :]
    return replace(k, values=k.values * np.exp(-(v**2) / (8 * sigma**2)))


def apply_q_measurement(kernel: KernelGrid, sigma_q_physical: float) -> KernelGrid:
    """Outcome-averaged Gaussian q-measurement: multiply rho(x, x') by ``exp[-(x-x')^2 / (8 sigma^2)]``."""
    return _dephase(to_position_rep(kernel), sigma_q_physical)


def apply_p_measurement(kernel: KernelGrid, sigma_p_physical: float) -> KernelGrid:
    return _dephase(to_momentum_rep(kernel), sigma_p_physical)


@dataclass(frozen=True)
class KernelMoments:
    q2: float
    p2: float

    @property
    def cov(self) -> np.ndarray:
        return np.diag([2 * self.q2, 2 * self.p2])


def _second_moment(k: KernelGrid) -> float:
    a = k.axis
    return float(np.sum(a**2 * np.real(np.diag(k.values))) * k.spacing)


def kernel_moments(kernel: KernelGrid) -> KernelMoments:
    return KernelMoments(_second_moment(to_position_rep(kernel)), _second_moment(to_momentum_rep(kernel)))


@dataclass(frozen=True)
class ProbeCovReport:
    """Side-by-side comparison of the kernel pipeline and the closed-form probe covariance."""

    nbar: float
    sigma_q: float
    sigma_p: float
    sigma_oracle: np.ndarray
    sigma_closed: np.ndarray
    traces: Tuple[float, ...]
    moment_shifts: Tuple[float, float]
    half_width: float
    n: int

    @property
    def difference(self) -> np.ndarray:
        return self.sigma_oracle - self.sigma_closed

    @property
    def thermal_cov(self) -> np.ndarray:
        return (2 * self.nbar + 1) * np.eye(2)

    def notes(self) -> List[str]:
        out = []
        if np.max(np.abs(self.difference)) > 1e-6:
            out.append("oracle and closed-form probe covariances differ")
        if np.max(np.abs(self.sigma_closed)) < 1e-6 * np.max(np.abs(self.sigma_oracle)):
            out.append("closed form tends to 0 while the oracle keeps the thermal covariance")
        return out

    def rows(self) -> List[dict]:
        rows = []
        for (i, j), name in {(0, 0): "s11", (0, 1): "s12", (1, 1): "s22"}.items():
            rows.append(
                {
                    "entry": name,
                    "oracle": float(self.sigma_oracle[i, j]),
                    "closed_form": float(self.sigma_closed[i, j]),
                    "difference": float(self.difference[i, j]),
                    "thermal": float(self.thermal_cov[i, j]),
                }
            )
        return rows


def physical_widths(nbar: float, sigma_q: float, sigma_p: float) -> Tuple[float, float]:
    """Undo the dimensionless parametrisation: ``sigma_phys^2 = sigma^2 / (2 nbar + 1)``."""
    c = 2 * nbar + 1
    return sigma_q / np.sqrt(c), sigma_p / np.sqrt(c)


def oracle_probe_cov(nbar: float, sigma_q: float, sigma_p: float, n: int = DEFAULT_N) -> ProbeCovReport:
    """Run thermal kernel -> q-measurement -> p-measurement and read back the covariance."""
    m = MeasurementSettings(sigma_q, sigma_p)
    sq, sp = physical_widths(nbar, sigma_q, sigma_p)
    thermal = make_thermal(nbar)
    var = (2 * nbar + 1) / 2
    # each dephasing adds at most 1 / (4 sigma^2) to the conjugate variance
    half_width = default_half_width(var, var + 1 / (4 * sp**2), var + 1 / (4 * sq**2))

    k0 = kernel_from_state(thermal, half_width, n)
    q2_before = _second_moment(k0)
    k1 = apply_q_measurement(k0, sq)
    q2_after = _second_moment(k1)
    k1p = to_momentum_rep(k1)
    p2_before = _second_moment(k1p)
    k2 = apply_p_measurement(k1p, sp)
    p2_after = _second_moment(k2)
    moments = kernel_moments(k2)
    traces = (k0.trace(), k1.trace(), k1p.trace(), k2.trace(), to_position_rep(k2).trace())
    return ProbeCovReport(
        nbar,
        sigma_q,
        sigma_p,
        moments.cov,
        probe_cov(nbar, m),
        traces,
        (q2_after - q2_before, p2_after - p2_before),
        half_width,
        n,
    )


# --- Fock-basis coherence oracle --------------------------------------------


@dataclass(frozen=True)
class FockCoherence:
    thermal_ref: float
    dephased: float
    mean_photons: float
    entropy: float
    tail: float


def _entropy_of(eigs: np.ndarray) -> float:
    eigs = eigs[eigs > 1e-300]
    return float(-np.sum(eigs * np.log(eigs)))


def _thermal_entropy(nbar: float) -> float:
    if nbar <= 0:
        return 0.0
    return float((nbar + 1) * np.log1p(nbar) - nbar * np.log(nbar))


def fock_density_matrix(state: GaussianState, cutoff: int, pad: Optional[int] = None) -> Tuple[np.ndarray, float]:
    """Squeezed thermal state in the Fock basis, truncated to ``cutoff`` levels.

    The squeeze operator is exponentiated in a larger space of
    ``cutoff + pad`` levels before truncation. Returns the truncated
    matrix and the population lost to truncation.
    """
    cov = state.cov
    if abs(cov[0, 1]) > 0 or np.any(state.mean != 0):
        raise DomainError("Fock oracle needs a zero-mean state with diagonal covariance")
    det = float(np.linalg.det(cov))
    if det > 25 + 1e-9:
        raise DomainError(f"det(cov) = {det:.4g} exceeds 25")
    r = 0.25 * np.log(cov[1, 1] / cov[0, 0])
    if abs(r) > 1.2 + 1e-12:
        raise DomainError(f"squeezing |r| = {abs(r):.4g} exceeds 1.2")
    if cutoff < 100:
        raise DomainError("cutoff must be >= 100")
    nu = np.sqrt(max(det, 1.0))
    n_eff = (nu - 1) / 2

    dim = cutoff + (pad if pad is not None else cutoff)
    levels = np.arange(dim)
    if n_eff > 0:
        pops = np.exp(levels * np.log(n_eff / (n_eff + 1))) / (n_eff + 1)
    else:
        pops = (levels == 0).astype(float)
    a = np.diag(np.sqrt(levels[1:].astype(float)), k=1)
    gen = 0.5 * r * (a @ a - a.T @ a.T)
    s = expm(gen)
    rho_big = (s * pops) @ s.T
    rho = rho_big[:cutoff, :cutoff]
    tail = 1.0 - float(np.trace(rho))
    return 0.5 * (rho + rho.T), tail


def fock_coherence(state: GaussianState, cutoff: int = 200) -> FockCoherence:
    """Coherence against the thermal reference and against the fully dephased state."""
    rho, tail = fock_density_matrix(state, cutoff)
    if tail > FOCK_TAIL_TOL:
        raise CutoffError(f"truncation loses population {tail:.2e} > {FOCK_TAIL_TOL}")
    s = _entropy_of(np.linalg.eigvalsh(rho))
    diag = np.clip(np.diag(rho), 0, None)
    n_mean = float(np.arange(cutoff) @ diag)
    return FockCoherence(_thermal_entropy(n_mean) - s, _entropy_of(diag) - s, n_mean, s, tail)
