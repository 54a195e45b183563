"""Parameter sweeps, figure data, power-law fits and the Table I comparison.

CSV conventions: UTF-8, comma separated, one header line, floats written
as the shortest round-trip decimal (``repr``), NaN as ``nan``. Files are
written atomically (temporary file + rename).
"""

from __future__ import annotations

import csv
import io
import logging
import os
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .coherence import coherence_derivative, coherence_value
from .core import thermal_occupation
from .errors import DomainError, EmptyResultError, FitError, FitPointsExcludedWarning
from .metrology import CHANNEL_PARAMS, channel_family, eigen_product, qfi_bures, qfi_closed, qfi_generic
from .probe import AsymmetrySettings, MeasurementSettings, ProbeSpec, prepare_probe, validate_probe

log = logging.getLogger(__name__)

OUTPUTS = ("qfi_closed", "qfi_generic", "qfi_bures", "eigen_product", "coherence", "dcoherence")
SCANS = ("phi", "rg", "mbar", "epsilon")

#: Reference Table I coefficients (alpha, beta) per case.
REFERENCE_TABLE1 = {
    ("attenuator", "phi"): (0.16, 1.72),
    ("attenuator", "mbar"): (0.31, 0.40),
    ("amplifier", "rg"): (3.72, 1.30),
    ("amplifier", "mbar"): (0.12, 0.34),
}
TABLE1_TOL = 0.05
EPSILON_GRID = np.linspace(0.0, 0.9, 19)
FIGURE_PROBES = ((1.0, 1.0), (0.8, 0.8), (1.2, 1.2), (1.2, 0.8), (1.2, 1.0), (0.8, 1.0))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("GQMET_THREADS", "1")))
    except ValueError:
        return 1


# --- sweeps -----------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """One scan of a channel parameter (or of the asymmetry ``epsilon``).

    The probe is given by ``nbar`` (or ``beta``/``omega`` when ``nbar`` is
    None) and either ``(sigma_q, sigma_p)`` or, when ``sigma`` is set,
    ``(sigma, epsilon)``. An ``epsilon`` scan always uses the asymmetric form.
    """

    channel: str
    estimate: str
    scan: Optional[str] = None
    start: float = 0.0
    stop: float = 1.0
    count: int = 51
    phi: float = np.pi / 4
    rg: float = 1.0
    mbar: float = 0.5
    nbar: Optional[float] = None
    beta: float = 1.0
    omega: float = 1.0
    sigma_q: float = 1.0
    sigma_p: float = 1.0
    sigma: Optional[float] = None
    epsilon: float = 0.0
    outputs: Tuple[str, ...] = ("qfi_closed", "qfi_generic")

    def __post_init__(self):
        if self.channel not in CHANNEL_PARAMS:
            raise DomainError(f"unknown channel {self.channel!r}")
        if self.estimate not in CHANNEL_PARAMS[self.channel]:
            raise DomainError(f"cannot estimate {self.estimate!r} on {self.channel!r}")
        scan = self.scan or self.estimate
        if scan not in CHANNEL_PARAMS[self.channel] + ("epsilon",):
            raise DomainError(f"cannot scan {scan!r} on {self.channel!r}")
        object.__setattr__(self, "scan", scan)
        object.__setattr__(self, "outputs", tuple(self.outputs))
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad:
            raise DomainError(f"unknown outputs {bad}; choose from {OUTPUTS}")
        if self.count < 2:
            raise DomainError("grid count must be >= 2")
        if self.nbar is not None and self.nbar < 0:
            raise DomainError("nbar must be >= 0")

    @property
    def probe_nbar(self) -> float:
        return self.nbar if self.nbar is not None else thermal_occupation(self.beta, self.omega)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)

    def probe(self, epsilon: Optional[float] = None) -> ProbeSpec:
        if self.scan == "epsilon" or self.sigma is not None:
            eps = self.epsilon if epsilon is None else epsilon
            settings = AsymmetrySettings(1.0 if self.sigma is None else self.sigma, eps)
        else:
            settings = MeasurementSettings(self.sigma_q, self.sigma_p)
        return ProbeSpec(self.probe_nbar, settings)


@dataclass
class Table:
    columns: List[str]
    rows: List[dict] = field(default_factory=list)
    comments: List[str] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        for c in self.comments:
            buf.write(f"# {c}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([format_value(r[c]) for c in self.columns])
        return buf.getvalue()


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_text_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, table: Table) -> Path:
    return write_text_atomic(path, table.to_csv())


def _sweep_point(spec: SweepSpec, x: float) -> dict:
    params = {"phi": spec.phi, "rg": spec.rg, "mbar": spec.mbar}
    eps = None
    if spec.scan == "epsilon":
        eps = x
    else:
        params[spec.scan] = x
    row = {spec.scan: float(x)}
    try:
        probe = spec.probe(eps)
    except DomainError:
        probe = None
    valid = probe is not None and validate_probe(probe)
    row.update({o: float("nan") for o in spec.outputs})
    row["valid"] = bool(valid)
    if not valid:
        return row

    nbar, sq, sp = probe.nbar, probe.sigma_q, probe.sigma_p
    theta = params[spec.estimate]
    fam = channel_family(spec.channel, spec.estimate, probe, **params)
    for out in spec.outputs:
        if out == "qfi_closed":
            val = qfi_closed(spec.channel, spec.estimate, nbar=nbar, sigma_q=sq, sigma_p=sp, **params)
        elif out == "qfi_generic":
            val = qfi_generic(fam, theta).total
        elif out == "qfi_bures":
            val = qfi_bures(fam, theta)
        elif out == "eigen_product":
            val = eigen_product(spec.channel, nbar=nbar, sigma_q=sq, sigma_p=sp, **params)
        elif out == "coherence":
            val = coherence_value(fam(theta))
        else:
            val = coherence_derivative(fam, theta)
        row[out] = float(val)
    return row


def run_sweep(spec: SweepSpec, workers: Optional[int] = None) -> Table:
    """Evaluate ``spec.outputs`` on every grid point, in grid order.

    Unphysical grid points are kept with ``valid = 0`` and NaN outputs.
    """
    workers = workers or _workers()
    grid = spec.grid
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda x: _sweep_point(spec, x), grid))
    else:
        rows = [_sweep_point(spec, x) for x in grid]
    if not any(r["valid"] for r in rows):
        raise EmptyResultError("no physical grid point in sweep")
    return Table([spec.scan, *spec.outputs, "valid"], rows)


# --- coherence map ----------------------------------------------------------


@dataclass
class CoherenceMap:
    sigma_q: np.ndarray
    sigma_p: np.ndarray
    values: np.ndarray
    valid: np.ndarray

    def to_table(self) -> Table:
        cols = ["sigma_q/sigma_p", *[format_value(float(s)) for s in self.sigma_p], "invalid"]
        rows = []
        for i, sq in enumerate(self.sigma_q):
            r = {"sigma_q/sigma_p": float(sq), "invalid": int((~self.valid[i]).sum())}
            for j, c in enumerate(cols[1:-1]):
                r[c] = float(self.values[i, j])
            rows.append(r)
        return Table(cols, rows)


def coherence_map(sigma_q: Sequence[float], sigma_p: Sequence[float], nbar: float) -> CoherenceMap:
    """Coherence of the prepared probe on a ``sigma_q x sigma_p`` grid (NaN where unphysical)."""
    sq, sp = np.asarray(sigma_q, float), np.asarray(sigma_p, float)
    values = np.full((sq.size, sp.size), np.nan)
    valid = np.zeros((sq.size, sp.size), bool)
    for i, a in enumerate(sq):
        for j, b in enumerate(sp):
            spec = ProbeSpec.make(nbar, a, b)
            if validate_probe(spec):
                valid[i, j] = True
                values[i, j] = coherence_value(prepare_probe(spec))
    return CoherenceMap(sq, sp, values, valid)


# --- power-law fit ----------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    """``I(eps) = alpha + beta * eps**n``; ``alpha`` is pinned to ``I(0)``."""

    alpha: float
    beta: float
    n: float
    rms_residual: float
    grid_used: str
    excluded: Tuple[float, ...] = ()

    def __call__(self, eps):
        return self.alpha + self.beta * np.asarray(eps, float) ** self.n


def fit_power_law(points: Iterable[Tuple[float, float]], mode: str = "free_n", n: Optional[float] = None) -> FitResult:
    """Fit ``alpha + beta eps^n`` to ``(eps, I)`` pairs.

    ``mode="free_n"`` fits ``(n, ln beta)`` by linear least squares on
    ``ln(I - alpha)`` against ``ln eps``; ``mode="fixed_n"`` fits ``beta``
    only, by least squares in the original scale. Points with
    ``I <= alpha`` are dropped with a warning. The reported residual is the
    RMS in the original scale over all ``eps >= 0`` points.
    """
    pts = sorted((float(e), float(i)) for e, i in points)
    if len(pts) < 4:
        raise FitError("need at least 4 points")
    eps = np.array([p[0] for p in pts])
    val = np.array([p[1] for p in pts])
    zero = np.isclose(eps, 0.0, atol=1e-15)
    if not zero.any():
        raise FitError("points must include eps = 0")
    alpha = float(val[zero][0])
    pos = eps > 0
    dy = val - alpha

    if mode == "free_n":
        usable = pos & (dy > 0)
        excluded = tuple(float(e) for e in eps[pos & ~usable])
        if excluded:
            warnings.warn(f"excluded {len(excluded)} point(s) with I <= alpha from the log fit", FitPointsExcludedWarning, stacklevel=2)
        if usable.sum() < 2:
            raise FitError("fewer than 2 points usable for the log-log fit")
        slope, intercept = np.polyfit(np.log(eps[usable]), np.log(dy[usable]), 1)
        n_fit, beta = float(slope), float(np.exp(intercept))
    elif mode == "fixed_n":
        if n is None:
            raise FitError("fixed_n mode requires n")
        excluded = ()
        x = eps[pos] ** n
        beta = float(x @ dy[pos] / (x @ x))
        n_fit = float(n)
    else:
        raise FitError(f"unknown mode {mode!r}")

    resid = val - (alpha + beta * eps**n_fit)
    rms = float(np.sqrt(np.mean(resid**2)))
    grid = f"{len(pts)} points, eps in [{eps.min():g}, {eps.max():g}]"
    return FitResult(alpha, beta, n_fit, rms, grid, excluded)


# --- Table I ----------------------------------------------------------------


def epsilon_scan(channel: str, estimate: str, epsilons=EPSILON_GRID, **fixed) -> Table:
    spec = SweepSpec(
        channel,
        estimate,
        scan="epsilon",
        start=float(epsilons[0]),
        stop=float(epsilons[-1]),
        count=len(epsilons),
        outputs=("qfi_closed",),
        **fixed,
    )
    return run_sweep(spec)


def _fit_scan(table: Table, mode: str = "free_n", n: Optional[float] = None) -> FitResult:
    pts = [(r["epsilon"], r["qfi_closed"]) for r in table.rows if r["valid"]]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FitPointsExcludedWarning)
        return fit_power_law(pts, mode, n)


@dataclass(frozen=True)
class Table1Row:
    channel: str
    estimate: str
    alpha_ours: float
    alpha_ref: float
    beta_ours: float
    beta_ref: float
    n_ours: float
    rms_residual: float
    beta_n3: float
    invalid_eps: Tuple[float, ...]

    @property
    def case(self) -> str:
        return f"{self.channel}-{self.estimate}"

    @property
    def alpha_rel_diff(self) -> float:
        return abs(self.alpha_ours - self.alpha_ref) / self.alpha_ref

    @property
    def status(self) -> str:
        return "OK" if self.alpha_rel_diff <= TABLE1_TOL else "MISMATCH"

    @property
    def note(self) -> str:
        if self.status == "OK":
            return ""
        return "alpha not reproducible from the stated fixed parameters (phi=pi/4 mbar=0.5 beta=omega=1 sigma=1)"


def reproduce_table1(epsilons=EPSILON_GRID) -> List[Table1Row]:
    """Four epsilon scans (sigma = 1, beta = omega = 1, phi = pi/4, rg = 1, mbar = 0.5) and their fits."""
    out = []
    for (channel, estimate), (a_ref, b_ref) in REFERENCE_TABLE1.items():
        t = epsilon_scan(channel, estimate, epsilons)
        free = _fit_scan(t)
        fixed = _fit_scan(t, "fixed_n", 3.0)
        invalid = tuple(r["epsilon"] for r in t.rows if not r["valid"])
        out.append(
            Table1Row(channel, estimate, free.alpha, a_ref, free.beta, b_ref, free.n, free.rms_residual, fixed.beta, invalid)
        )
        if out[-1].status != "OK":
            log.warning("Table I %s: alpha %.5g vs reference %.3g (MISMATCH)", out[-1].case, free.alpha, a_ref)
    return out


def table1_table(rows: List[Table1Row]) -> Table:
    cols = [
        "case", "alpha_ours", "alpha_ref", "alpha_rel_diff", "beta_ours", "beta_ref",
        "beta_n3", "n_ours", "rms_residual", "invalid_eps", "status", "note",
    ]
    t = Table(cols)
    for r in rows:
        t.rows.append(
            {
                "case": r.case,
                "alpha_ours": r.alpha_ours,
                "alpha_ref": r.alpha_ref,
                "alpha_rel_diff": r.alpha_rel_diff,
                "beta_ours": r.beta_ours,
                "beta_ref": r.beta_ref,
                "beta_n3": r.beta_n3,
                "n_ours": r.n_ours,
                "rms_residual": r.rms_residual,
                "invalid_eps": ";".join(repr(float(e)) for e in r.invalid_eps),
                "status": r.status,
                "note": r.note,
            }
        )
    return t


# --- figures ----------------------------------------------------------------

FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6")
_HALF_PI = float(np.pi / 2)


def _panel(base: SweepSpec, probes=FIGURE_PROBES) -> Table:
    rows = []
    for sq, sp in probes:
        t = run_sweep(replace(base, sigma_q=sq, sigma_p=sp))
        for r in t.rows:
            rows.append({"sigma_q": sq, "sigma_p": sp, **r})
    return Table(["sigma_q", "sigma_p", base.scan, *base.outputs, "valid"], rows)


def figure_tables(fig_id: str, count: int = 61) -> Dict[str, Table]:
    """Data for one figure, keyed by ``<figure>_<panel>``."""
    if fig_id == "fig2":
        return {
            "fig2_a": _panel(SweepSpec("attenuator", "phi", "phi", 0.0, _HALF_PI, count, outputs=("eigen_product",))),
            "fig2_b": _panel(SweepSpec("attenuator", "mbar", "mbar", 0.0, 2.0, count, outputs=("eigen_product",))),
            "fig2_c": _panel(SweepSpec("attenuator", "phi", "phi", 0.0, _HALF_PI, count, outputs=("qfi_closed", "qfi_generic"))),
            "fig2_d": _panel(SweepSpec("attenuator", "mbar", "mbar", 0.0, 2.0, count, outputs=("qfi_closed", "qfi_generic"))),
        }
    if fig_id == "fig3":
        return {
            "fig3_a": _panel(SweepSpec("amplifier", "rg", "rg", 0.0, 3.0, count, outputs=("eigen_product",))),
            "fig3_b": _panel(SweepSpec("amplifier", "mbar", "mbar", 0.0, 2.0, count, outputs=("eigen_product",))),
            "fig3_c": _panel(SweepSpec("amplifier", "rg", "rg", 0.0, 3.0, count, outputs=("qfi_closed", "qfi_generic"))),
            "fig3_d": _panel(SweepSpec("amplifier", "mbar", "mbar", 0.0, 2.0, count, outputs=("qfi_closed", "qfi_generic"))),
        }
    if fig_id == "fig4":
        grid = np.linspace(0.5, 1.5, 41)
        return {"fig4_a": coherence_map(grid, grid, thermal_occupation(1.0, 1.0)).to_table()}
    if fig_id == "fig5":
        outs = ("dcoherence", "coherence", "qfi_closed")
        return {
            "fig5_a": _panel(SweepSpec("attenuator", "phi", "phi", 0.0, _HALF_PI, count, outputs=outs)),
            "fig5_a_inset": _panel(SweepSpec("attenuator", "mbar", "mbar", 0.0, 2.0, count, outputs=outs)),
            "fig5_b": _panel(SweepSpec("amplifier", "rg", "rg", 0.0, 3.0, count, outputs=outs)),
            "fig5_b_inset": _panel(SweepSpec("amplifier", "mbar", "mbar", 0.0, 2.0, count, outputs=outs)),
        }
    if fig_id == "fig6":
        tables = {}
        for panel, channel in (("fig6_a", "attenuator"), ("fig6_b", "amplifier")):
            t = Table(["estimate", "epsilon", "qfi", "fit_value", "valid"])
            for estimate in CHANNEL_PARAMS[channel]:
                scan = epsilon_scan(channel, estimate)
                fit = _fit_scan(scan)
                for r in scan.rows:
                    t.rows.append(
                        {
                            "estimate": estimate,
                            "epsilon": r["epsilon"],
                            "qfi": r["qfi_closed"],
                            "fit_value": float(fit(r["epsilon"])),
                            "valid": r["valid"],
                        }
                    )
            tables[panel] = t
        return tables
    raise DomainError(f"unknown figure {fig_id!r}; choose from {FIGURES}")


def reproduce_figure(fig_id: str, out_dir, comments: Sequence[str] = ()) -> List[Path]:
    paths = []
    for name, table in figure_tables(fig_id).items():
        table.comments = list(comments)
        paths.append(write_csv(Path(out_dir) / f"{name}.csv", table))
    return paths
