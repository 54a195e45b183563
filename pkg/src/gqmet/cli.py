"""Command-line front end.

Exit codes: 0 success, 1 invalid arguments, 2 probe violates the
uncertainty bound, 3 numerical failure.

Every subcommand accepts ``--config FILE`` with flat ``key = value`` lines
(``#`` starts a comment); explicit flags override file values. When a
config file is used, its lines are copied into a comment header atop every
CSV written.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import warnings
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import experiments as ex
from .channels import amplifier, apply_channel, attenuator
from .coherence import coherence
from .core import thermal_occupation
from .errors import DomainError, FitError, GqmetError, MalformedInputError, NumericalFailure
from .metrology import CHANNEL_PARAMS, channel_family, qfi_bures, qfi_closed, qfi_generic
from .oracle import fock_coherence, oracle_probe_cov
from .probe import AsymmetrySettings, MeasurementSettings, ProbeSpec, prepare_probe, validate_probe

EXIT_OK, EXIT_ARGS, EXIT_PROBE, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "channel": "attenuator",
    "estimate": None,
    "scan": None,
    "phi": float(np.pi / 4),
    "rg": 1.0,
    "mbar": 0.5,
    "nbar": None,
    "beta": 1.0,
    "omega": 1.0,
    "sigma_q": 1.0,
    "sigma_p": 1.0,
    "sigma": None,
    "epsilon": 0.0,
    "tau": 1e-5,
    "start": None,
    "stop": None,
    "count": 51,
    "outputs": "qfi_closed,qfi_generic",
    "check": "probe-cov",
    "n": 2048,
    "cutoff": 200,
    "mode": "free_n",
    "exponent": 3.0,
    "id": None,
    "out": None,
    "input": None,
    "x_col": "epsilon",
    "y_col": "qfi",
}
FLOAT_KEYS = {"phi", "rg", "mbar", "nbar", "beta", "omega", "sigma_q", "sigma_p", "sigma", "epsilon", "tau", "start", "stop", "exponent"}
INT_KEYS = {"count", "n", "cutoff"}


class UsageError(Exception):
    pass


class ProbeViolation(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ARGS, f"{self.prog}: error: {message}\n")


def read_config(path) -> Tuple[Dict[str, str], List[str]]:
    """Parse ``key = value`` lines; returns the mapping and the raw setting lines."""
    values, raw = {}, []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in stripped.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = value
        raw.append(line.strip())
    return values, raw


def resolve(args: argparse.Namespace) -> Tuple[Dict[str, object], List[str]]:
    """Merge defaults < config file < flags and coerce/validate numeric values."""
    conf, raw = ({}, [])
    if getattr(args, "config", None):
        conf, raw = read_config(args.config)
    merged = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        value = flag if flag is not None else conf.get(key, default)
        if value is not None and key in FLOAT_KEYS:
            try:
                value = float(value)
            except ValueError:
                raise UsageError(f"{key} must be a number, got {value!r}") from None
            if not np.isfinite(value):
                raise UsageError(f"{key} must be finite")
        elif value is not None and key in INT_KEYS:
            try:
                value = int(value)
            except ValueError:
                raise UsageError(f"{key} must be an integer, got {value!r}") from None
        merged[key] = value
    _validate(merged)
    comments = []
    if raw:
        comments = [f"config: {args.config}", *raw]
    return merged, comments


def _validate(c: dict):
    checks = [
        ("phi", lambda v: 0 <= v <= np.pi / 2 + 1e-12, "in [0, pi/2]"),
        ("rg", lambda v: v >= 0, ">= 0"),
        ("mbar", lambda v: v >= 0, ">= 0"),
        ("nbar", lambda v: v >= 0, ">= 0"),
        ("beta", lambda v: v > 0, "> 0"),
        ("omega", lambda v: v > 0, "> 0"),
        ("sigma_q", lambda v: v > 0, "> 0"),
        ("sigma_p", lambda v: v > 0, "> 0"),
        ("sigma", lambda v: v > 0, "> 0"),
        ("epsilon", lambda v: abs(v) < 1, "in (-1, 1)"),
        ("tau", lambda v: v > 0, "> 0"),
        ("count", lambda v: v >= 2, ">= 2"),
        ("cutoff", lambda v: v >= 100, ">= 100"),
        ("n", lambda v: v >= 1024 and v & (v - 1) == 0, "a power of two >= 1024"),
    ]
    for key, ok, what in checks:
        v = c.get(key)
        if v is not None and not ok(v):
            raise UsageError(f"{key} must be {what}, got {v}")
    if c["channel"] not in CHANNEL_PARAMS:
        raise UsageError(f"channel must be one of {sorted(CHANNEL_PARAMS)}")


def probe_from(c: dict) -> ProbeSpec:
    nbar = c["nbar"] if c["nbar"] is not None else thermal_occupation(c["beta"], c["omega"])
    if c["sigma"] is not None:
        settings = AsymmetrySettings(c["sigma"], c["epsilon"])
    else:
        settings = MeasurementSettings(c["sigma_q"], c["sigma_p"])
    spec = ProbeSpec(nbar, settings)
    if not validate_probe(spec):
        raise ProbeViolation(
            f"probe violates the uncertainty bound: sigma_q*sigma_p = {spec.sigma_q * spec.sigma_p:.6g} > 2*nbar+1 = {2 * nbar + 1:.6g}"
        )
    return spec


def _estimate(c: dict) -> str:
    est = c["estimate"] or CHANNEL_PARAMS[c["channel"]][0]
    if est not in CHANNEL_PARAMS[c["channel"]]:
        raise UsageError(f"cannot estimate {est!r} on {c['channel']!r}")
    return est


def _emit(table: ex.Table, out: Optional[str], comments: List[str]):
    table.comments = comments
    if out:
        ex.write_csv(out, table)
        print(f"wrote {out}")
    else:
        sys.stdout.write(table.to_csv())


# --- subcommands --------------------------------------------------------------


def cmd_qfi(c: dict, comments: List[str]) -> int:
    probe = probe_from(c)
    est = _estimate(c)
    params = {"phi": c["phi"], "rg": c["rg"], "mbar": c["mbar"]}
    fam = channel_family(c["channel"], est, probe, **params)
    theta = params[est]
    br = qfi_generic(fam, theta)
    closed = qfi_closed(c["channel"], est, nbar=probe.nbar, sigma_q=probe.sigma_q, sigma_p=probe.sigma_p, **params)
    bures = qfi_bures(fam, theta, c["tau"])
    if not all(np.isfinite(v) for v in (br.total, closed, bures)):
        raise NumericalFailure(f"QFI is not finite at {est}={theta!r} (closed={closed!r}, generic={br.total!r})")
    print(f"channel={c['channel']} estimate={est} theta={theta!r}")
    print(f"term_cov={br.term_cov!r}")
    print(f"term_purity={br.term_purity!r}")
    print(f"term_mean={br.term_mean!r}")
    print(f"total={br.total!r}")
    rel = lambda a, b: abs(a - b) / abs(b) if b else abs(a - b)
    print(
        f"closed={closed!r} generic={br.total!r} bures={bures!r} "
        f"rel(closed,generic)={rel(closed, br.total):.3e} rel(bures,generic)={rel(bures, br.total):.3e}"
    )
    return EXIT_OK


def cmd_sweep(c: dict, comments: List[str]) -> int:
    est = _estimate(c)
    scan = c["scan"] or est
    start = c["start"] if c["start"] is not None else 0.0
    stop = c["stop"]
    if stop is None:
        stop = {"phi": float(np.pi / 2), "rg": 3.0, "mbar": 2.0, "epsilon": 0.9}.get(scan, 1.0)
    spec = ex.SweepSpec(
        c["channel"], est, scan, start, stop, c["count"],
        phi=c["phi"], rg=c["rg"], mbar=c["mbar"], nbar=c["nbar"], beta=c["beta"], omega=c["omega"],
        sigma_q=c["sigma_q"], sigma_p=c["sigma_p"], sigma=c["sigma"], epsilon=c["epsilon"],
        outputs=tuple(s.strip() for s in c["outputs"].split(",") if s.strip()),
    )
    if scan != "epsilon":
        probe_from(c)
    _emit(ex.run_sweep(spec), c["out"], comments)
    return EXIT_OK


def cmd_coherence(c: dict, comments: List[str]) -> int:
    probe = probe_from(c)
    state = prepare_probe(probe)
    where = "probe"
    if c["through_channel"]:
        ch = attenuator(c["phi"], c["mbar"]) if c["channel"] == "attenuator" else amplifier(c["rg"], c["mbar"])
        state = apply_channel(ch, state)
        where = c["channel"]
    rep = coherence(state)
    print(f"state={where} sigma_q={probe.sigma_q!r} sigma_p={probe.sigma_p!r} nbar={probe.nbar!r}")
    print(f"coherence={rep.coherence!r}")
    print(f"ref_occupation={rep.ref_occupation!r}")
    print(f"state_entropy={rep.state_entropy!r}")
    print(f"ref_entropy={rep.ref_entropy!r}")
    return EXIT_OK


def cmd_figure(c: dict, comments: List[str]) -> int:
    if c["id"] not in ex.FIGURES:
        raise UsageError(f"--id must be one of {ex.FIGURES}")
    out = c["out"] or "."
    for p in ex.reproduce_figure(c["id"], out, comments):
        print(f"wrote {p}")
    return EXIT_OK


def cmd_table1(c: dict, comments: List[str]) -> int:
    rows = ex.reproduce_table1()
    for r in rows:
        flag = "" if r.status == "OK" else f"  {r.status}: {r.note}"
        print(
            f"{r.case:16s} alpha={r.alpha_ours:.6g} (ref {r.alpha_ref}) beta={r.beta_ours:.4g} "
            f"beta@n=3={r.beta_n3:.4g} (ref {r.beta_ref}) n={r.n_ours:.4g}{flag}"
        )
    table = ex.table1_table(rows)
    table.comments = comments
    if c["out"]:
        ex.write_csv(c["out"], table)
        print(f"wrote {c['out']}")
    return EXIT_OK


def cmd_oracle(c: dict, comments: List[str]) -> int:
    probe = probe_from(c)
    if c["check"] == "probe-cov":
        rep = oracle_probe_cov(probe.nbar, probe.sigma_q, probe.sigma_p, n=c["n"])
        table = ex.Table(["entry", "oracle", "closed_form", "difference", "thermal"], rep.rows())
        print(f"grid: n={rep.n} half_width={rep.half_width!r}")
        print("traces after each stage: " + " ".join(f"{t:.12f}" for t in rep.traces))
        print(f"q2 shift under q-measurement: {rep.moment_shifts[0]:.3e}; p2 shift under p-measurement: {rep.moment_shifts[1]:.3e}")
        for r in rep.rows():
            print(f"{r['entry']}: oracle={r['oracle']:.9g} closed_form={r['closed_form']:.9g} diff={r['difference']:.3e}")
        for note in rep.notes():
            print(f"note: {note}")
    elif c["check"] == "coherence":
        state = prepare_probe(probe)
        fock = fock_coherence(state, c["cutoff"])
        closed = coherence(state).coherence
        table = ex.Table(
            ["closed_form", "fock_thermal_ref", "fock_dephased", "difference", "fock_tail"],
            [{"closed_form": closed, "fock_thermal_ref": fock.thermal_ref, "fock_dephased": fock.dephased,
              "difference": fock.thermal_ref - closed, "fock_tail": fock.tail}],
        )
        print(f"closed_form={closed!r} fock_thermal_ref={fock.thermal_ref!r} fock_dephased={fock.dephased!r}")
        print(f"difference={fock.thermal_ref - closed:.3e} tail={fock.tail:.3e}")
    else:
        raise UsageError("--check must be probe-cov or coherence")
    if c["out"]:
        table.comments = comments
        ex.write_csv(c["out"], table)
        print(f"wrote {c['out']}")
    return EXIT_OK


def cmd_fit(c: dict, comments: List[str]) -> int:
    if not c["input"]:
        raise UsageError("fit requires --input")
    try:
        with open(c["input"], newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(line for line in fh if not line.startswith("#"))
            pts = []
            for row in reader:
                if "valid" in row and row["valid"] == "0":
                    continue
                pts.append((float(row[c["x_col"]]), float(row[c["y_col"]])))
    except (OSError, KeyError, ValueError) as exc:
        raise UsageError(f"cannot read points from {c['input']}: {exc}") from None
    if c["mode"] not in ("free_n", "fixed_n"):
        raise UsageError("--mode must be free_n or fixed_n")
    fit = ex.fit_power_law(pts, c["mode"], c["exponent"] if c["mode"] == "fixed_n" else None)
    print(f"alpha={fit.alpha!r} beta={fit.beta!r} n={fit.n!r} rms_residual={fit.rms_residual!r} ({fit.grid_used})")
    if c["out"]:
        t = ex.Table(["alpha", "beta", "n", "rms_residual"], [{"alpha": fit.alpha, "beta": fit.beta, "n": fit.n, "rms_residual": fit.rms_residual}])
        t.comments = comments
        ex.write_csv(c["out"], t)
    return EXIT_OK


COMMANDS = {
    "qfi": cmd_qfi,
    "sweep": cmd_sweep,
    "coherence": cmd_coherence,
    "figure": cmd_figure,
    "table1": cmd_table1,
    "oracle": cmd_oracle,
    "fit": cmd_fit,
}


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value file; flags override it")
    g = p.add_argument_group("probe")
    g.add_argument("--nbar", type=str, help="probe thermal occupation (overrides beta/omega)")
    g.add_argument("--beta", type=str)
    g.add_argument("--omega", type=str)
    g.add_argument("--sigma-q", dest="sigma_q", type=str)
    g.add_argument("--sigma-p", dest="sigma_p", type=str)
    g.add_argument("--sigma", type=str, help="overall width; selects the (sigma, epsilon) form")
    g.add_argument("--epsilon", type=str)
    g = p.add_argument_group("channel")
    g.add_argument("--channel", choices=sorted(CHANNEL_PARAMS))
    g.add_argument("--phi", type=str)
    g.add_argument("--rg", type=str)
    g.add_argument("--mbar", type=str)
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gqmet", description="Gaussian probe metrology: QFI, coherence, figures and Table I.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("qfi", help="QFI breakdown with closed/generic/Bures cross-check")
    _add_common(p)
    p.add_argument("--estimate", choices=["phi", "rg", "mbar"])
    p.add_argument("--tau", type=str)

    p = sub.add_parser("sweep", help="scan one parameter and write a CSV")
    _add_common(p)
    p.add_argument("--estimate", choices=["phi", "rg", "mbar"])
    p.add_argument("--scan", choices=list(ex.SCANS))
    p.add_argument("--start", type=str)
    p.add_argument("--stop", type=str)
    p.add_argument("--count", type=str)
    p.add_argument("--outputs", help=f"comma separated subset of {','.join(ex.OUTPUTS)}")

    p = sub.add_parser("coherence", help="coherence of the prepared probe (optionally after a channel)")
    _add_common(p)
    p.add_argument("--through-channel", action="store_true", help="apply --channel before measuring coherence")

    p = sub.add_parser("figure", help="write the CSV panels of one figure")
    _add_common(p)
    p.add_argument("--id", choices=list(ex.FIGURES))

    p = sub.add_parser("table1", help="reproduce the power-law coefficient table")
    _add_common(p)

    p = sub.add_parser("oracle", help="brute-force diagnostics")
    _add_common(p)
    p.add_argument("--check", choices=["probe-cov", "coherence"])
    p.add_argument("--n", type=str, help="kernel grid points (power of two)")
    p.add_argument("--cutoff", type=str, help="Fock cutoff")

    p = sub.add_parser("fit", help="fit alpha + beta eps^n to a CSV of points")
    _add_common(p)
    p.add_argument("--input")
    p.add_argument("--mode", choices=["free_n", "fixed_n"])
    p.add_argument("--exponent", type=str, help="n for fixed_n mode")
    p.add_argument("--x-col", dest="x_col")
    p.add_argument("--y-col", dest="y_col")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        conf, comments = resolve(args)
        conf["through_channel"] = getattr(args, "through_channel", False)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return COMMANDS[args.command](conf, comments)
    except (UsageError, DomainError, MalformedInputError, FitError) as exc:
        print(f"gqmet: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except ProbeViolation as exc:
        print(f"gqmet: {exc}", file=sys.stderr)
        return EXIT_PROBE
    except (NumericalFailure, GqmetError, FloatingPointError) as exc:
        print(f"gqmet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
