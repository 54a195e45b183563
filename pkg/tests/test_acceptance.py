"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from gqmet import experiments as ex
from gqmet.cli import main
from gqmet.coherence import coherence_derivative, coherence_value
from gqmet.core import GaussianState, bures_distance, fidelity, make_thermal, make_vacuum, thermal_occupation
from gqmet.metrology import channel_family, qfi_att_mbar, qfi_bures, qfi_closed, qfi_generic
from gqmet.oracle import (
    apply_q_measurement,
    fock_coherence,
    kernel_from_state,
    kernel_moments,
    oracle_probe_cov,
)
from gqmet.probe import ProbeSpec, prepare_probe, validate_probe

NBAR = thermal_occupation(1.0, 1.0)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return emit


def rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a - b)


def test_criterion_1_three_way_qfi(report):
    phis = np.linspace(0.1, 1.5, 15)
    rgs = np.linspace(0.1, 3.0, 15)
    mbars = (0.0, 0.5, 1.0, 2.0)
    sigmas = (0.8, 1.0, 1.2)
    worst_generic = worst_bures = 0.0
    cells = 0
    t0 = time.perf_counter()
    for sq in sigmas:
        for sp in sigmas:
            probe = ProbeSpec.make(NBAR, sq, sp)
            if not validate_probe(probe):
                continue
            for channel, grid_name, grid in (("attenuator", "phi", phis), ("amplifier", "rg", rgs)):
                for x in grid:
                    for m in mbars:
                        fixed = {"phi": np.pi / 4, "rg": 1.0, "mbar": m, grid_name: x}
                        for param in (grid_name, "mbar"):
                            closed = qfi_closed(channel, param, nbar=NBAR, sigma_q=sq, sigma_p=sp, **fixed)
                            fam = channel_family(channel, param, probe, **fixed)
                            generic = qfi_generic(fam, fixed[param]).total
                            bures = qfi_bures(fam, fixed[param])
                            worst_generic = max(worst_generic, rel(closed, generic))
                            worst_bures = max(worst_bures, rel(bures, generic), rel(bures, closed))
                            cells += 1
    elapsed = time.perf_counter() - t0
    ok = worst_generic < 1e-6 and worst_bures < 1e-4 and elapsed < 10
    report(
        1,
        ok,
        f"{cells} cells; max rel closed-generic {worst_generic:.2e} (<1e-6), "
        f"max rel vs Bures {worst_bures:.2e} (<1e-4), {elapsed:.2f} s (<10 s)",
    )


def test_criterion_2_typo_detection(report):
    args = (np.pi / 4, 0.5, NBAR, 1.0, 1.0)
    printed = qfi_att_mbar(*args, variant="as_printed")
    corrected = qfi_att_mbar(*args)
    generic = qfi_generic(channel_family("attenuator", "mbar", ProbeSpec.make(NBAR)), 0.5).total
    ok = abs(printed - 0.6748) <= 1e-3 and abs(corrected - 0.2999) <= 1e-3 and abs(generic - 0.2999) <= 1e-3
    report(2, ok, f"as_printed {printed:.6f} (0.6748), corrected {corrected:.6f}, generic {generic:.6f} (0.2999), tol 1e-3")


def test_criterion_3_table1_alpha(report):
    rows = {r.case: r for r in ex.reproduce_table1()}
    amp_rg, amp_m, att_m, att_phi = (rows[c] for c in ("amplifier-rg", "amplifier-mbar", "attenuator-mbar", "attenuator-phi"))
    ok = (
        amp_rg.alpha_rel_diff <= 0.01
        and amp_m.alpha_rel_diff <= 0.05
        and att_m.alpha_rel_diff <= 0.05
        and att_phi.status == "MISMATCH"
        and bool(att_phi.note)
    )
    report(
        3,
        ok,
        f"amp-rg {amp_rg.alpha_ours:.4f} vs 3.72 ({amp_rg.alpha_rel_diff:.2%}, <1%); "
        f"amp-mbar {amp_m.alpha_ours:.4f} vs 0.12 ({amp_m.alpha_rel_diff:.2%}, <5%); "
        f"att-mbar {att_m.alpha_ours:.4f} vs 0.31 ({att_m.alpha_rel_diff:.2%}, <5%); "
        f"att-phi {att_phi.alpha_ours:.5f} vs 0.16 flagged {att_phi.status}",
    )


# fitted exponent and residual of the four epsilon scans, recorded on the first run
FIT_ANCHORS = {
    "attenuator-phi": (2.2495190841069292, 0.0708315929303049),
    "attenuator-mbar": (2.1291035901799233, 0.010053364172587034),
    "amplifier-rg": (2.144272164893812, 0.03702165341641065),
    "amplifier-mbar": (2.2020503073202367, 0.012909100507446106),
}


def test_criterion_4_power_law(report):
    eps = np.linspace(0, 0.9, 10)
    fit = ex.fit_power_law(list(zip(eps, 0.3 + 1.7 * eps**3)))
    synthetic_ok = abs(fit.alpha - 0.3) < 1e-9 and abs(fit.beta - 1.7) < 1e-9 and abs(fit.n - 3) < 1e-9
    rows = {r.case: r for r in ex.reproduce_table1()}
    anchors_ok = all(
        rows[c].n_ours == pytest.approx(n, rel=1e-8) and rows[c].rms_residual == pytest.approx(res, rel=1e-6)
        for c, (n, res) in FIT_ANCHORS.items()
    )
    fitted = ", ".join(f"{c} n={r.n_ours:.3f} rms={r.rms_residual:.3g}" for c, r in rows.items())
    report(
        4,
        synthetic_ok and anchors_ok,
        f"synthetic (alpha, beta, n) = ({fit.alpha:.12g}, {fit.beta:.12g}, {fit.n:.12g}); "
        f"scans: {fitted}; free-n exponents sit near 2.1-2.25 rather than 3",
    )


def test_criterion_5_fidelity(report):
    rng = np.random.default_rng(5)
    worst_self = worst_sym = 0.0
    for _ in range(200):
        states = []
        for _ in range(2):
            nu, r, ang = rng.uniform(1, 10), rng.uniform(-1.5, 1.5), rng.uniform(0, np.pi)
            c, s = np.cos(ang), np.sin(ang)
            rot = np.array([[c, -s], [s, c]])
            cov = nu * rot @ np.diag([np.exp(-2 * r), np.exp(2 * r)]) @ rot.T
            states.append(GaussianState(rng.normal(size=2), 0.5 * (cov + cov.T)))
        a, b = states
        worst_self = max(worst_self, abs(fidelity(a, a) - 1), bures_distance(a, a) ** 2)
        worst_sym = max(worst_sym, abs(fidelity(a, b) - fidelity(b, a)))
    thermal = max(abs(fidelity(make_vacuum(), make_thermal(n)) - 1 / (n + 1)) for n in (0.25, 0.5, 1.0, 2.0))
    ok = worst_self < 1e-12 and worst_sym < 1e-12 and thermal < 1e-10
    report(5, ok, f"|F(a,a)-1| {worst_self:.1e}, |F(a,b)-F(b,a)| {worst_sym:.1e} (<1e-12); F(vac,th)-1/(n+1) {thermal:.1e} (<1e-10)")


def test_criterion_6_coherence(report):
    t0 = time.perf_counter()
    line = np.linspace(0.5, 1.5, 21)
    symmetric = max(
        abs(coherence_value(prepare_probe(ProbeSpec.make(NBAR, s, s)))) for s in line if validate_probe(ProbeSpec.make(NBAR, s, s))
    )
    sv = GaussianState(np.zeros(2), np.diag([math.exp(2), math.exp(-2)]))
    sv_closed, sv_fock = coherence_value(sv), fock_coherence(sv, 200).thermal_ref
    probe = prepare_probe(ProbeSpec.make(NBAR, 1.2, 0.8))
    pr_closed, pr_fock = coherence_value(probe), fock_coherence(probe, 200).thermal_ref
    elapsed = time.perf_counter() - t0
    ok = (
        symmetric < 1e-12
        and abs(sv_closed - sv_fock) < 1e-6
        and abs(pr_closed - pr_fock) < 1e-6
        and abs(sv_closed - 1.6198220929) < 1e-9
        and abs(pr_closed - 0.0855064565) < 1e-9
        and elapsed < 30
    )
    report(
        6,
        ok,
        f"symmetric line max |C| {symmetric:.1e}; squeezed vacuum {sv_closed:.7f} vs Fock {sv_fock:.7f} "
        f"(listed 1.619734 is off by {sv_fock - 1.619734:.1e}); probe {pr_closed:.7f} vs Fock {pr_fock:.7f} "
        f"(listed 0.085469 is off by {pr_fock - 0.085469:.1e}); {elapsed:.1f} s",
    )


def test_criterion_7_plateau(report):
    fam = channel_family("amplifier", "rg", ProbeSpec.make(NBAR, 1.2, 0.8), mbar=0.5)
    dc = coherence_derivative(fam, 8.0)
    qfi = qfi_generic(fam, 8.0).total
    ok = abs(dc) < 1e-3 and abs(qfi - 4) < 1e-3
    report(7, ok, f"|dC/drg(8)| = {abs(dc):.2e} (<1e-3), |I(8) - 4| = {abs(qfi - 4):.2e} (<1e-3)")


def test_criterion_8_oracle(report):
    t0 = time.perf_counter()
    rep = oracle_probe_cov(NBAR, 1.2, 0.8, n=2048)
    traces = max(abs(t - 1) for t in rep.traces)
    k = kernel_from_state(make_thermal(NBAR))
    q_shift = abs(kernel_moments(apply_q_measurement(k, 0.4)).q2 - kernel_moments(k).q2)
    q_shift = max(q_shift, abs(rep.moment_shifts[0]), abs(rep.moment_shifts[1]))
    wide = oracle_probe_cov(NBAR, 1e6, 1e6, n=2048)
    thermal = float(np.max(np.abs(wide.sigma_oracle - wide.thermal_cov)))
    coarse = oracle_probe_cov(NBAR, 1.2, 0.8, n=1024)
    refine = float(np.max(np.abs(coarse.sigma_oracle - rep.sigma_oracle)))
    report_rows = rep.rows()
    elapsed = time.perf_counter() - t0
    ok = (
        traces < 1e-8
        and q_shift < 1e-8
        and thermal < 1e-6
        and refine < 1e-7
        and len(report_rows) == 3
        and rep.notes()
        and wide.notes()
        and elapsed < 60
    )
    report(
        8,
        ok,
        f"trace dev {traces:.1e}, moment shift {q_shift:.1e} (<1e-8), sigma->inf vs thermal {thermal:.1e} (<1e-6), "
        f"N refinement {refine:.1e} (<1e-7); report oracle diag {np.diag(rep.sigma_oracle).round(6).tolist()} "
        f"vs closed form {np.diag(rep.sigma_closed).round(6).tolist()}; {elapsed:.1f} s",
    )


def test_criterion_9_determinism(report, tmp_path, capsys):
    dirs = [tmp_path / "run1", tmp_path / "run2"]
    codes = [main(["figure", "--id", "fig2", "--out", str(d)]) for d in dirs]
    capsys.readouterr()
    names = sorted(p.name for p in dirs[0].iterdir())
    same = names == sorted(p.name for p in dirs[1].iterdir()) and all(
        (dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes() for n in names
    )
    ok = codes == [0, 0] and len(names) == 4 and same
    report(9, ok, f"{len(names)} CSVs ({', '.join(names)}) byte-identical across two runs: {same}")
