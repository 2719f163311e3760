"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the report lines
inline; they are also printed when output is captured.
"""
import math
import time

import numpy as np
import pytest

from diracgap import minmax
from diracgap.birman_schwinger import SpinorGrid, TruncatedPotentialField, birman_schwinger_check, norm_estimate
from diracgap.bspline import build_radial_basis
from diracgap.cli import main
from diracgap.config import DEFAULTS
from diracgap.measure import ChargeMeasure
from diracgap.minmax import find_level, spectrum_in_gap, truncation_convergence_sweep
from diracgap.molecule import MoleculeSpec, pes_sweep
from diracgap.radial import assemble_radial_pencil
from diracgap.shooting import point_charge_reference_levels, shoot_levels
from diracgap.verify import CHECKS, run_suite

AUDITS_AT_START = dict(minmax.AUDIT_STATS)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail
    return emit


def ground_level(mu, kappa=-1, **basis_kw):
    pot = mu.radial_potential()
    basis = build_radial_basis(extra_breakpoints=pot.feature_radii, **basis_kw)
    return find_level(assemble_radial_pencil(mu, kappa, basis), 1, 1e-12).value


def test_c01_ground_state_exactness(report):
    t0 = time.perf_counter()
    lam = spectrum_in_gap(ChargeMeasure.point(0.5), (-1,), 1).levels[0].value
    elapsed = time.perf_counter() - t0
    err = abs(lam - math.sqrt(0.75))
    report(1, err <= 1e-6 and elapsed <= 30.0, f"point 0.5 lambda1={lam:.10f} err={err:.2e} time={elapsed:.1f}s")


def test_c02_strong_coupling(report):
    exact = math.sqrt(1 - 0.81)
    curve = []
    for n in (25, 50, 100, 200, 400):
        lam = ground_level(ChargeMeasure.point(0.9), r_max=40.0, n_intervals=n, order=6, grading=3.0)
        curve.append((n, abs(lam - exact)))
    at_default = dict(curve)[200]
    decreasing = all(b < a for (_, a), (_, b) in zip(curve, curve[1:]))
    text = " ".join(f"n={n}:{e:.2e}" for n, e in curve)
    report(2, at_default <= 1e-4 and decreasing, f"point 0.9 h-refinement {text}")


def test_c03_oracle_agreement(report):
    worst_mm, worst_cf = 0.0, 0.0
    for nu in (0.3, 0.5):
        res = spectrum_in_gap(ChargeMeasure.point(nu), (-1, 1, -2), 5, r_max=400.0, n_intervals=400)
        for kappa in (-1, 1, -2):
            mm = np.array([lv.value for lv in res.per_channel[kappa]])
            shot = np.array(shoot_levels(ChargeMeasure.point(nu), kappa, 5))
            closed = np.array(point_charge_reference_levels(nu, kappa, 6)[:5])
            worst_mm = max(worst_mm, float(np.max(np.abs(mm - shot))) if mm.size == 5 else np.inf)
            worst_cf = max(worst_cf, float(np.max(np.abs(shot - closed))) if shot.size == 5 else np.inf)
    report(3, worst_mm <= 1e-6 and worst_cf <= 1e-9,
           f"min-max vs shooting {worst_mm:.2e}, shooting vs closed form {worst_cf:.2e}")


def test_c04_shell_to_point(report):
    errs = [abs(ground_level(ChargeMeasure.shell(0.5, R)) - math.sqrt(0.75)) for R in (1, 0.1, 0.01, 0.001)]
    ok = all(b < a for a, b in zip(errs, errs[1:])) and errs[-1] <= 1e-3
    report(4, ok, "shell 0.5 errors " + " ".join(f"{e:.2e}" for e in errs))


def test_c05_truncation(report):
    out, exact = truncation_convergence_sweep(ChargeMeasure.point(0.5), [10, 100, 1000, 10000])
    gaps = [abs(v - exact) for _, v in out]
    ok = gaps[-1] <= 1e-4 and gaps[-1] <= gaps[0]
    report(5, ok, "capped gaps " + " ".join(f"n={n:g}:{g:.2e}" for (n, _), g in zip(out, gaps)))


SIGN_MEASURES = [
    ChargeMeasure.point(0.9),
    ChargeMeasure.shell(0.9, 1.0),
    ChargeMeasure.shell(0.9, 0.01),
    ChargeMeasure.ball(0.9, 1.0),
    ChargeMeasure.ball(0.9, 0.1),
    ChargeMeasure.point(0.45) + ChargeMeasure.shell(0.45, 1.0),
    ChargeMeasure.point(0.3) + ChargeMeasure.ball(0.6, 2.0),
    ChargeMeasure.shell(0.3, 0.5) + ChargeMeasure.shell(0.6, 3.0),
    ChargeMeasure.ball(0.45, 0.2) + ChargeMeasure.shell(0.45, 5.0),
    ChargeMeasure.point(0.6) + ChargeMeasure.shell(0.2, 0.1) + ChargeMeasure.ball(0.1, 10.0),
]


def test_c06_sign_condition(report):
    lowest = np.inf
    for mu in SIGN_MEASURES:
        assert mu.total_charge == pytest.approx(0.9)
        res = spectrum_in_gap(mu, (-1, 1, -2, 2), 3)
        lowest = min(lowest, min(lv.value for lv in res.levels))
    report(6, lowest >= -1e-8, f"lowest gap level over 10 measures of mass 0.9: {lowest:.6f}")


def test_c07_two_center_limits(report):
    spec = MoleculeSpec([[0.0, 0.0, -0.5], [0.0, 0.0, 0.5]], [0.45, 0.45])
    seps = np.geomspace(0.05, 50.0, 20)
    t0 = time.perf_counter()
    recs = pes_sweep(spec, seps)
    elapsed = time.perf_counter() - t0
    by_d = {r.d: r for r in recs}
    far, near = by_d[seps[-1]].lambda1, by_d[seps[0]].lambda1
    ok = (abs(far - 0.893028) <= 2e-2 and abs(near - 0.435890) <= 2e-2 and elapsed <= 900.0
          and all(r.status == "ok" for r in recs))
    report(7, ok, f"lambda1(d=50)={far:.6f} lambda1(d=0.05)={near:.6f} sweep {elapsed:.0f}s")


def test_c09_inequality_suite(report):
    opts = dict(DEFAULTS["verify"])
    t0 = time.perf_counter()
    rows = run_suite(opts, seed=0)
    elapsed = time.perf_counter() - t0
    trials = {c: len({r.trial for r in rows if r.inequality == c}) for c in CHECKS}
    bad = [r for r in rows if not r.passed]
    ok = not bad and min(trials.values()) >= 100 and elapsed <= 600.0
    report(9, ok, f"{len(rows)} rows, {len(bad)} violations, trials per check {min(trials.values())}, "
                  f"{elapsed:.0f}s")


def test_c10_birman_schwinger(report):
    shell = ChargeMeasure.shell(0.8, 1.0)
    lam1 = spectrum_in_gap(shell, (-1,), 1).levels[0].value
    rep = birman_schwinger_check(shell, lam1, L=30.0, N=64)
    grid = SpinorGrid(30.0, 64)
    bound = 1.1037 * 0.9 * 1.05
    norms = []
    for mu in (ChargeMeasure.shell(0.9, 1.0), ChargeMeasure.ball(0.9, 1.0),
               ChargeMeasure.ball(0.45, 0.5) + ChargeMeasure.shell(0.45, 2.0)):
        norms.append(norm_estimate(grid, 0.0, TruncatedPotentialField.from_measure(grid, mu)).estimate)
    ok = rep.defect <= 5e-2 and max(norms) <= bound
    report(10, ok, f"eig={rep.eigenvalue:.6f} at lambda1={lam1:.10f}; norms "
                   + " ".join(f"{n:.4f}" for n in norms) + f" <= {bound:.4f}")


def test_c11_determinism(report, tmp_path):
    text = ("seed = 5\n[[measure.components]]\nkind = 'shell'\nweight = 0.6\nradius = 0.5\n"
            "[radial]\nkappas = [-1, 1]\nlevels = 2\n[verify]\ntrials = 3\n")
    cfg = tmp_path / "run.toml"
    cfg.write_text(text)
    same = []
    for command, name in (("spectrum", "levels.csv"), ("verify", "verify.csv")):
        blobs = []
        for run in ("a", "b"):
            assert main([command, "--config", str(cfg), "--out", str(tmp_path / run)]) == 0
            blobs.append((tmp_path / run / name).read_bytes())
        same.append(blobs[0] == blobs[1])
    report(11, all(same), f"spectrum identical={same[0]} verify identical={same[1]}")


def test_c08_monotonicity_audits(report):
    # runs last in this module so the counters cover every criterion above
    audits = minmax.AUDIT_STATS["audits"] - AUDITS_AT_START["audits"]
    bad = minmax.AUDIT_STATS["violations"] - AUDITS_AT_START["violations"]
    report(8, audits > 0 and bad == 0, f"{audits} audited level scans, {bad} non-monotone")
