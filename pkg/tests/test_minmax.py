import numpy as np
import pytest

from diracgap.bspline import build_radial_basis
from diracgap.errors import NoRootInGap
from diracgap.measure import ChargeMeasure, RadialPotential
from diracgap.minmax import (AUDIT_STATS, LevelCurves, find_level, level_function, spectrum_in_gap,
                             truncation_convergence_sweep)
from diracgap.radial import assemble_radial_pencil
from diracgap.shooting import point_charge_reference_levels, shoot_levels

LAM_05 = np.sqrt(0.75)


@pytest.fixture(scope="module")
def basis():
    return build_radial_basis()


@pytest.fixture(scope="module")
def pencil05(basis):
    return assemble_radial_pencil(ChargeMeasure.point(0.5), -1, basis)


def test_free_surrogate_levels_above_one(basis):
    p = assemble_radial_pencil(None, -1, basis, validate=False, potential=RadialPotential.zero())
    for k in (1, 3):
        assert level_function(p, k, 0.0) >= 1 - 1e-10
    with pytest.raises(NoRootInGap):
        find_level(p, 1)


def test_level_function_vanishes_at_exact_root(pencil05):
    assert abs(level_function(pencil05, 1, LAM_05)) < 1e-9
    assert level_function(pencil05, 1, LAM_05 - 0.1) > 0 > level_function(pencil05, 1, LAM_05 + 0.1)


def test_find_level_ground_states(basis, pencil05):
    lev = find_level(pencil05, 1)
    assert lev.value == pytest.approx(LAM_05, abs=1e-10)
    assert lev.residual <= 1e-10 and -1 < lev.value < 1
    assert lev.degeneracy == 2 and lev.channel == -1
    p9 = assemble_radial_pencil(ChargeMeasure.point(0.9), -1, basis)
    assert find_level(p9, 1).value == pytest.approx(np.sqrt(0.19), abs=1e-5)


def test_second_level_matches_shooting():
    ref = shoot_levels(ChargeMeasure.point(0.5), -1, 2)[1]
    assert ref == pytest.approx(0.9659258, abs=1e-7)
    # the excited state reaches the Dirichlet wall of the default 40 box, so widen it
    wide = assemble_radial_pencil(ChargeMeasure.point(0.5), -1, build_radial_basis(200.0, 300))
    assert find_level(wide, 2).value == pytest.approx(ref, abs=1e-7)


def test_degenerate_entries():
    res = spectrum_in_gap(ChargeMeasure.point(0.5), (-1,), 1)
    assert len(res.levels) == 2
    assert res.levels[0].value == res.levels[1].value == pytest.approx(LAM_05, abs=1e-10)
    assert [lv.k for lv in res.levels] == [1, 2]


def test_global_ordering_matches_shooting():
    res = spectrum_in_gap(ChargeMeasure.point(0.5), (-1, 1, -2), 3, r_max=200.0, n_intervals=300)
    ours = [(round(lv.value, 6), lv.channel) for lv in res.levels]
    ref = []
    for kappa in (-1, 1, -2):
        ref += [(round(e, 6), kappa) for e in shoot_levels(ChargeMeasure.point(0.5), kappa, 3)
                for _ in range(2 * abs(kappa))]
    # compare values in order; ties between channels are degenerate in exact arithmetic
    assert [v for v, _ in ours] == sorted(v for v, _ in ref)
    values = [lv.value for lv in res.levels]
    assert values == sorted(values)


def test_sign_condition_for_mass_09():
    for mu in (ChargeMeasure.point(0.9), ChargeMeasure.shell(0.9, 0.3),
               ChargeMeasure.point(0.45) + ChargeMeasure.ball(0.45, 1.0)):
        res = spectrum_in_gap(mu, (-1, 1), 2)
        assert min(lv.value for lv in res.levels) >= 0


def test_monotone_in_the_measure():
    a = spectrum_in_gap(ChargeMeasure.point(0.4), (-1,), 1).levels[0].value
    b = spectrum_in_gap(ChargeMeasure.point(0.6), (-1,), 1).levels[0].value
    c = spectrum_in_gap(ChargeMeasure.point(0.4) + ChargeMeasure.shell(0.2, 1.0), (-1,), 1).levels[0].value
    assert a > c > b


def test_refinement_non_increasing():
    mu = ChargeMeasure.point(0.7)
    vals = [find_level(assemble_radial_pencil(mu, -1, build_radial_basis(40.0, n)), 1).value
            for n in (25, 50, 100, 200)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
    gaps = np.abs(np.diff(vals))
    assert np.all(np.diff(gaps) < 0)
    assert vals[-1] == pytest.approx(point_charge_reference_levels(0.7, -1, 0)[0], abs=1e-6)


def test_truncation_sweep_point():
    rows, exact = truncation_convergence_sweep(ChargeMeasure.point(0.5), [10, 100, 1000, 10000])
    errs = [abs(v - LAM_05) for _, v in rows]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-4
    assert exact == pytest.approx(LAM_05, abs=1e-10)


def test_truncation_sweep_bounded_measure_is_noop():
    mu = ChargeMeasure.shell(0.8, 1.0)
    rows, exact = truncation_convergence_sweep(mu, [1.0, 10.0, 100.0])
    for _, v in rows:
        assert v == pytest.approx(exact, abs=1e-12)


def test_truncation_sweep_rejects_unsorted_caps():
    with pytest.raises(ValueError):
        truncation_convergence_sweep(ChargeMeasure.point(0.5), [100, 10])


def test_audits_recorded(pencil05):
    before = AUDIT_STATS["audits"]
    find_level(pencil05, 1, curves=LevelCurves(pencil05, 1))
    assert AUDIT_STATS["audits"] > before


def test_diagnostics_flag_box_size():
    res = spectrum_in_gap(ChargeMeasure.point(0.3), (-1,), 1, r_max=20.0, n_intervals=100)
    assert res.diagnostics["r_max_needed"] == pytest.approx(10 / np.sqrt(1 - res.levels[0].value ** 2))
    assert res.diagnostics["r_max_ok"] is False


def test_discrete_k0_is_reported():
    res = spectrum_in_gap(ChargeMeasure.point(0.5), (-1, 1), 1)
    assert res.diagnostics["k0_discrete"] == {"-1": 0, "1": 0}
