import numpy as np
import pytest

from diracgap.errors import PartitionNotUnity, SeriesTruncationError, ValidationError
from diracgap.gaussians import GaussianFunction, Primitive
from diracgap.inequalities import (KATO_CONSTANT, TrialFunction, abs_p, hardy_dirac_margin, hardy_dirac_margins,
                                   ims_residual, kato_margin, lemma9_check, lemma9_constant, lemma9_integral,
                                   vmu_norm_and_embedding)
from diracgap.measure import ChargeMeasure
from diracgap.partitions import BallPartition, BeckeSqrtPartition, ScaledPartition, TrivialPartition


def gaussian_trial(alpha=1.0, center=(0.0, 0.0, 0.0), spin=(1.0, 0.0)):
    f = GaussianFunction((Primitive(1.0, alpha, tuple(center), (0, 0, 0)),))
    return TrialFunction((f,), np.array([spin], dtype=complex))


# -- Kato ------------------------------------------------------------------------

def test_centered_gaussian_saturates_unit_constant():
    # for exp(-a r^2) both <|p|> and <1/r> equal 2 sqrt(2a/pi) ||phi||^2
    phi = gaussian_trial(1.0)
    want = 2 * np.sqrt(2 / np.pi) * phi.norm2()
    assert phi.coulomb() == pytest.approx(want, rel=1e-12)
    assert abs_p(phi) == pytest.approx(want, rel=1e-9)
    assert kato_margin(phi) == pytest.approx((KATO_CONSTANT - 1) * want, rel=1e-9)


def test_far_gaussian_sees_inverse_distance():
    phi = gaussian_trial(1.0, center=(0.0, 0.0, 100.0))
    assert phi.coulomb() / phi.norm2() == pytest.approx(0.01, rel=1e-9)
    assert kato_margin(phi) > 0


def test_kato_margin_is_quadratic():
    phi = TrialFunction.random(11)
    assert kato_margin(phi.scaled(2.0 - 1.0j)) == pytest.approx(5.0 * kato_margin(phi), rel=1e-9)


@pytest.mark.parametrize("t", [0.3, 2.5])
def test_kato_margin_scales_under_dilation(t):
    # both terms are homogeneous of degree one in the dilation parameter
    phi = TrialFunction.random(12)
    assert kato_margin(phi.dilated(t)) == pytest.approx(t * kato_margin(phi), rel=1e-8)
    assert phi.dilated(t).norm2() == pytest.approx(phi.norm2(), rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_kato_holds_for_random_trials(seed):
    phi = TrialFunction.random(seed)
    assert kato_margin(phi) >= -1e-10 * phi.norm2()


# -- Hardy-Dirac -----------------------------------------------------------------

@pytest.mark.parametrize("seed", range(3))
def test_hardy_dirac_margins_nonnegative(seed):
    phi = TrialFunction.random(100 + seed)
    m = hardy_dirac_margins(phi, [0.0, 0.5, 1.0, 5.0])
    assert np.all(m >= -1e-8 * phi.h1_norm2())
    assert hardy_dirac_margin(phi, 0.5) == pytest.approx(m[1], rel=1e-12)


def test_hardy_dirac_zero_trial():
    assert np.allclose(hardy_dirac_margins(TrialFunction.zero(), [0.0, 1.0]), 0.0)


def test_hardy_dirac_rejects_negative_a():
    with pytest.raises(ValueError):
        hardy_dirac_margins(gaussian_trial(), [-1.0])


# -- weighted norm embedding -----------------------------------------------------

def test_embedding_without_measure_is_h1():
    phi = TrialFunction.random(21)
    norm2, margin = vmu_norm_and_embedding(phi, None)
    assert norm2 == pytest.approx(phi.h1_norm2(), rel=1e-12)
    assert margin > 0


@pytest.mark.parametrize("mu", [ChargeMeasure.point(0.9), ChargeMeasure.shell(0.5, 1.0),
                                ChargeMeasure.ball(0.7, 0.3)])
def test_embedding_bounds(mu):
    phi = TrialFunction.random(22)
    norm2, margin = vmu_norm_and_embedding(phi, mu)
    assert margin >= 0
    assert norm2 <= phi.h1_norm2() * (1 + 1e-10)


def test_embedding_needs_radial_measure():
    mu = ChargeMeasure.point(0.3, (0, 0, 1)) + ChargeMeasure.point(0.3, (0, 0, -1))
    with pytest.raises(ValidationError):
        vmu_norm_and_embedding(gaussian_trial(), mu)


# -- (1 + V)^alpha gradient bound ------------------------------------------------

def test_shell_integral_closed_form():
    # V is flat inside a shell, so only the exterior q/r contributes
    q, R, a = 0.8, 1.0, 0.25
    want = 4 * np.pi * a * a * q * ((1 + q / R) ** (2 * a - 1) - 1) / (2 * a - 1)
    assert want == pytest.approx(0.31999, abs=1e-5)
    assert lemma9_integral(ChargeMeasure.shell(q, R), a) == pytest.approx(want, rel=1e-12)


def test_constant_matches_direct_sum():
    a = 0.25
    i = np.arange(1, 200)
    direct = 4 * np.pi * a * a * (1 + np.sum(2.0**i / (1 + 2.0 ** (i - 1)) ** (2 - 2 * a)))
    assert lemma9_constant(a) == pytest.approx(direct, rel=1e-9)


def test_constant_diverges_at_half():
    with pytest.raises(SeriesTruncationError):
        lemma9_constant(0.5)


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0])
@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.49])
def test_bound_holds_for_scaled_masses(t, alpha):
    mu = ChargeMeasure.ball(0.9 * t, 0.7) + ChargeMeasure.shell(0.1 * t, 2.0)
    integral, bound = lemma9_check(mu, alpha)
    assert 0 < integral <= bound


def test_gradient_bound_rejects_atoms():
    with pytest.raises(ValidationError):
        lemma9_integral(ChargeMeasure.point(0.5), 0.25)


# -- IMS -------------------------------------------------------------------------

def _points(n=300, seed=0):
    return np.random.default_rng(seed).normal(scale=1.5, size=(n, 3))


def test_ims_trivial_partition():
    assert ims_residual(TrialFunction.random(31), TrivialPartition(), _points()) < 1e-14


@pytest.mark.parametrize("cls", [BallPartition, BeckeSqrtPartition])
def test_ims_identity(cls):
    centers = np.array([[0.0, 0.0, -0.8], [0.0, 0.9, 0.5], [0.7, -0.4, 0.0]])
    assert ims_residual(TrialFunction.random(32), cls(centers), _points(seed=1)) < 1e-10


def test_ims_rejects_non_partition():
    part = ScaledPartition(TrivialPartition(), 1.1)
    with pytest.raises(PartitionNotUnity):
        ims_residual(TrialFunction.random(33), part, _points())
