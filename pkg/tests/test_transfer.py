"""Tests for the transfer matrices, contraction search and decay profile."""

import math
from fractions import Fraction

import numpy as np
import pytest

from digit_spectra.digitcore import BMultFunction
from digit_spectra.transfer import (
    ContractionCertificate,
    FourierConfig,
    NoCertificateError,
    decay_profile,
    find_contraction,
    fourier_direct,
    fourier_recursive,
    fourier_vector,
    halton,
    lipschitz_constant,
    product_norm_certified,
    product_norms,
    transfer_matrix,
    verify_certificate,
)


def _certificate(L, delta):
    return ContractionCertificate(
        L=L, delta=delta, grid=0, h=0.0, lipschitz_K=0.0, grid_sup=1 - delta,
        certified_sup=1 - delta, delta_min=1e-4, refinements=0, points=0,
    )


def test_base_values(tm_config):
    # g(4) = -1 and g(12) = 1
    assert fourier_direct(tm_config, 4, 12, 0, Fraction(1, 3)) == -1


def test_first_level_vanishes_at_zero(tm_config):
    assert abs(fourier_direct(tm_config, 0, 0, 1, 0)) < 1e-15


def test_equal_multipliers(tm):
    config = FourierConfig.build(tm, 1, 1)
    assert abs(fourier_direct(config, 0, 0, 5, 0) - 1) < 1e-12
    assert transfer_matrix(config, 0).entries.tolist() == [[1]]


def test_transfer_matrix_origin_row(tm_config):
    entries = transfer_matrix(tm_config, 0).entries
    index = tm_config.component.index
    row = entries[index[(0, 0)]]
    assert row[index[(0, 0)]] == pytest.approx(0.5)
    assert row[index[(4, 12)]] == pytest.approx(0.5)
    assert np.count_nonzero(row) == 2


def test_row_sum_norm_at_most_one(tm_config):
    rng = np.random.default_rng(3)
    for t in rng.random(1000):
        assert transfer_matrix(tm_config, float(t)).row_sum_norm() <= 1 + 1e-12


@pytest.mark.parametrize(
    "spec, P, Q, lam_max",
    [
        ("b=2;phases=0,1/2", 9, 25, 8),
        ("b=3;phases=0,1/3,2/3", 4, 7, 5),
        ("b=3;phases=0,1/2,0", 4, 7, 5),
    ],
)
def test_recursion_matches_direct_sum(spec, P, Q, lam_max):
    config = FourierConfig.build(BMultFunction.parse(spec), P, Q)
    members = config.component.members
    for t in halton(16) + [0.123456789]:
        for lam in range(lam_max + 1):
            vector = fourier_vector(config, lam, t)
            for (i, j), value in zip(members, vector):
                assert abs(fourier_direct(config, i, j, lam, t) - value) < 1e-9


def test_one_step_of_the_recursion(tm_config):
    t = Fraction(5, 17)
    for lam in range(1, 8):
        left = fourier_vector(tm_config, lam, t)
        right = transfer_matrix(tm_config, t) @ fourier_vector(tm_config, lam - 1, 2 * t)
        assert np.allclose(left, right, atol=1e-9)


def test_fourier_recursive_needs_member(tm_config):
    assert fourier_recursive(tm_config, 0, 0, 0, 0) == 1
    with pytest.raises(ValueError):
        fourier_recursive(tm_config, 0, 20, 3, 0)


def test_direct_sum_limits(tm_config):
    with pytest.raises(ValueError):
        fourier_direct(tm_config, 0, 0, 25, 0)
    with pytest.raises(ValueError):
        fourier_direct(tm_config, 0, 0, -1, 0)


def test_periodic_control_does_not_decay(alternating):
    # g(4u) conj(g(7u)) = (-1)^u, so F(1/2) = 1 at every level
    config = FourierConfig.build(alternating, 4, 7)
    for lam in range(13):
        assert abs(fourier_direct(config, 0, 0, lam, Fraction(1, 2))) >= 0.99


@pytest.mark.parametrize(
    "name, P, Q", [("tm", 9, 25), ("thirds", 4, 7), ("alternating", 4, 7)]
)
def test_product_norms_bounded(request, name, P, Q):
    config = FourierConfig.build(request.getfixturevalue(name), P, Q)
    for L in (0, 3):
        norms = product_norms(config, L, np.arange(1000), 1000)
        assert norms.shape == (1000,)
        assert norms.max() <= 1 + 1e-12


def test_product_norms_of_constant_at_zero(one):
    config = FourierConfig.build(one, 9, 25)
    for L in range(6):
        assert product_norms(config, L, np.array([0]), 1)[0] == pytest.approx(1.0, abs=1e-12)


def test_product_norms_threads_agree(tm_config):
    a = product_norms(tm_config, 2, np.arange(4096), 4096, threads=1)
    b = product_norms(tm_config, 2, np.arange(4096), 4096, threads=4)
    assert np.array_equal(a, b)


def test_certified_norm_pads_grid(tm_config):
    bound = product_norm_certified(tm_config, 2, 64)
    assert bound.certified_sup == pytest.approx(bound.grid_sup + lipschitz_constant(2, 2) / 64)
    with pytest.raises(ValueError):
        product_norm_certified(tm_config, 2, 4)


def test_periodic_g_has_no_contraction(one):
    with pytest.raises(ValueError, match="periodic"):
        find_contraction(FourierConfig.build(one, 9, 25))


def test_search_failure_reports_trend(tm_config):
    with pytest.raises(NoCertificateError) as info:
        find_contraction(tm_config, L_max=1, delta_min=0.999)
    assert [L for L, _ in info.value.trend] == [1]
    assert 0 < info.value.best_grid_sup <= 1 + 1e-12


def test_certificate_eta():
    cert = _certificate(3, 0.5)
    assert cert.eta == pytest.approx(math.log(2) / 4)
    assert cert.to_dict()["found"] is True


def test_decay_profile_bounds(tm_config):
    profile = decay_profile(tm_config, 8, grid_M=1 << 10, certificate=_certificate(2, 0.0))
    assert [r.lam for r in profile.records] == list(range(9))
    for record in profile.records:
        assert record.sup_grid <= record.sup_certified + 1e-12
        assert record.sup_certified <= 1.0
    certified = [r.sup_certified for r in profile.records]
    assert all(b <= a for a, b in zip(certified, certified[1:]))
    assert profile.running_min() == certified


def test_decay_profile_grid_values(tm_config):
    M = 64
    profile = decay_profile(tm_config, 4, grid_M=M, certificate=_certificate(2, 0.0))
    origin = tm_config.origin
    expected = max(abs(fourier_vector(tm_config, 4, Fraction(m, M))[origin]) for m in range(M))
    assert profile.records[4].sup_grid == pytest.approx(expected, abs=1e-9)


def test_decay_profile_rejects_bad_arguments(tm_config):
    cert = _certificate(2, 0.0)
    with pytest.raises(ValueError):
        decay_profile(tm_config, -1, certificate=cert)
    with pytest.raises(ValueError):
        decay_profile(tm_config, 4, grid_M=1, certificate=cert)


def test_halton():
    assert halton(4) == [Fraction(1, 2), Fraction(1, 4), Fraction(3, 4), Fraction(1, 8)]


@pytest.mark.integration
@pytest.mark.timeout(600)
@pytest.mark.parametrize("spec", ["b=2;phases=0,1/2", "b=2;phases=0,1/3"])
def test_contraction_found(spec):
    config = FourierConfig.build(BMultFunction.parse(spec), 9, 25)
    cert = find_contraction(config, L_max=12, delta_min=1e-4)
    assert cert.delta >= 1e-4
    assert cert.eta > 0
    assert verify_certificate(config, cert)


@pytest.mark.integration
@pytest.mark.timeout(600)
def test_dichotomy_periodic_side(alternating):
    with pytest.raises(ValueError):
        find_contraction(FourierConfig.build(alternating, 4, 7))


@pytest.mark.integration
@pytest.mark.timeout(900)
def test_thue_morse_decays(tm_config):
    profile = decay_profile(tm_config, 20)
    assert profile.passed
    assert profile.eta > 0
    assert profile.records[-1].sup_certified < 1.0


@pytest.mark.integration
@pytest.mark.timeout(300)
@pytest.mark.parametrize(
    "spec, P, Q",
    [("b=2;phases=0,1/2", 9, 25), ("b=3;phases=0,1/3,2/3", 4, 7)],
)
def test_recursion_matches_direct_sum_full_grid(spec, P, Q):
    config = FourierConfig.build(BMultFunction.parse(spec), P, Q)
    for t in halton(64):
        for lam in range(11):
            vector = fourier_vector(config, lam, t)
            for (i, j), value in zip(config.component.members, vector):
                assert abs(fourier_direct(config, i, j, lam, t) - value) < 1e-9
