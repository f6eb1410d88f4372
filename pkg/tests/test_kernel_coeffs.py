"""Tests for the transition-kernel coefficients.

The library already cross-checks its closed forms against a float
Gauss-Legendre oracle; these tests add an extended-precision oracle
(adaptive quadrature of the defining integrals in 40-digit arithmetic)
so the *relative* accuracy of the stable evaluation is pinned even in
the stiff regime where every coefficient is dominated by cancellation.
"""

import math

import mpmath as mp
import numpy as np
import pytest

from langevin3.errors import ArgumentError, NumericalError
from langevin3.kernel_coeffs import (SERIES_SWITCH, DynamicsParams,
                                     MeanCoeffs, NoiseCoeffs, factor_noise,
                                     mean_coeffs, noise_coeffs,
                                     noise_coeffs_naive, quadrature_oracle)

MEAN_FIELDS = ("mu12", "mu13", "mu22", "mu23", "mu31", "mu32", "mu33")
NOISE_FIELDS = ("s11", "s12", "s13", "s22", "s23", "s33")


def mp_reference(params):
    """All thirteen coefficients via adaptive quadrature at 40 digits.

    Same defining integrals as the library's float oracle (stage
    integrals for the means, Ito isometry for the covariances), but
    evaluated with mpmath's adaptive rule in extended precision, so the
    values are trustworthy in a *relative* sense even when tiny.
    """
    with mp.workdps(40):
        g, xi, eta = mp.mpf(params.gamma), mp.mpf(params.xi), mp.mpf(params.eta)
        quad = lambda f: mp.quad(f, [0, eta])
        em = lambda t: 1 - mp.e ** (-xi * t)          # 1 - e^{-xi t}
        ex = lambda t: mp.e ** (-xi * t)

        mean = {
            "mu12": eta - (g ** 2 / xi) * quad(lambda t: (eta - t) * em(t)),
            "mu13": g * quad(lambda t: (eta - t) * ex(t)),
            "mu22": 1 - (g ** 2 / xi) * quad(em),
            "mu23": g * quad(ex),
            "mu31": (g / eta) * quad(lambda t: t * ex(eta - t)),
            "mu32": (-g * quad(lambda t: ex(eta - t))
                     + (g ** 3 / xi ** 2) * quad(lambda t: em(t) * em(eta - t))),
            "mu33": ex(eta) - (g ** 2 / xi) * quad(lambda t: ex(eta - t) * em(t)),
        }

        a = lambda t: t - em(t) / xi
        c = lambda t: ex(t) + (g ** 2 / xi) * (t * ex(t) - em(t) / xi)
        noise = {
            "s11": 2 * xi * (g / xi) ** 2 * quad(lambda t: a(t) ** 2),
            "s12": 2 * xi * (g / xi) ** 2 * quad(lambda t: a(t) * em(t)),
            "s22": 2 * xi * (g / xi) ** 2 * quad(lambda t: em(t) ** 2),
            "s13": 2 * xi * (g / xi) * quad(lambda t: a(t) * c(t)),
            "s23": 2 * xi * (g / xi) * quad(lambda t: em(t) * c(t)),
            "s33": 2 * xi * quad(lambda t: c(t) ** 2),
        }
        return ({k: float(v) for k, v in mean.items()},
                {k: float(v) for k, v in noise.items()})


# parameter sets spanning both evaluation branches (z = xi*eta), paired
# with the relative accuracy each branch can honestly deliver: the series
# branch and the large-z direct branch are good to ~1e-12, while the
# direct branch evaluated right above the switch still loses a few digits
# to cancellation (that residual error is what sets the switch point).
BRANCH_GRID = [
    (DynamicsParams(gamma=1.0, xi=2.0, eta=5e-7), 1e-12),   # z = 1e-6, series
    (DynamicsParams(gamma=1.0, xi=2.0, eta=5e-4), 1e-12),   # z = 1e-3, series
    (DynamicsParams(gamma=3.0, xi=1.0, eta=0.049), 1e-12),  # below the switch
    (DynamicsParams(gamma=3.0, xi=1.0, eta=0.051), 1e-8),   # above the switch
    (DynamicsParams(gamma=2.0, xi=4.0, eta=0.125), 1e-10),  # z = 0.5, direct
    (DynamicsParams(gamma=10.0, xi=20.0, eta=0.1), 1e-12),  # z = 2, direct
    (DynamicsParams(gamma=0.5, xi=8.0, eta=1.0), 1e-12),    # z = 8, deep direct
]


class TestClosedFormsAgainstExtendedPrecision:
    def test_relative_accuracy_on_both_branches(self):
        for params, rtol in BRANCH_GRID:
            mean_ref, noise_ref = mp_reference(params)
            mc, nc = mean_coeffs(params), noise_coeffs(params)
            for f in MEAN_FIELDS:
                np.testing.assert_allclose(
                    getattr(mc, f), mean_ref[f], rtol=rtol, atol=1e-300,
                    err_msg=f"{f} at z={params.z}")
            for f in NOISE_FIELDS:
                np.testing.assert_allclose(
                    getattr(nc, f), noise_ref[f], rtol=rtol, atol=1e-300,
                    err_msg=f"{f} at z={params.z}")

    def test_branches_agree_at_the_switch(self):
        # evaluate the same z from both sides of the series threshold
        xi = 1.0
        below = DynamicsParams(gamma=2.0, xi=xi, eta=SERIES_SWITCH * (1 - 1e-9))
        above = DynamicsParams(gamma=2.0, xi=xi, eta=SERIES_SWITCH * (1 + 1e-9))
        mc_b, nc_b = mean_coeffs(below), noise_coeffs(below)
        mc_a, nc_a = mean_coeffs(above), noise_coeffs(above)
        for f in MEAN_FIELDS:
            np.testing.assert_allclose(getattr(mc_b, f), getattr(mc_a, f),
                                       rtol=1e-7, atol=1e-18, err_msg=f)
        for f in NOISE_FIELDS:
            np.testing.assert_allclose(getattr(nc_b, f), getattr(nc_a, f),
                                       rtol=1e-7, atol=1e-18, err_msg=f)


class TestLeadingOrders:
    def test_s11_leading_term(self):
        # sigma11 = gamma^2 xi eta^5 / 10 + O(eta^6)
        params = DynamicsParams(gamma=3.0, xi=2.0, eta=5e-4)
        s11 = noise_coeffs(params).s11
        lead = params.gamma ** 2 * params.xi * params.eta ** 5 / 10.0
        np.testing.assert_allclose(s11, lead, rtol=1e-2)

    def test_mu12_small_step_expansion(self):
        # mu12 = eta - gamma^2 eta^3 / 6 + O(eta^4)
        params = DynamicsParams(gamma=1.0, xi=2.0, eta=1e-3)
        mu12 = mean_coeffs(params).mu12
        np.testing.assert_allclose(mu12,
                                   params.eta - params.eta ** 3 / 6.0,
                                   rtol=1e-6)

    def test_naive_evaluation_fails_in_stiff_regime(self):
        # the raw transcription loses the z^5 residue to cancellation
        params = DynamicsParams(gamma=1.0, xi=1.0, eta=1e-3)
        stable = noise_coeffs(params).s11
        naive = noise_coeffs_naive(params).s11
        assert abs(naive - stable) / stable > 0.1
        # while the stable value matches the leading term
        lead = params.gamma ** 2 * params.xi * params.eta ** 5 / 10.0
        np.testing.assert_allclose(stable, lead, rtol=1e-2)

    def test_naive_agrees_in_benign_regime(self):
        params = DynamicsParams(gamma=2.0, xi=4.0, eta=0.5)
        stable, naive = noise_coeffs(params), noise_coeffs_naive(params)
        for f in NOISE_FIELDS:
            np.testing.assert_allclose(getattr(naive, f), getattr(stable, f),
                                       rtol=1e-9, err_msg=f)


class TestZeroStep:
    def test_mean_is_identity(self):
        params = DynamicsParams(gamma=3.0, xi=5.0, eta=0.0)
        mc = mean_coeffs(params)
        assert mc.mu12 == 0.0 and mc.mu13 == 0.0
        assert mc.mu22 == 1.0 and mc.mu23 == 0.0
        assert mc.mu31 == 0.0 and mc.mu32 == 0.0 and mc.mu33 == 1.0
        np.testing.assert_array_equal(mc.state_matrix(),
                                      np.array([[1.0, 0, 0],
                                                [0, 1.0, 0],
                                                [0, 0, 1.0]]))

    def test_noise_vanishes(self):
        params = DynamicsParams(gamma=3.0, xi=5.0, eta=0.0)
        nc = noise_coeffs(params)
        assert all(getattr(nc, f) == 0.0 for f in NOISE_FIELDS)


class TestQuadratureOracle:
    def test_self_convergence_in_panels(self):
        params = DynamicsParams(gamma=2.0, xi=4.0, eta=0.3)
        mc64, nc64 = quadrature_oracle(params, panels=64)
        mc256, nc256 = quadrature_oracle(params, panels=256)
        for f in MEAN_FIELDS:
            np.testing.assert_allclose(getattr(mc64, f), getattr(mc256, f),
                                       rtol=1e-13, atol=1e-16)
        for f in NOISE_FIELDS:
            np.testing.assert_allclose(getattr(nc64, f), getattr(nc256, f),
                                       rtol=1e-13, atol=1e-16)

    def test_rejects_too_few_panels(self):
        params = DynamicsParams(gamma=1.0, xi=2.0, eta=0.1)
        with pytest.raises(ArgumentError):
            quadrature_oracle(params, panels=32)

    def test_matches_closed_forms_spot_check(self):
        for params in (DynamicsParams(1.0, 2.0, 0.25),
                       DynamicsParams(10.0, 20.0, 0.02)):
            mc, nc = mean_coeffs(params), noise_coeffs(params)
            omc, onc = quadrature_oracle(params)
            for f in MEAN_FIELDS:
                assert abs(getattr(mc, f) - getattr(omc, f)) < 1e-12
            for f in NOISE_FIELDS:
                assert abs(getattr(nc, f) - getattr(onc, f)) < 1e-12


class TestNoiseMatrixShape:
    def test_matrix_is_symmetric_psd(self):
        for params, _ in BRANCH_GRID:
            nc = noise_coeffs(params)
            S = nc.matrix()
            np.testing.assert_array_equal(S, S.T)
            assert nc.min_eigenvalue() >= -1e-14 * np.trace(S)

    def test_du_weights_row(self):
        params = DynamicsParams(gamma=2.0, xi=4.0, eta=0.2)
        mc = mean_coeffs(params)
        w = mc.du_weights()
        np.testing.assert_allclose(w, [-0.1, -1.0, mc.mu31])


class TestFactorNoise:
    def test_reconstructs_covariance(self):
        # includes the stiff z = 1e-6 case, where the diagonal of the
        # covariance spans ~27 orders of magnitude
        for params, _ in BRANCH_GRID:
            nc = noise_coeffs(params)
            g = factor_noise(nc).g
            np.testing.assert_allclose(g @ g.T, nc.matrix(),
                                       rtol=0, atol=1e-12 * max(
                                           np.abs(nc.matrix()).max(), 1e-300))

    def test_semidefinite_example(self):
        S = np.diag([4.0, 1.0, 0.0])
        g = factor_noise(S).g
        np.testing.assert_array_equal(g, np.diag([2.0, 1.0, 0.0]))

    def test_zero_matrix(self):
        np.testing.assert_array_equal(factor_noise(np.zeros((3, 3))).g,
                                      np.zeros((3, 3)))

    def test_rejects_asymmetric(self):
        S = np.array([[1.0, 0.5, 0.0], [0.4, 1.0, 0.0], [0.0, 0.0, 1.0]])
        with pytest.raises(ArgumentError):
            factor_noise(S)

    def test_rejects_indefinite(self):
        S = np.diag([1.0, 1.0, -0.5])
        with pytest.raises(NumericalError):
            factor_noise(S)

    def test_lower_triangular(self):
        params = DynamicsParams(gamma=2.0, xi=4.0, eta=0.3)
        g = factor_noise(noise_coeffs(params)).g
        assert g[0, 1] == 0.0 and g[0, 2] == 0.0 and g[1, 2] == 0.0


class TestDynamicsParams:
    def test_z_property(self):
        assert DynamicsParams(gamma=1.0, xi=4.0, eta=0.25).z == 1.0

    def test_condition_number_binding(self):
        p = DynamicsParams.for_condition_number(kappa=3.0, eta=0.1, L=2.0)
        assert p.gamma == 3.0 and p.xi == 6.0 and p.L == 2.0

    def test_rejects_bad_values(self):
        with pytest.raises(ArgumentError):
            DynamicsParams(gamma=0.0, xi=1.0, eta=0.1)
        with pytest.raises(ArgumentError):
            DynamicsParams(gamma=1.0, xi=-1.0, eta=0.1)
        with pytest.raises(ArgumentError):
            DynamicsParams(gamma=1.0, xi=1.0, eta=-0.1)
        with pytest.raises(ArgumentError):
            DynamicsParams(gamma=1.0, xi=1.0, eta=0.1, L=0.0)
        with pytest.raises(ArgumentError):
            DynamicsParams.for_condition_number(kappa=0.5, eta=0.1)

    def test_caching_returns_identical_objects(self):
        p = DynamicsParams(gamma=1.0, xi=2.0, eta=0.1)
        assert mean_coeffs(p) is mean_coeffs(
            DynamicsParams(gamma=1.0, xi=2.0, eta=0.1))
