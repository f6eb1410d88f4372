"""Tests for the continuous-time and per-mode reference kernels.

The strongest check here is deterministic: the exact continuous kernel
``(Phi, Q)`` must leave the target covariance invariant, and the fine
Euler integrator must converge to ``Phi`` at first order in the substep
(measured by a same-noise difference trick that cancels the Brownian
path exactly, leaving the deterministic propagation).
"""

import numpy as np
import pytest

from langevin3.errors import ArgumentError, NumericalError
from langevin3.kernel_coeffs import (DynamicsParams, factor_noise,
                                     mean_coeffs, noise_coeffs)
from langevin3.model import QuadraticPotential
from langevin3.reference import (LinearModeTransition, coupled_fine_pair,
                                 discrete_mode_map, discrete_stationary_cov,
                                 exact_transition, fine_euler)
from langevin3.sampler import ChainState, step
from langevin3.delta_u import delta_u_provider


class TestExactTransition:
    def test_zero_horizon_is_identity(self):
        params = DynamicsParams(gamma=1.0, xi=2.0, eta=0.0)
        tr = exact_transition(0.7, params, 0.0)
        np.testing.assert_array_equal(tr.Phi, np.eye(3))
        np.testing.assert_array_equal(tr.Q, np.zeros((3, 3)))

    def test_target_covariance_is_invariant(self):
        # Phi Sigma Phi' + Q == Sigma with Sigma = diag(1/lam, 1/L, 1/L):
        # a joint validation of the matrix exponential and the noise
        # quadrature against the dynamics' defining property
        for lam, L, t in ((0.7, 1.0, 0.1), (0.3, 1.0, 1.0), (1.0, 2.5, 10.0)):
            params = DynamicsParams(gamma=1.5, xi=3.0, eta=0.0, L=L)
            tr = exact_transition(lam, params, t)
            sigma = tr.stationary_cov()
            residual = tr.Phi @ sigma @ tr.Phi.T + tr.Q - sigma
            assert np.abs(residual).max() <= 1e-9, (lam, L, t)

    def test_short_time_noise_enters_through_r(self):
        params = DynamicsParams(gamma=1.0, xi=2.0, eta=0.0)
        t = 5e-4                        # xi * t = 1e-3
        tr = exact_transition(1.0, params, t)
        np.testing.assert_allclose(tr.Q[2, 2], 2.0 * params.xi * t,
                                   rtol=1e-2)
        # theta picks up noise only at third order in t
        assert tr.Q[0, 0] < 1e-9 * tr.Q[2, 2]

    def test_phi_matches_taylor_series(self):
        params = DynamicsParams(gamma=1.0, xi=2.0, eta=0.0)
        t = 1e-3
        tr = exact_transition(0.8, params, t)
        A = tr.A3
        series = np.eye(3) + t * A + 0.5 * t ** 2 * (A @ A)
        np.testing.assert_allclose(tr.Phi, series, atol=1e-9)

    def test_drift_block_layout(self):
        params = DynamicsParams(gamma=3.0, xi=5.0, eta=0.0, L=2.0)
        tr = exact_transition(1.2, params, 0.1)
        np.testing.assert_allclose(tr.A3, [[0.0, 1.0, 0.0],
                                           [-0.6, 0.0, 3.0],
                                           [0.0, -3.0, -5.0]])
        assert isinstance(tr, LinearModeTransition)

    def test_validation(self):
        params = DynamicsParams(gamma=1.0, xi=2.0, eta=0.0)
        with pytest.raises(ArgumentError):
            exact_transition(0.0, params, 1.0)
        with pytest.raises(ArgumentError):
            exact_transition(1.0, params, -1.0)


class TestDiscreteModeMap:
    def test_columns_match_zero_noise_sampler_step(self):
        # the per-mode linear map must reproduce the actual sampler
        # arithmetic on basis states, coordinate by coordinate
        pot = QuadraticPotential(center=np.zeros(2),
                                 eigenvalues=np.array([0.6, 1.5]))
        params = DynamicsParams.for_condition_number(2.5, eta=0.2,
                                                     L=pot.bounds.L)
        mc = mean_coeffs(params)
        nf = factor_noise(noise_coeffs(params))
        du = delta_u_provider(pot, params.eta)
        maps = [discrete_mode_map(lam, params)[0] for lam in (0.6, 1.5)]
        for b in range(3):          # basis block: theta, p, r
            blocks = [np.zeros(2), np.zeros(2), np.zeros(2)]
            blocks[b] = np.ones(2)
            state = ChainState(theta=blocks[0], p=blocks[1], r=blocks[2])
            new = step(state, mc, nf, du, rng=None, noise=np.zeros((2, 3)))
            out = np.stack([new.theta, new.p, new.r])      # (3, 2)
            for j, A in enumerate(maps):
                np.testing.assert_allclose(out[:, j], A[:, b], rtol=1e-13,
                                           atol=1e-16,
                                           err_msg=f"mode {j}, basis {b}")

    def test_noise_block_matches_factored_covariance(self):
        params = DynamicsParams.for_condition_number(3.0, eta=0.1, L=2.0)
        _, Qstep = discrete_mode_map(0.9, params)
        g = factor_noise(noise_coeffs(params)).g
        np.testing.assert_allclose(g @ g.T / params.L, Qstep,
                                   rtol=0.0, atol=1e-15)

    def test_small_step_limit_is_continuous_drift(self):
        lam, L = 0.8, 1.0
        params = DynamicsParams(gamma=1.0, xi=2.0, eta=1e-4, L=L)
        A, _ = discrete_mode_map(lam, params)
        A3 = exact_transition(lam, params, 0.1).A3
        np.testing.assert_allclose(A, np.eye(3) + params.eta * A3,
                                   atol=5e-8)

    def test_rejects_nonpositive_eigenvalue(self):
        params = DynamicsParams(gamma=1.0, xi=2.0, eta=0.1)
        with pytest.raises(ArgumentError):
            discrete_mode_map(-1.0, params)


class TestDiscreteStationaryCov:
    def test_fixed_point_property(self):
        params = DynamicsParams.for_condition_number(2.0, eta=0.1)
        A, Q = discrete_mode_map(0.7, params)
        C = discrete_stationary_cov(0.7, params)
        np.testing.assert_allclose(A @ C @ A.T + Q, C, rtol=0.0,
                                   atol=1e-13)

    def test_approaches_target_as_step_vanishes(self):
        lam = 1.0
        params = DynamicsParams(gamma=1.0, xi=2.0, eta=0.01, L=1.0)
        C = discrete_stationary_cov(lam, params)
        np.testing.assert_allclose(np.diag(C), [1.0, 1.0, 1.0], rtol=5e-3)
        # off-diagonal couplings vanish with the step
        assert np.abs(C - np.diag(np.diag(C))).max() < 0.02

    def test_bias_shrinks_quadratically_in_eta(self):
        lam = 1.0
        target = np.diag([1.0, 1.0, 1.0])
        devs = []
        for eta in (0.2, 0.1, 0.05):
            params = DynamicsParams(gamma=5.0, xi=10.0, eta=eta, L=1.0)
            C = discrete_stationary_cov(lam, params)
            devs.append(np.abs(C - target).max())
        rate1 = devs[0] / devs[1]
        rate2 = devs[1] / devs[2]
        assert 3.0 < rate1 < 5.5 and 3.0 < rate2 < 5.5

    def test_unstable_step_raises(self):
        params = DynamicsParams.for_condition_number(1.0, eta=6.0)
        with pytest.raises(NumericalError):
            discrete_stationary_cov(1.0, params)


class TestFineEuler:
    def setup_method(self):
        self.pot = QuadraticPotential(center=np.zeros(1),
                                      eigenvalues=np.array([0.7]))
        self.params = DynamicsParams(gamma=1.2, xi=2.4, eta=0.0,
                                     L=self.pot.bounds.L)

    def _deterministic_propagation(self, x0, t, substeps, seed):
        """Same-noise difference: Euler from x0 minus Euler from 0.

        The Brownian path cancels, leaving the deterministic linear
        propagation (I + h A)^n x0 up to round-off.
        """
        s_x = ChainState(theta=x0[:1], p=x0[1:2], r=x0[2:])
        s_0 = ChainState(theta=np.zeros(1), p=np.zeros(1), r=np.zeros(1))
        rng_a = np.random.Generator(np.random.Philox(key=[seed, 0]))
        rng_b = np.random.Generator(np.random.Philox(key=[seed, 0]))
        out_x = fine_euler(self.pot, self.params, s_x, t, substeps, rng_a)
        out_0 = fine_euler(self.pot, self.params, s_0, t, substeps, rng_b)
        return np.concatenate([out_x.theta - out_0.theta,
                               out_x.p - out_0.p,
                               out_x.r - out_0.r])

    def test_zero_horizon_returns_input(self):
        s = ChainState(theta=np.ones(1), p=np.zeros(1), r=np.zeros(1))
        out = fine_euler(self.pot, self.params, s, 0.0, 100,
                         np.random.default_rng(0))
        np.testing.assert_array_equal(out.theta, s.theta)

    def test_first_order_convergence_to_exact_kernel(self):
        t = 1.0
        x0 = np.array([0.9, -0.4, 0.3])
        target = exact_transition(0.7, self.params, t).Phi @ x0
        err = {}
        for n in (200, 400, 800):
            diff = self._deterministic_propagation(x0, t, n, seed=17)
            err[n] = np.linalg.norm(diff - target)
        assert 1.6 < err[200] / err[400] < 2.4
        assert 1.6 < err[400] / err[800] < 2.4
        # Richardson extrapolation cancels the first-order term
        d400 = self._deterministic_propagation(x0, t, 400, seed=17)
        d800 = self._deterministic_propagation(x0, t, 800, seed=17)
        extrapolated = 2.0 * d800 - d400
        assert np.linalg.norm(extrapolated - target) < err[800] / 5.0

    def test_one_step_replica_moments_match_exact_kernel(self):
        t, n, reps = 0.5, 300, 40000
        x0 = np.array([0.5, -0.2, 0.1])
        tr = exact_transition(0.7, self.params, t)
        state = ChainState(theta=np.full((reps, 1), x0[0]),
                           p=np.full((reps, 1), x0[1]),
                           r=np.full((reps, 1), x0[2]))
        rng = np.random.Generator(np.random.Philox(key=[99, 0]))
        out = fine_euler(self.pot, self.params, state, t, n, rng)
        samples = np.concatenate([out.theta, out.p, out.r], axis=1)
        np.testing.assert_allclose(samples.mean(axis=0), tr.Phi @ x0,
                                   atol=0.02)
        np.testing.assert_allclose(np.cov(samples.T), tr.Q, rtol=0.1,
                                   atol=0.02)

    def test_substep_floor(self):
        s = ChainState(theta=np.zeros(1), p=np.zeros(1), r=np.zeros(1))
        with pytest.raises(ArgumentError):
            fine_euler(self.pot, self.params, s, 1.0, 10,
                       np.random.default_rng(0))
        with pytest.raises(ArgumentError):
            fine_euler(self.pot, self.params, s, -1.0, 100,
                       np.random.default_rng(0))


class TestCoupledFinePair:
    def setup_method(self):
        self.pot = QuadraticPotential(center=np.zeros(2),
                                      eigenvalues=np.array([0.5, 1.0]))
        self.params = DynamicsParams.for_condition_number(
            2.0, eta=0.0, L=self.pot.bounds.L)

    def test_identical_starts_stay_identical(self):
        rng = np.random.default_rng(91)
        x0 = ChainState(theta=rng.standard_normal((4, 2)),
                        p=rng.standard_normal((4, 2)),
                        r=rng.standard_normal((4, 2)))
        x, y = coupled_fine_pair(self.pot, self.params, x0, x0, 0.5, 100,
                                 np.random.default_rng(92))
        np.testing.assert_array_equal(x.theta, y.theta)
        np.testing.assert_array_equal(x.p, y.p)
        np.testing.assert_array_equal(x.r, y.r)

    def test_difference_is_noise_independent(self):
        rng = np.random.default_rng(93)
        x0 = ChainState(theta=rng.standard_normal(2),
                        p=rng.standard_normal(2), r=rng.standard_normal(2))
        y0 = ChainState(theta=rng.standard_normal(2),
                        p=rng.standard_normal(2), r=rng.standard_normal(2))
        diffs = []
        for seed in (1, 2):
            x, y = coupled_fine_pair(self.pot, self.params, x0, y0, 0.5,
                                     100, np.random.default_rng(seed))
            diffs.append(np.concatenate([x.theta - y.theta, x.p - y.p,
                                         x.r - y.r]))
        np.testing.assert_allclose(diffs[0], diffs[1], rtol=1e-9,
                                   atol=1e-12)

    def test_difference_contracts(self):
        rng = np.random.default_rng(94)
        x0 = ChainState(theta=rng.standard_normal(2),
                        p=rng.standard_normal(2), r=rng.standard_normal(2))
        y0 = ChainState(theta=x0.theta + 1.0, p=x0.p, r=x0.r)
        x, y = coupled_fine_pair(self.pot, self.params, x0, y0, 20.0, 1500,
                                 np.random.default_rng(95))
        d_end = np.linalg.norm(np.concatenate(
            [x.theta - y.theta, x.p - y.p, x.r - y.r]))
        assert d_end < np.sqrt(2.0)     # initial distance was sqrt(2)

    def test_substep_floor(self):
        s = ChainState(theta=np.zeros(2), p=np.zeros(2), r=np.zeros(2))
        with pytest.raises(ArgumentError):
            coupled_fine_pair(self.pot, self.params, s, s, 1.0, 10,
                              np.random.default_rng(0))
