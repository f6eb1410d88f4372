"""Acceptance suite: end-to-end checks with pinned tolerances.

Each criterion prints a one-line verdict — number, what it checks,
measured value, threshold, and PASS/FAIL — and fails if either the
measurement misses its tolerance or the runtime exceeds its budget.
The suite covers the closed-form kernel coefficients, the stiff-regime
cancellation fix, the Lyapunov/contraction certificates, continuous and
discrete convergence behavior, the Chebyshev gradient provider, the
one-step kernel law, dimension scaling, and CLI determinism.
"""

import json
import math
import time

import numpy as np
from scipy.integrate import quad

from langevin3.analysis import (check_cubic_certificate,
                                check_gfunction_inequalities,
                                contraction_test, drift_max_eigenvalue,
                                s_matrix)
from langevin3.cli import main
from langevin3.delta_u import (LineSegment, build_chebyshev_plan,
                               delta_u_chebyshev, delta_u_provider,
                               interpolation_error_bound)
from langevin3.kernel_coeffs import (DynamicsParams, mean_coeffs,
                                     noise_coeffs, noise_coeffs_naive,
                                     quadrature_oracle)
from langevin3.model import (BlackBoxPotential, ConvexSmoothBounds,
                             LogisticRegressionPotential, Potential,
                             QuadraticPotential)
from langevin3.reference import discrete_mode_map
from langevin3.sampler import ChainState, SamplerConfig, run_chain

MEAN_FIELDS = ("mu12", "mu13", "mu22", "mu23", "mu31", "mu32", "mu33")
NOISE_FIELDS = ("s11", "s12", "s13", "s22", "s23", "s33")


def verdict(num, what, measured, threshold, ok, seconds, budget):
    """Print the one-line criterion verdict, then assert it."""
    ok = bool(ok) and seconds <= budget
    line = (f"[{num:2d}] {what:<55} measured {measured:<30} "
            f"threshold {threshold:<20} {seconds:6.1f}s/{budget:3.0f}s "
            f"{'PASS' if ok else 'FAIL'}")
    print(line)
    assert ok, line


def test_01_kernel_coefficients_match_quadrature_oracle():
    t0 = time.perf_counter()
    worst = 0.0
    for gamma in (1.0, 2.0, 10.0):
        for eta in np.geomspace(1e-4, 0.5, 6):
            params = DynamicsParams(gamma=gamma, xi=2.0 * gamma,
                                    eta=float(eta))
            mc, nc = mean_coeffs(params), noise_coeffs(params)
            omc, onc = quadrature_oracle(params)
            for f in MEAN_FIELDS:
                worst = max(worst, abs(getattr(mc, f) - getattr(omc, f)))
            for f in NOISE_FIELDS:
                worst = max(worst, abs(getattr(nc, f) - getattr(onc, f)))
    verdict(1, "kernel coefficients vs independent quadrature, 18-pt grid",
            f"{worst:.2e}", "<=1e-9", worst <= 1e-9,
            time.perf_counter() - t0, 10)


def test_02_stiff_regime_cancellation_is_handled():
    t0 = time.perf_counter()
    # xi * eta = 1e-3: the driven-block variance s11 has leading term
    # gamma^2 xi eta^5 / 10, which a direct transcription of the
    # exponential closed form loses to cancellation.
    params = DynamicsParams(gamma=1.0, xi=2.0, eta=5e-4)
    lead = params.gamma ** 2 * params.xi * params.eta ** 5
    stable_ratio = noise_coeffs(params).s11 / lead
    naive_dev = abs(noise_coeffs_naive(params).s11 / lead - 0.1) / 0.1
    stable_ok = abs(stable_ratio - 0.1) <= 1e-3
    verdict(2, "stable s11 hits eta^5 leading term where naive form fails",
            f"stable={stable_ratio:.6f} naive_dev={naive_dev:.0%}",
            "|.-0.1|<=1e-3;naive>10%", stable_ok and naive_dev > 0.10,
            time.perf_counter() - t0, 1)


def test_03_spectral_certificates_hold():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2026)
    worst_drift = -np.inf
    interval_ok = True
    for _ in range(1000):
        kappa = float(np.exp(rng.uniform(0.0, math.log(1e4))))
        l = float(rng.uniform(1.0 / kappa, 1.0))
        worst_drift = max(worst_drift, drift_max_eigenvalue(kappa, l))
        w = np.linalg.eigvalsh(s_matrix(kappa).s)
        interval_ok &= w[0] >= 1.0 / (5.0 * kappa) - 1e-9
        interval_ok &= w[-1] <= kappa ** 2 + 10.0 + 1e-9
    drift_ok = worst_drift <= -0.2 + 1e-9
    grid_ok = True
    mismatch = 0.0
    for kappa in np.geomspace(1.0, 1e4, 50):
        grid_ok &= check_gfunction_inequalities(float(kappa)).ok
        cert = check_cubic_certificate(float(kappa))
        grid_ok &= cert.ok
        mismatch = max(mismatch, cert.max_root_mismatch)
    ok = drift_ok and interval_ok and grid_ok and mismatch <= 1e-8
    verdict(3, "drift bound, eigenvalue interval, cubic roots (1000 draws)",
            f"drift={worst_drift:.3f} roots={mismatch:.1e}",
            "<=-0.2;in-interval;1e-8", ok, time.perf_counter() - t0, 10)


def test_04_continuous_dynamics_contract_at_certified_rate():
    t0 = time.perf_counter()
    cases = []
    for kappa in (1.0, 4.0):
        d = 2
        cases.append(QuadraticPotential(
            center=np.zeros(d), eigenvalues=np.geomspace(1.0 / kappa, 1.0, d)))
    rng = np.random.default_rng(7)
    X = rng.standard_normal((50, 5))
    y = np.where(rng.standard_normal(50) >= 0, 1.0, -1.0)
    base = LogisticRegressionPotential(X=X, y=y, ridge=1.0).bounds.L - 1.0
    cases.append(LogisticRegressionPotential(X=X, y=y, ridge=base / 4.0))

    worst_ratio = 0.0
    all_ok = True
    for pot in cases:
        kappa = pot.bounds.kappa
        t_final = 5.0 * kappa ** 2
        substeps = int(10 * t_final * (kappa + 2.0 * kappa))
        rep = contraction_test(pot, t_final=t_final, substeps=substeps,
                               pairs=8, rng=np.random.default_rng(42),
                               checkpoints=8, slack=0.10)
        worst_ratio = max(worst_ratio, rep.max_ratio)
        all_ok &= rep.ok
    verdict(4, "coupled pairs contract at exp(-t/(5k^2+50)), quad+logistic",
            f"max_ratio={worst_ratio:.3f}", "<=1.1+disc", all_ok,
            time.perf_counter() - t0, 120)


def test_05_stationary_moments_on_conditioned_quadratic():
    t0 = time.perf_counter()
    d, kappa, eta = 10, 5.0, 0.02
    eigs = np.geomspace(1.0 / kappa, 1.0, d)
    pot = QuadraticPotential(center=np.zeros(d), eigenvalues=eigs)
    params = DynamicsParams(gamma=kappa, xi=2.0 * kappa, eta=eta, L=1.0)
    cfg = SamplerConfig(potential=pot, params=params, steps=20_000,
                        seed=2024, chains=512, record_every=20_000,
                        record_full_state=True)
    fs = run_chain(cfg).final_state
    n = fs.theta.shape[0]

    def block(samples, target_var):
        mean = samples.mean(axis=0)
        var = samples.var(axis=0, ddof=1)
        se_mean = samples.std(axis=0, ddof=1) / math.sqrt(n)
        se_var = var * math.sqrt(2.0 / (n - 1))
        mean_z = np.abs(mean) / se_mean
        var_excess = np.abs(var - target_var) / (3 * se_var
                                                 + 5 * eta ** 2 * target_var)
        return mean_z.max(), var_excess.max()

    zs, xs = zip(block(fs.theta, 1.0 / eigs), block(fs.p, 1.0),
                 block(fs.r, 1.0))
    mean_z, var_x = max(zs), max(xs)
    ok = mean_z <= 3.0 and var_x <= 1.0
    verdict(5, "theta/p/r stationary moments, d=10 k=5, 512 x 2e4 steps",
            f"mean_z={mean_z:.2f} var_x={var_x:.2f}", "z<=3;x<=1", ok,
            time.perf_counter() - t0, 300)


def test_06_stationary_bias_orders(tmp_path):
    t0 = time.perf_counter()
    base = """
[potential]
type = "quadratic"
d = 10
kappa = 5.0
"""
    slopes = {}
    for algorithm in ("third_order", "ula"):
        cfg = tmp_path / f"{algorithm}.toml"
        cfg.write_text(base + f"[run]\nalgorithm = \"{algorithm}\"\n")
        out = tmp_path / f"{algorithm}.csv"
        assert main(["bias-sweep", "--config", str(cfg),
                     "--out", str(out)]) == 0
        payload = json.loads((tmp_path / f"{algorithm}.json").read_text())
        slopes[algorithm] = payload["slope"]
    ok = (1.7 <= slopes["third_order"] <= 2.3) and (0.7 <= slopes["ula"] <= 1.3)
    verdict(6, "stationary bias slope vs step size (third-order, ULA)",
            f"third={slopes['third_order']:.3f} ula={slopes['ula']:.3f}",
            "2.0+-0.3;1.0+-0.3", ok, time.perf_counter() - t0, 900)


class PseudoHuberPotential(Potential):
    """Spherically symmetric, smooth, non-ridge test potential.

    ``U(theta) = sqrt(1 + |theta|^2) + (m/2) |theta|^2``; curvature lies
    in ``[m, 1 + m]`` and the gradient has no ridge structure, so the
    exact line-integral provider is unavailable and the Chebyshev
    provider is exercised on a genuinely curved gradient.
    """

    def __init__(self, dim, m):
        self.dim = int(dim)
        self.m = float(m)
        self.bounds = ConvexSmoothBounds(m=float(m), L=1.0 + float(m))

    def value(self, theta):
        theta = self._check_theta(theta)
        n2 = np.sum(theta ** 2, axis=-1)
        return np.sqrt(1.0 + n2) + 0.5 * self.m * n2

    def gradient(self, theta):
        theta = self._check_theta(theta)
        n2 = np.sum(theta ** 2, axis=-1, keepdims=True)
        return theta / np.sqrt(1.0 + n2) + self.m * theta


def test_07_chebyshev_provider():
    t0 = time.perf_counter()
    # (a) two nodes integrate the gradient of a quadratic exactly
    rng = np.random.default_rng(5)
    pot = QuadraticPotential(center=rng.standard_normal(4),
                             eigenvalues=np.array([0.3, 0.6, 0.9, 1.2]))
    exact = delta_u_provider(pot, 0.2, mode="exact")
    cheb = delta_u_provider(pot, 0.2, mode="chebyshev", alpha=2)
    theta, p = rng.standard_normal((64, 4)), rng.standard_normal((64, 4))
    exact_diff = float(np.abs(exact.delta(theta, p)
                              - cheb.delta(theta, p)).max())

    # (b) sinusoidal family: measured error within the derivative bound
    a = np.array([0.8, -0.5, 0.3])
    omega = 3.0

    def sin_grad(th):
        th = np.asarray(th, dtype=float)
        return (-omega * np.sin(omega * (th @ a)))[..., None] * a

    spot = BlackBoxPotential(gradient_fn=sin_grad, dim=3,
                             bounds=ConvexSmoothBounds(m=1.0, L=1.0))
    theta0 = np.array([0.4, -0.2, 0.7])
    p0 = np.array([1.1, 0.6, -0.9])
    s0, v, eta = theta0 @ a, p0 @ a, 0.6
    truth = a * (np.cos(omega * (s0 + eta * v)) - np.cos(omega * s0)) / v
    bound_ok = True
    for alpha in (2, 3, 4, 5):
        plan = build_chebyshev_plan(alpha, eta)
        approx = delta_u_chebyshev(spot, LineSegment(theta0, p0, eta), plan)
        sup_deriv = omega ** (alpha + 1) * abs(v) ** alpha * np.abs(a).max()
        bound_ok &= (np.abs(approx - truth).max()
                     <= eta * interpolation_error_bound(alpha, eta, sup_deriv))

    # (c) three nodes keep the quadratic-order stationary bias on a
    # curved non-ridge target (variances vs exact radial moments)
    d, m = 2, 0.5
    hpot = PseudoHuberPotential(d, m)
    L, kappa = hpot.bounds.L, hpot.bounds.kappa
    u_r = lambda r: np.sqrt(1.0 + r * r) + 0.5 * m * r * r
    z0 = quad(lambda r: r ** (d - 1) * np.exp(-u_r(r)), 0, 40)[0]
    z2 = quad(lambda r: r ** (d + 1) * np.exp(-u_r(r)), 0, 40)[0]
    var_star = z2 / z0 / d
    etas = [0.4, 0.2, 0.1]
    biases = []
    for eta_c in etas:
        steps = int(round(240.0 / eta_c))
        params = DynamicsParams(gamma=kappa, xi=2 * kappa, eta=eta_c, L=L)
        cfg = SamplerConfig(potential=hpot, params=params, steps=steps,
                            seed=99, chains=1024, delta_u_mode="chebyshev",
                            alpha=3, record_every=2, record_full_state=True)
        rep = run_chain(cfg)
        keep = rep.record_steps >= steps // 2
        vt = rep.theta[keep].reshape(-1, d).var(axis=0)
        vp = rep.p[keep].reshape(-1, d).var(axis=0)
        vr = rep.r[keep].reshape(-1, d).var(axis=0)
        biases.append(math.sqrt(np.sum((vt - var_star) ** 2)
                                + np.sum((vp - 1.0 / L) ** 2)
                                + np.sum((vr - 1.0 / L) ** 2)))
    slope = float(np.polyfit(np.log(etas), np.log(biases), 1)[0])

    ok = exact_diff <= 1e-12 and bound_ok and slope >= 1.7
    verdict(7, "Chebyshev provider: exactness, error bound, bias order",
            f"diff={exact_diff:.1e} slope={slope:.2f}",
            "<=1e-12;err<=bound;>=1.7", ok, time.perf_counter() - t0, 600)


def test_08_one_step_kernel_regression():
    t0 = time.perf_counter()
    d, n = 3, 100_000
    eigs = np.array([0.5, 0.8, 1.25])
    pot = QuadraticPotential(center=np.zeros(d), eigenvalues=eigs)
    params = DynamicsParams(gamma=2.0, xi=4.0, eta=0.15, L=pot.bounds.L)

    rng = np.random.default_rng(12345)
    X = rng.standard_normal((n, 3 * d))
    state0 = ChainState(theta=X[:, :d].copy(), p=X[:, d:2 * d].copy(),
                        r=X[:, 2 * d:].copy())
    cfg = SamplerConfig(potential=pot, params=params, steps=1, seed=77,
                        chains=n, initial_state=state0,
                        record_full_state=True)
    fs = run_chain(cfg).final_state
    Y = np.concatenate([fs.theta, fs.p, fs.r], axis=1)

    # predicted per-mode linear map and per-step noise covariance
    M = np.zeros((3 * d, 3 * d))
    Q = np.zeros((3 * d, 3 * d))
    for j, lam in enumerate(eigs):
        A_j, Q_j = discrete_mode_map(float(lam), params)
        for a in range(3):
            for b in range(3):
                M[a * d + j, b * d + j] = A_j[a, b]
                Q[a * d + j, b * d + j] = Q_j[a, b]

    B_hat, *_ = np.linalg.lstsq(X, Y, rcond=None)       # Y ~ X @ M.T
    resid = Y - X @ B_hat
    dof = n - 3 * d
    sigma2 = (resid ** 2).sum(axis=0) / dof
    g_inv = np.linalg.inv(X.T @ X)
    se_map = np.sqrt(np.outer(np.diag(g_inv), sigma2))
    map_z = float((np.abs(B_hat - M.T) / se_map).max())

    cov_hat = resid.T @ resid / dof
    se_cov = np.sqrt((np.outer(np.diag(Q), np.diag(Q)) + Q ** 2) / n)
    cov_z = float((np.abs(cov_hat - Q) / se_cov).max())

    ok = map_z <= 3.0 and cov_z <= 3.0
    verdict(8, "fitted one-step map and noise vs closed-form kernel (1e5)",
            f"map_z={map_z:.2f} cov_z={cov_z:.2f}", "<=3 SE", ok,
            time.perf_counter() - t0, 120)


def test_09_dimension_scaling_of_stationary_bias(tmp_path):
    t0 = time.perf_counter()
    biases = {}
    for d in (4, 64):
        cfg = tmp_path / f"d{d}.toml"
        cfg.write_text(f"""
[potential]
type = "quadratic"
d = {d}
kappa = 4.0

[dynamics]
etas = [0.05, 0.025]
""")
        out = tmp_path / f"d{d}.csv"
        assert main(["bias-sweep", "--config", str(cfg),
                     "--out", str(out)]) == 0
        payload = json.loads((tmp_path / f"d{d}.json").read_text())
        biases[d] = payload["plateau_bias"][payload["etas"].index(0.05)]
    ratio = biases[64] / biases[4]
    limit = math.sqrt(64 / 4) * 1.5
    verdict(9, "stationary bias ratio d=64 vs d=4 at eta=0.05",
            f"ratio={ratio:.3f}", f"<={limit:.1f}", ratio <= limit,
            time.perf_counter() - t0, 600)


def test_10_cli_outputs_are_deterministic(tmp_path, capsys):
    t0 = time.perf_counter()
    cfg = tmp_path / "run.toml"
    cfg.write_text("""
[potential]
type = "quadratic"
d = 3
kappa = 4.0
seed = 5

[dynamics]
eta = 0.05

[run]
steps = 200
chains = 8
seed = 11
thinning = 20
""")
    outs = [tmp_path / name for name in ("a.csv", "b.csv", "c.csv")]
    for out, threads in zip(outs, ("1", "1", "4")):
        code = main(["sample", "--config", str(cfg), "--threads", threads,
                     "--full-state", "--out", str(out)])
        assert code == 0
    capsys.readouterr()
    blobs = [out.read_bytes() for out in outs]
    sidecars = []
    for out in outs:
        payload = json.loads((tmp_path / f"{out.stem}.json").read_text())
        payload.pop("csv")                       # the only path-bearing field
        sidecars.append(payload)
    identical = (blobs[0] == blobs[1] == blobs[2]
                 and sidecars[0] == sidecars[1] == sidecars[2])
    verdict(10, "identical seeds give byte-identical CSV (reruns, threads)",
            f"identical={identical}", "byte-equal", identical,
            time.perf_counter() - t0, 60)
