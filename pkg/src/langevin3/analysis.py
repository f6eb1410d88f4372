"""Spectral certificates behind the contraction rate of the dynamics.

The continuous third-order dynamics contract toward the target in a
``kappa``-dependent quadratic norm: there is a symmetric positive
definite block ``s(kappa)`` (acting per coordinate triple, i.e. the
full matrix is ``s (x) I_d``) such that along any pair of synchronously
coupled trajectories the weighted squared distance decays at rate at
least ``1/(5 kappa^2 + 50)``.  That follows from two finite-dimensional
facts, both checkable numerically:

* for every normalized Hessian eigenvalue ``l in [1/kappa, 1]`` the
  symmetrized weighted drift ``s m3 + m3' s`` has all eigenvalues below
  ``-1/5`` (:func:`drift_max_eigenvalue`);
* the eigenvalues of ``s`` itself lie in ``[1/(5 kappa), kappa^2 + 10]``
  (:func:`s_matrix` / :func:`check_cubic_certificate`).

The module exposes the matrices, the rational helper functions
``g1 ... g5`` used by those certificates, executable checks of the
certificate inequalities, and :func:`contraction_test`, which verifies
the advertised decay rate on actual coupled simulations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError
from .model import Potential, minimize
from .kernel_coeffs import DynamicsParams

__all__ = [
    "LyapunovMatrix",
    "DriftMatrix",
    "GFunctions",
    "s_matrix",
    "s_norm",
    "drift_matrix",
    "drift_max_eigenvalue",
    "drift_eigenvalues_closed_form",
    "g_functions",
    "check_gfunction_inequalities",
    "check_cubic_certificate",
    "contraction_test",
    "CONTRACTION_RATE_TIME",
]


def CONTRACTION_RATE_TIME(kappa: float) -> float:
    """Time constant ``5 kappa^2 + 50`` of the certified contraction."""
    return 5.0 * kappa ** 2 + 50.0


# ---------------------------------------------------------------------------
# the Lyapunov block s(kappa)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LyapunovMatrix:
    """The 3x3 coefficient block ``s`` of the contraction norm.

    The full quadratic form on ``R^{3d}`` is ``s (x) I_d``: it couples
    the ``(theta_j, p_j, r_j)`` triple of each coordinate and nothing
    else.  Eigenvalues of ``s`` lie in ``[1/(5 kappa), kappa^2 + 10]``.
    """

    kappa: float
    s: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.s)


def s_matrix(kappa: float) -> LyapunovMatrix:
    """Evaluate the contraction-norm block at condition number ``kappa``.

    The entries are fixed rational functions of ``kappa``; at
    ``kappa = 1`` the block is ``[[11/4, 1/2, -1/4], [1/2, 3, 1],
    [-1/4, 1, 3/4]]``, and for large ``kappa`` it grows like
    ``kappa^2 / 4`` in the top-left entry.
    """
    if not (kappa >= 1.0 and math.isfinite(kappa)):
        raise ArgumentError(f"kappa must be >= 1, got {kappa!r}")
    k = float(kappa)
    s11 = (k ** 7 + 3 * k ** 4 + 5 * k ** 3 + k + 1) / (4 * k ** 5)
    s12 = k / 2
    s13 = (k / 4) * (1 - k ** -3 - k ** -4)
    s22 = (4 * k ** 4 + 6 * k ** 3 + k + 1) / (4 * k ** 4)
    s23 = (k + 1) / (2 * k)
    s33 = (k + 2) / (4 * k)
    s = np.array([[s11, s12, s13],
                  [s12, s22, s23],
                  [s13, s23, s33]])
    return LyapunovMatrix(kappa=k, s=s)


def s_norm(dx, S: LyapunovMatrix) -> float:
    """Quadratic form ``dx' (s (x) I_d) dx`` for block-ordered ``dx``.

    ``dx`` concatenates the three blocks ``(theta, p, r)``, each of
    length ``d``; leading batch axes are allowed and reduce to a batch
    of scalars.

    Parameters
    ----------
    dx : (..., 3d) array_like
    S : LyapunovMatrix
    """
    dx = np.asarray(dx, dtype=float)
    n = dx.shape[-1]
    if n % 3 != 0:
        raise ArgumentError(
            f"state difference has length {n}, not divisible into "
            "(theta, p, r) blocks")
    v = dx.reshape(dx.shape[:-1] + (3, n // 3))
    out = np.einsum("...ik,ij,...jk->...", v, S.s, v)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# the per-eigendirection drift
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DriftMatrix:
    """Linearized drift of the dynamics along one Hessian eigendirection.

    ``l`` is the normalized Hessian eigenvalue ``H/L in [1/kappa, 1]``;
    the block is ``[[0, 1, 0], [-l, 0, gamma], [0, -gamma, -xi]]``.
    """

    l: float
    gamma: float
    xi: float
    m3: np.ndarray


def drift_matrix(l: float, gamma: float, xi: float) -> DriftMatrix:
    m3 = np.array([[0.0, 1.0, 0.0],
                   [-l, 0.0, gamma],
                   [0.0, -gamma, -xi]])
    return DriftMatrix(l=float(l), gamma=float(gamma), xi=float(xi), m3=m3)


def drift_max_eigenvalue(kappa: float, l: float) -> float:
    """Largest eigenvalue of ``s m3 + m3' s`` at rates ``(kappa, 2 kappa)``.

    This is the decay-rate certificate: the contraction argument needs
    it to be at most ``-1/5`` for every ``l in [1/kappa, 1]``.

    Parameters
    ----------
    kappa : float
        Condition number, at least 1.
    l : float
        Normalized Hessian eigenvalue; must lie in ``[1/kappa, 1]``.
    """
    S = s_matrix(kappa)
    if not (1.0 / kappa - 1e-12 <= l <= 1.0 + 1e-12):
        raise ArgumentError(
            f"l={l!r} outside [1/kappa, 1] = [{1.0 / kappa!r}, 1]")
    m3 = drift_matrix(l, gamma=kappa, xi=2.0 * kappa).m3
    w = S.s @ m3
    w = w + w.T
    return float(np.linalg.eigvalsh(w)[-1])


def drift_eigenvalues_closed_form(kappa: float, l: float) -> np.ndarray:
    """Closed-form spectrum of ``s m3 + m3' s``, sorted ascending.

    The three eigenvalues are ``-1`` and
    ``-(2 (l + 1/kappa) +- (l - 1/kappa) sqrt(g1)) * kappa / 4``.
    """
    g1 = g_functions(kappa).g1
    root = math.sqrt(g1)
    lam_plus = -(2 * (l + 1 / kappa) + (l - 1 / kappa) * root) * kappa / 4
    lam_minus = -(2 * (l + 1 / kappa) - (l - 1 / kappa) * root) * kappa / 4
    return np.sort(np.array([-1.0, lam_plus, lam_minus]))


# ---------------------------------------------------------------------------
# g-functions and the certificate checks
# ---------------------------------------------------------------------------

class GFunctions(NamedTuple):
    g1: float
    g2: float
    g3: float
    g4: float
    g5: float


# Coefficients in x = 1/kappa, ascending powers.
_G1_COEFFS = (4, 0, 20, 56, 40, 8, 20, 12, 1, 2, 1)
_G2_COEFFS = (0, 0, 0, 1, 0, 5, 11, 5, 1, 2, 1)
_G3_COEFFS = (8, 0, 24, 60, 41, 10, 21, 12, 1, 2, 1)
# g5 = x^6 * (inner polynomial); identically equal to g4^2 - 3 g3 x^9.
_G5_INNER = (1, 0, 10, -2, 35, 40, -5, -1, 37, 1, 7, 11, 0, 1, 1)


def g_functions(kappa: float) -> GFunctions:
    """The five rational certificate helpers, as functions of ``kappa``.

    All are polynomials in ``x = 1/kappa``: ``g1(1) = 164``,
    ``g2(1) = g4(1) = 26``, ``g3(1) = 180``; ``g1 >= 4`` for all
    ``kappa >= 1`` and ``g2 * kappa^3 -> 1`` as ``kappa -> inf``.
    ``g4`` coincides with ``g2``, and ``g5`` satisfies
    ``(g4^2 - g5) * kappa^9 / 3 == g3``.
    """
    if not (kappa >= 1.0 and math.isfinite(kappa)):
        raise ArgumentError(f"kappa must be >= 1, got {kappa!r}")
    x = 1.0 / kappa
    g1 = float(np.polynomial.polynomial.polyval(x, _G1_COEFFS))
    g2 = float(np.polynomial.polynomial.polyval(x, _G2_COEFFS))
    g3 = float(np.polynomial.polynomial.polyval(x, _G3_COEFFS))
    g5 = x ** 6 * float(np.polynomial.polynomial.polyval(x, _G5_INNER))
    return GFunctions(g1=g1, g2=g2, g3=g3, g4=g2, g5=g5)


@dataclass(frozen=True)
class GInequalityReport:
    """Certificate inequalities proving the drift bound at ``l = 1``.

    ``two_minus_sqrt_g1`` must be ``<= 0`` and ``worst_eigenvalue``
    (the closed-form largest drift eigenvalue at the stiffest direction)
    must be ``<= -1/5``.
    """

    kappa: float
    two_minus_sqrt_g1: float
    worst_eigenvalue: float
    ok: bool


def check_gfunction_inequalities(kappa: float) -> GInequalityReport:
    """Check ``2 <= sqrt(g1)`` and the resulting ``-1/5`` drift bound."""
    g1 = g_functions(kappa).g1
    root = math.sqrt(g1)
    lhs = 2.0 - root
    worst = -(kappa / 4.0) * (lhs + 2.0 / kappa + root / kappa)
    return GInequalityReport(
        kappa=float(kappa),
        two_minus_sqrt_g1=lhs,
        worst_eigenvalue=worst,
        ok=(lhs <= 0.0) and (worst <= -0.2),
    )


@dataclass(frozen=True)
class CubicCertificateReport:
    """Root bracket and eigenvalue coincidence for the spectrum of ``s``.

    The eigenvalues of ``s(kappa)``, scaled by ``4 / kappa^5``, are the
    roots of ``f(x) = x^3 - g2 x^2 + g3 kappa^-9 x - g3 kappa^-15``.
    The sign pattern ``f(4/(5 kappa^6)) < 0 < f(4/kappa^3 + 40/kappa^5)``
    brackets the spectrum inside ``[1/(5 kappa), kappa^2 + 10]``.
    """

    kappa: float
    f_at_lower_probe: float
    f_at_upper_probe: float
    roots_scaled: np.ndarray          # cubic roots * kappa^5 / 4, ascending
    eigenvalues: np.ndarray           # eig(s), ascending
    max_root_mismatch: float          # relative, roots vs eigenvalues
    within_interval: bool
    ok: bool


def check_cubic_certificate(kappa: float) -> CubicCertificateReport:
    """Cross-check the cubic characterization of ``eig(s)``.

    Both the cubic roots and the eigenvalues are computed in extended
    precision (50 digits): the spectrum of ``s`` spans a factor of
    roughly ``kappa^3``, so double precision cannot resolve the smallest
    eigenvalue to the 1e-8 relative accuracy this certificate asserts
    once ``kappa`` is large.
    """
    if not (kappa >= 1.0 and math.isfinite(kappa)):
        raise ArgumentError(f"kappa must be >= 1, got {kappa!r}")
    import mpmath as mp

    with mp.workdps(50):
        k = mp.mpf(kappa)
        x = 1 / k
        g2 = mp.polyval(list(reversed(_G2_COEFFS)), x)
        g3 = mp.polyval(list(reversed(_G3_COEFFS)), x)
        f = lambda t: t ** 3 - g2 * t ** 2 + g3 * k ** -9 * t - g3 * k ** -15
        f_low = f(4 / (5 * k ** 6))
        f_high = f(4 / k ** 3 + 40 / k ** 5)

        roots = mp.polyroots([mp.mpf(1), -g2, g3 * k ** -9, -g3 * k ** -15],
                             maxsteps=200, extraprec=120)
        roots = sorted(mp.re(r) for r in roots)
        roots_scaled = [r * k ** 5 / 4 for r in roots]

        s11 = (k ** 7 + 3 * k ** 4 + 5 * k ** 3 + k + 1) / (4 * k ** 5)
        s12 = k / 2
        s13 = (k / 4) * (1 - k ** -3 - k ** -4)
        s22 = (4 * k ** 4 + 6 * k ** 3 + k + 1) / (4 * k ** 4)
        s23 = (k + 1) / (2 * k)
        s33 = (k + 2) / (4 * k)
        eig, _ = mp.eigsy(mp.matrix([[s11, s12, s13],
                                     [s12, s22, s23],
                                     [s13, s23, s33]]))
        eig = sorted(eig)

        mism = max(abs(r - e) / abs(e) for r, e in zip(roots_scaled, eig))
        lo, hi = 1 / (5 * k), k ** 2 + 10
        inside = all(lo - mp.mpf("1e-12") <= e <= hi + mp.mpf("1e-9")
                     for e in eig)
        ok = (f_low < 0) and (f_high > 0) and inside \
            and mism <= mp.mpf("1e-8")
        return CubicCertificateReport(
            kappa=float(kappa),
            f_at_lower_probe=float(f_low),
            f_at_upper_probe=float(f_high),
            roots_scaled=np.array([float(r) for r in roots_scaled]),
            eigenvalues=np.array([float(e) for e in eig]),
            max_root_mismatch=float(mism),
            within_interval=bool(inside),
            ok=bool(ok),
        )


# ---------------------------------------------------------------------------
# coupled-simulation contraction check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContractionReport:
    """Measured vs certified decay of the coupled-pair distance.

    ``mean_snorm2[k]`` is the empirical mean (over pairs) of the
    weighted squared distance at ``times[k]``; ``bound[k]`` is the
    certified envelope ``mean_snorm2(0) * exp(-times[k] / rate_time)``.
    ``max_ratio`` is the worst ``mean / bound``; the test passes while
    it stays below ``1 + slack``.
    """

    times: np.ndarray
    mean_snorm2: np.ndarray
    bound: np.ndarray
    max_ratio: float
    rate_time: float
    ok: bool


def contraction_test(pot: Potential, t_final: float, substeps: int,
                     pairs: int, rng, checkpoints: int = 16,
                     slack: float = 0.1) -> ContractionReport:
    """Verify the certified contraction rate on coupled simulations.

    Runs ``pairs`` synchronously coupled fine Euler-Maruyama trajectory
    pairs of the continuous dynamics (rates ``gamma = kappa``,
    ``xi = 2 kappa``) from random distinct starts and checks that the
    empirical mean of the weighted squared distance decays at least as
    fast as ``exp(-t / (5 kappa^2 + 50))``, within ``slack`` plus a
    discretization allowance proportional to the substep.

    Parameters
    ----------
    pot : Potential
    t_final : float
        Horizon; the certificate is checked on a uniform grid up to it.
    substeps : int
        Total Euler substeps over the horizon; must resolve the
        stiffest rate (at least ``10 * t_final * (gamma + xi)``).
    pairs : int
        Number of coupled pairs.
    rng : numpy.random.Generator
    """
    from .reference import coupled_fine_pair
    from .sampler import ChainState

    kappa = pot.bounds.kappa
    L = pot.bounds.L
    params = DynamicsParams(gamma=kappa, xi=2.0 * kappa, eta=0.0, L=L)
    min_sub = 10.0 * t_final * (params.gamma + params.xi)
    if substeps < min_sub:
        raise ArgumentError(
            f"substeps={substeps} too coarse for the stiffest rate; "
            f"need at least {math.ceil(min_sub)}")

    d = pot.dim
    theta_hat = minimize(pot).theta
    S = s_matrix(kappa)

    def draw_state():
        return ChainState(
            theta=theta_hat + rng.standard_normal((pairs, d)) / math.sqrt(pot.bounds.m),
            p=rng.standard_normal((pairs, d)) / math.sqrt(L),
            r=rng.standard_normal((pairs, d)) / math.sqrt(L),
        )

    x, y = draw_state(), draw_state()

    def mean_snorm2(a: ChainState, b: ChainState) -> float:
        dx = np.concatenate([a.theta - b.theta, a.p - b.p, a.r - b.r], axis=-1)
        return float(np.mean(s_norm(dx, S)))

    times = np.linspace(0.0, t_final, checkpoints + 1)
    values = [mean_snorm2(x, y)]
    dt = t_final / checkpoints
    sub_per_leg = max(1, math.ceil(substeps * dt / t_final))
    for _ in range(checkpoints):
        x, y = coupled_fine_pair(pot, params, x, y, dt, sub_per_leg, rng)
        values.append(mean_snorm2(x, y))

    values = np.array(values)
    rate_time = CONTRACTION_RATE_TIME(kappa)
    bound = values[0] * np.exp(-times / rate_time)
    # Euler bias allowance: weak order 1 in the substep length.
    allowance = 10.0 * (dt / sub_per_leg) * (params.gamma + params.xi)
    ratio = values / bound
    max_ratio = float(ratio.max())
    return ContractionReport(
        times=times,
        mean_snorm2=values,
        bound=bound,
        max_ratio=max_ratio,
        rate_time=rate_time,
        ok=bool(max_ratio <= 1.0 + slack + allowance),
    )
