"""Continuous-time and per-mode oracles used to validate the sampler.

For quadratic potentials the third-order dynamics are linear, so both
the continuous-time transition over any horizon and the discrete
chain's one-step map decompose per Hessian eigendirection into 3x3
Gaussian kernels that can be computed to near machine precision:

* :func:`exact_transition` -- the continuous kernel ``(Phi, Q)`` over
  time ``t`` for one eigendirection, via a matrix exponential and
  quadrature of the noise integral;
* :func:`discrete_mode_map` / :func:`discrete_stationary_cov` -- the
  one-step linear map of the discretized algorithm on one
  eigendirection and its exact stationary covariance, which is what the
  chain's bias studies compare against.

For arbitrary potentials, :func:`fine_euler` integrates the dynamics by
small-step Euler-Maruyama (noise only on the ``r`` block), and
:func:`coupled_fine_pair` advances two copies with the same Brownian
increments (synchronous coupling), the construction behind the
contraction certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, solve_discrete_lyapunov

from .errors import ArgumentError, NumericalError
from .kernel_coeffs import DynamicsParams, mean_coeffs, noise_coeffs
from .model import Potential
from .sampler import ChainState

__all__ = [
    "LinearModeTransition",
    "exact_transition",
    "discrete_mode_map",
    "discrete_stationary_cov",
    "fine_euler",
    "coupled_fine_pair",
]


# ---------------------------------------------------------------------------
# exact continuous transition per eigendirection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearModeTransition:
    """Gaussian transition of one eigendirection over time ``t``.

    The state triple ``(theta_j, p_j, r_j)`` along an eigendirection
    with potential eigenvalue ``lam`` evolves linearly:
    ``x_t ~ N(Phi x_0, Q)``.

    Attributes
    ----------
    lam : float
        Potential eigenvalue of the direction.
    t : float
        Horizon.
    A3 : (3, 3) ndarray
        Drift ``[[0, 1, 0], [-lam/L, 0, gamma], [0, -gamma, -xi]]``.
    Phi : (3, 3) ndarray
        ``expm(t * A3)``.
    Q : (3, 3) ndarray
        Accumulated noise covariance
        ``integral of e^{s A3} N e^{s A3'} ds`` with
        ``N = diag(0, 0, 2 xi / L)``.
    """

    lam: float
    t: float
    A3: np.ndarray
    Phi: np.ndarray
    Q: np.ndarray
    params: DynamicsParams

    def stationary_cov(self) -> np.ndarray:
        """Target covariance ``diag(1/lam, 1/L, 1/L)`` of the direction."""
        L = self.params.L
        return np.diag([1.0 / self.lam, 1.0 / L, 1.0 / L])


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def exact_transition(lam: float, params: DynamicsParams,
                     t: float) -> LinearModeTransition:
    """Exact Gaussian transition kernel of one eigendirection.

    ``Phi`` comes from the 3x3 matrix exponential; ``Q`` from composite
    Gauss-Legendre quadrature of the rank-one integrand
    ``(2 xi / L) w(s) w(s)'`` with ``w(s)`` the third column of
    ``e^{s A3}``, with panel doubling until two successive refinements
    agree to 1e-11 (Frobenius, relative to the larger of 1 and the
    result).

    Parameters
    ----------
    lam : float
        Positive potential eigenvalue.
    params : DynamicsParams
    t : float
        Horizon, nonnegative.
    """
    if lam <= 0:
        raise ArgumentError(f"lam must be positive, got {lam!r}")
    if t < 0:
        raise ArgumentError(f"t must be >= 0, got {t!r}")
    g, xi, L = params.gamma, params.xi, params.L
    A3 = np.array([[0.0, 1.0, 0.0],
                   [-lam / L, 0.0, g],
                   [0.0, -g, -xi]])
    if t == 0.0:
        return LinearModeTransition(lam=lam, t=0.0, A3=A3,
                                    Phi=np.eye(3), Q=np.zeros((3, 3)),
                                    params=params)
    Phi = expm(t * A3)

    def quad(panels: int) -> np.ndarray:
        edges = np.linspace(0.0, t, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        total = np.zeros((3, 3))
        for h, m in zip(half, mid):
            for node, weight in zip(_GL_NODES, _GL_WEIGHTS):
                s = m + h * node
                w = expm(s * A3)[:, 2]
                total += (h * weight) * np.outer(w, w)
        return (2.0 * xi / L) * total

    panels = 16
    q_prev = quad(panels)
    while True:
        panels *= 2
        q_next = quad(panels)
        scale = max(1.0, float(np.linalg.norm(q_next)))
        if np.linalg.norm(q_next - q_prev) <= 1e-11 * scale:
            break
        if panels >= 4096:
            raise NumericalError(
                "transition-covariance quadrature failed to converge "
                f"(last delta {np.linalg.norm(q_next - q_prev):.3e})")
        q_prev = q_next
    return LinearModeTransition(lam=lam, t=float(t), A3=A3, Phi=Phi,
                                Q=0.5 * (q_next + q_next.T), params=params)


# ---------------------------------------------------------------------------
# the discrete chain restricted to one eigendirection
# ---------------------------------------------------------------------------

def discrete_mode_map(lam: float, params: DynamicsParams):
    """One-step linear map and noise covariance of the discrete chain.

    On a quadratic eigendirection with eigenvalue ``lam`` the exact
    line-integrated gradient is itself linear in ``(theta, p)``:
    ``Delta = (lam / L) (eta theta + eta^2 p / 2)``.  Substituting it
    into the kernel's mean rows gives the 3x3 map ``A`` with
    ``x_{k+1} ~ N(A x_k, Qstep)``; ``Qstep`` is the physical
    ``(1/L) [s_ij]``.

    Returns
    -------
    (A, Qstep) : pair of (3, 3) ndarrays
    """
    if lam <= 0:
        raise ArgumentError(f"lam must be positive, got {lam!r}")
    mc = mean_coeffs(params)
    nc = noise_coeffs(params)
    eta = params.eta
    l = lam / params.L
    A = np.array([
        [1.0 - l * eta ** 2 / 2.0,
         mc.mu12 - l * eta ** 3 / 4.0,
         mc.mu13],
        [-l * eta,
         mc.mu22 - l * eta ** 2 / 2.0,
         mc.mu23],
        [mc.mu31 * l * eta,
         mc.mu32 + mc.mu31 * l * eta ** 2 / 2.0,
         mc.mu33],
    ])
    Qstep = nc.matrix() / params.L
    return A, Qstep


def discrete_stationary_cov(lam: float, params: DynamicsParams) -> np.ndarray:
    """Exact stationary covariance of the discrete chain on one mode.

    Solves the fixed-point equation ``A C A' + Qstep = C``.  The chain
    must be stable at this step size (spectral radius of ``A`` below 1),
    otherwise a :class:`NumericalError` is raised.
    """
    A, Qstep = discrete_mode_map(lam, params)
    rho = float(np.abs(np.linalg.eigvals(A)).max())
    if rho >= 1.0:
        raise NumericalError(
            f"discrete chain unstable at eta={params.eta!r} for "
            f"eigenvalue {lam!r} (spectral radius {rho:.6f})")
    C = solve_discrete_lyapunov(A, Qstep)
    return 0.5 * (C + C.T)


# ---------------------------------------------------------------------------
# fine Euler-Maruyama integration
# ---------------------------------------------------------------------------

def _check_substeps(params: DynamicsParams, t: float, substeps: int):
    floor = 10.0 * t * (params.gamma + params.xi)
    if substeps < floor:
        raise ArgumentError(
            f"substeps={substeps} cannot resolve the stiffest rate over "
            f"t={t}; need at least {math.ceil(floor)}")


def fine_euler(pot: Potential, params: DynamicsParams, state: ChainState,
               t: float, substeps: int, rng) -> ChainState:
    """Euler-Maruyama integration of the continuous dynamics.

    Drift ``(p, -grad U/L + gamma r, -gamma p - xi r)`` with Brownian
    noise of intensity ``sqrt(2 xi / L)`` on the ``r`` block only.  The
    state blocks may carry leading batch axes (replicas); one standard
    normal array per substep is drawn with the shape of the ``r`` block.

    Parameters
    ----------
    pot : Potential
    params : DynamicsParams
        Only ``gamma``, ``xi``, ``L`` are used.
    state : ChainState
    t : float
        Horizon.
    substeps : int
        Number of Euler steps; must be at least
        ``10 * t * (gamma + xi)``.
    rng : numpy.random.Generator
    """
    if t < 0:
        raise ArgumentError(f"t must be >= 0, got {t!r}")
    if t == 0.0:
        return state
    _check_substeps(params, t, substeps)
    g, xi, L = params.gamma, params.xi, params.L
    h = t / substeps
    noise_scale = math.sqrt(2.0 * xi * h / L)
    theta, p, r = (state.theta.copy(), state.p.copy(), state.r.copy())
    for _ in range(substeps):
        grad = pot.gradient(theta)
        z = rng.standard_normal(r.shape)
        theta, p, r = (
            theta + h * p,
            p + h * (-grad / L + g * r),
            r + h * (-g * p - xi * r) + noise_scale * z,
        )
    if not (np.isfinite(theta).all() and np.isfinite(p).all()
            and np.isfinite(r).all()):
        raise NumericalError("fine Euler-Maruyama trajectory diverged")
    return ChainState(theta=theta, p=p, r=r)


def coupled_fine_pair(pot: Potential, params: DynamicsParams,
                      x0: ChainState, y0: ChainState, t: float,
                      substeps: int, rng):
    """Advance two copies with identical Brownian increments.

    Synchronous coupling: each substep draws one noise array and adds
    it to both trajectories, so the noise cancels exactly in their
    difference.

    Returns
    -------
    (ChainState, ChainState)
    """
    if t < 0:
        raise ArgumentError(f"t must be >= 0, got {t!r}")
    if t == 0.0:
        return x0, y0
    _check_substeps(params, t, substeps)
    g, xi, L = params.gamma, params.xi, params.L
    h = t / substeps
    noise_scale = math.sqrt(2.0 * xi * h / L)
    tx, px, rx = x0.theta.copy(), x0.p.copy(), x0.r.copy()
    ty, py, ry = y0.theta.copy(), y0.p.copy(), y0.r.copy()
    for _ in range(substeps):
        gx = pot.gradient(tx)
        gy = pot.gradient(ty)
        z = noise_scale * rng.standard_normal(rx.shape)
        tx, px, rx = tx + h * px, px + h * (-gx / L + g * rx), \
            rx + h * (-g * px - xi * rx) + z
        ty, py, ry = ty + h * py, py + h * (-gy / L + g * ry), \
            ry + h * (-g * py - xi * ry) + z
    for arr in (tx, px, rx, ty, py, ry):
        if not np.isfinite(arr).all():
            raise NumericalError("coupled fine trajectory diverged")
    return ChainState(theta=tx, p=px, r=rx), ChainState(theta=ty, p=py, r=ry)
