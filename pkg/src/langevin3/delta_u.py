"""Line-integrated gradients: the only nonlinear ingredient of the step.

The transition kernel needs ``Delta(theta, p) = (1/L) * integral over
t in [0, eta] of grad U(theta + t p) dt`` -- the gradient averaged
along the straight line the position travels during one step.  Two
providers compute it:

* :func:`delta_u_ridge` -- exact, for ridge-separable potentials
  ``U(theta) = sum_i u_i(a_i . theta)``.  Along a line each term is a
  univariate function, so the integral telescopes by the fundamental
  theorem of calculus into function-value differences; no quadrature
  error at all.
* :func:`delta_u_chebyshev` -- for black-box gradients: interpolate the
  integrand at Chebyshev nodes and integrate the Lagrange interpolant
  exactly.  Costs ``alpha`` gradient evaluations and inherits the
  classical interpolation error bound (:func:`interpolation_error_bound`).

Both return the ``1/L``-normalized integral: the kernel's mean formula
is written against that normalization, with fixed row weights
``(-eta/2, -1, mu31)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError
from .model import Potential, QuadraticPotential

__all__ = [
    "LineSegment",
    "ChebyshevPlan",
    "delta_u_ridge",
    "build_chebyshev_plan",
    "delta_u_chebyshev",
    "interpolation_error_bound",
    "ExactRidgeProvider",
    "ChebyshevProvider",
    "delta_u_provider",
    "DEGENERACY_THRESHOLD",
]

# A ridge term's Newton-Leibniz quotient divides by a_i . p; when
# |a_i . p| * eta is this small relative to 1 + |a_i . theta| the
# quotient is numerically meaningless and the midpoint limit is used
# instead (its error is O((eta * a_i.p)^2), negligible below threshold).
DEGENERACY_THRESHOLD = 1e-7


@dataclass(frozen=True)
class LineSegment:
    """The straight line ``theta + t p`` for ``t in [0, eta]``.

    ``theta`` and ``p`` may carry leading batch axes (e.g. one row per
    chain); the segment length ``eta`` is shared.
    """

    theta: np.ndarray
    p: np.ndarray
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))
        if self.theta.shape != self.p.shape:
            raise ArgumentError("theta and p must have identical shapes")
        if not (self.eta >= 0):
            raise ArgumentError(f"eta must be >= 0, got {self.eta!r}")


# ---------------------------------------------------------------------------
# exact ridge-separable provider
# ---------------------------------------------------------------------------

def delta_u_ridge(pot: Potential, seg: LineSegment) -> np.ndarray:
    """Exact ``(1/L)``-normalized line-integrated gradient.

    For ridge-separable ``U``, each component contributes::

        [u_i(a_i.(theta + eta p)) - u_i(a_i.theta)] / (a_i.p) * a_i

    (Newton-Leibniz along the line); components with ``|a_i.p| * eta``
    below :data:`DEGENERACY_THRESHOLD` (relative to ``1 + |a_i.theta|``)
    use the midpoint limit ``eta * u_i'(a_i.theta + eta a_i.p / 2) * a_i``
    instead, so there is no division blow-up anywhere.  Quadratic
    potentials use the closed form
    ``(1/L) (eta * grad U(theta) + eta^2/2 * A p)``.

    Parameters
    ----------
    pot : Potential
        Must be ridge-separable (expose ``pot.ridge``) or quadratic.
    seg : LineSegment

    Returns
    -------
    ndarray with the shape of ``seg.theta``.
    """
    L = pot.bounds.L
    eta = seg.eta
    if isinstance(pot, QuadraticPotential):
        # grad U is linear in t: the integral is exact in two terms.
        return (eta * pot.gradient(seg.theta)
                + 0.5 * eta ** 2 * (seg.p @ pot.matrix)) / L
    ridge = pot.ridge
    if ridge is None:
        raise ArgumentError(
            f"{type(pot).__name__} has no ridge decomposition; "
            "use delta_u_chebyshev for black-box gradients")

    t0 = ridge.projections(seg.theta)           # (..., n)
    tp = ridge.projections(seg.p)               # (..., n)
    degenerate = np.abs(tp) * eta < DEGENERACY_THRESHOLD * (1.0 + np.abs(t0))
    tp_safe = np.where(degenerate, 1.0, tp)
    quotient = (ridge.u(t0 + eta * tp) - ridge.u(t0)) / tp_safe
    midpoint = eta * ridge.du(t0 + 0.5 * eta * tp)
    coeff = np.where(degenerate, midpoint, quotient)
    return (coeff @ ridge.directions) / L


# ---------------------------------------------------------------------------
# Chebyshev-Lagrange provider
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChebyshevPlan:
    """Nodes and integrated-Lagrange weights on ``[0, eta]``.

    ``nodes[i] = (eta/2) * (1 + cos((2i-1) pi / (2 alpha)))`` for
    ``i = 1..alpha`` and ``weights[i]`` is the exact integral of the
    ``i``-th Lagrange basis polynomial over ``[0, eta]``.  The weights
    sum to ``eta``, are all positive for ``alpha <= 12``, and integrate
    every polynomial of degree ``<= alpha - 1`` exactly.
    """

    alpha: int
    eta: float
    nodes: np.ndarray
    weights: np.ndarray


def build_chebyshev_plan(alpha: int, eta: float) -> ChebyshevPlan:
    """Build the interpolation plan for ``alpha`` Chebyshev nodes.

    The weights are computed on the reference interval ``[-1, 1]`` by
    exact polynomial arithmetic: the full node polynomial is deflated by
    each root (synthetic division) to get the Lagrange numerator, the
    denominator is its value at the node, and the integral picks up only
    even powers.  Everything is then scaled to ``[0, eta]``.

    Parameters
    ----------
    alpha : int
        Node count, between 2 and 12 (positivity of the weights is
        asserted in this range only).
    eta : float
        Interval length, positive.

    Returns
    -------
    ChebyshevPlan
    """
    if not isinstance(alpha, (int, np.integer)) or isinstance(alpha, bool):
        raise ArgumentError(f"alpha must be an integer, got {alpha!r}")
    if not 2 <= alpha <= 12:
        raise ArgumentError(f"alpha must be in [2, 12], got {alpha}")
    if not (eta > 0 and math.isfinite(eta)):
        raise ArgumentError(f"eta must be positive, got {eta!r}")

    i = np.arange(1, alpha + 1)
    ref_nodes = np.cos((2 * i - 1) * np.pi / (2 * alpha))      # in (-1, 1)
    full = np.polynomial.polynomial.polyfromroots(ref_nodes)

    ref_weights = np.empty(alpha)
    for k, c in enumerate(ref_nodes):
        numer, _ = np.polynomial.polynomial.polydiv(full, [-c, 1.0])
        denom = np.polynomial.polynomial.polyval(c, numer)
        # integral over [-1, 1]: odd powers cancel, even power m gives 2/(m+1)
        integral = 2.0 * np.sum(numer[0::2] / np.arange(1, len(numer) + 1, 2))
        ref_weights[k] = integral / denom

    nodes = 0.5 * eta * (1.0 + ref_nodes)
    weights = 0.5 * eta * ref_weights
    return ChebyshevPlan(alpha=int(alpha), eta=float(eta),
                         nodes=nodes, weights=weights)


def delta_u_chebyshev(pot: Potential, seg: LineSegment,
                      plan: ChebyshevPlan) -> np.ndarray:
    """Interpolated ``(1/L)``-normalized line-integrated gradient.

    Returns ``(1/L) * sum_i w_i * grad U(theta + s_i p)`` -- the exact
    integral of the degree ``alpha - 1`` Lagrange interpolant of the
    gradient along the segment.  Uses exactly ``alpha`` gradient
    evaluations (one batched evaluation when ``theta`` carries batch
    axes).

    Parameters
    ----------
    pot : Potential
        Any potential with a gradient.
    seg : LineSegment
        Must satisfy ``seg.eta == plan.eta``.
    plan : ChebyshevPlan
    """
    if seg.eta != plan.eta:
        raise ArgumentError(
            f"plan was built for eta={plan.eta!r}, segment has {seg.eta!r}")
    # (..., alpha, d) stack of the alpha interpolation points
    points = (seg.theta[..., None, :]
              + plan.nodes[:, None] * seg.p[..., None, :])
    grads = pot.gradient(points)
    return np.tensordot(grads, plan.weights,
                        axes=([-2], [0])) / pot.bounds.L


def interpolation_error_bound(alpha: int, eta: float,
                              sup_deriv: float) -> float:
    """Sup-norm error bound of Chebyshev interpolation on ``[0, eta]``.

    For a function whose ``alpha``-th derivative along the segment is
    bounded by ``sup_deriv``, the interpolant at ``alpha`` Chebyshev
    nodes deviates by at most::

        eta**alpha / (2**(alpha-1) * alpha!) * sup_deriv

    in sup norm.  (The integrated-gradient error gains one more factor
    of ``eta`` from integrating over the segment.)
    """
    if not isinstance(alpha, (int, np.integer)) or isinstance(alpha, bool):
        raise ArgumentError(f"alpha must be an integer, got {alpha!r}")
    if alpha < 1:
        raise ArgumentError(f"alpha must be >= 1, got {alpha}")
    if not (eta > 0):
        raise ArgumentError(f"eta must be positive, got {eta!r}")
    if not (sup_deriv >= 0):
        raise ArgumentError(f"sup_deriv must be >= 0, got {sup_deriv!r}")
    return eta ** alpha / (2.0 ** (alpha - 1) * math.factorial(alpha)) \
        * sup_deriv


# ---------------------------------------------------------------------------
# provider objects used by the sampler
# ---------------------------------------------------------------------------

class ExactRidgeProvider:
    """Per-step ``Delta`` via :func:`delta_u_ridge` at fixed ``eta``.

    One pass over the ridge components per step; counted as a single
    gradient-work unit in run reports.
    """

    gradient_evals_per_step = 1

    def __init__(self, pot: Potential, eta: float):
        if not isinstance(pot, QuadraticPotential) and pot.ridge is None:
            raise ArgumentError(
                "exact mode requires a quadratic or ridge-separable potential")
        self.pot = pot
        self.eta = float(eta)
        self.L = pot.bounds.L

    def delta(self, theta: np.ndarray, p: np.ndarray) -> np.ndarray:
        return delta_u_ridge(self.pot, LineSegment(theta, p, self.eta))


class ChebyshevProvider:
    """Per-step ``Delta`` via :func:`delta_u_chebyshev` with a fixed plan."""

    def __init__(self, pot: Potential, eta: float, alpha: int):
        self.pot = pot
        self.eta = float(eta)
        self.L = pot.bounds.L
        self.plan = build_chebyshev_plan(alpha, float(eta))
        self.gradient_evals_per_step = int(alpha)

    def delta(self, theta: np.ndarray, p: np.ndarray) -> np.ndarray:
        return delta_u_chebyshev(self.pot, LineSegment(theta, p, self.eta),
                                 self.plan)


def delta_u_provider(pot: Potential, eta: float, mode: str = "exact",
                     alpha: int | None = None):
    """Factory: ``mode`` is ``"exact"`` or ``"chebyshev"`` (needs ``alpha``)."""
    if mode == "exact":
        return ExactRidgeProvider(pot, eta)
    if mode == "chebyshev":
        if alpha is None:
            raise ArgumentError("chebyshev mode requires alpha")
        return ChebyshevProvider(pot, eta, alpha)
    raise ArgumentError(f"unknown delta-u mode {mode!r}")
