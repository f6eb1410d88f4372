"""Target potentials with certified convexity and smoothness bounds.

A potential is a twice-differentiable convex function ``U`` on ``R^d``
together with constants ``0 < m <= L`` such that

    m * I  <=  Hessian U(theta)  <=  L * I      for all theta.

Everything downstream (step sizes, kernel coefficients, convergence
rates) is phrased in terms of ``m``, ``L`` and the condition number
``kappa = L / m``, so the bounds are carried explicitly rather than
estimated on the fly.

Four concrete families are provided:

* :class:`QuadraticPotential` -- Gaussian targets, with every moment
  known in closed form; the workhorse for verification.
* :class:`LogisticRegressionPotential` -- ridge-regularised logistic
  regression, the standard non-Gaussian benchmark.
* :class:`RidgeSeparablePotential` -- sums of scalar convex functions of
  one-dimensional projections, ``U(theta) = sum_i u_i(a_i . theta)``;
  this structure admits an exact line-integrated gradient (see
  :mod:`langevin3.delta_u`).
* :class:`BlackBoxPotential` -- anything that can only be queried
  through a gradient callback.

The module also provides :func:`minimize` (accelerated gradient descent
with adaptive restart), used to start chains at the mode, and
:func:`sandwich_check`, a randomized audit that the declared ``(m, L)``
actually bracket the potential's curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ArgumentError, ConvergenceError

__all__ = [
    "ConvexSmoothBounds",
    "Potential",
    "QuadraticPotential",
    "LogisticRegressionPotential",
    "RidgeSeparablePotential",
    "BlackBoxPotential",
    "RidgeComponent",
    "RidgeData",
    "MinimizeResult",
    "SandwichReport",
    "gradient",
    "minimize",
    "probe_pairs",
    "sandwich_check",
]


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvexSmoothBounds:
    """Strong-convexity / smoothness constants ``0 < m <= L``.

    Attributes
    ----------
    m : float
        Strong convexity constant (lower Hessian bound).
    L : float
        Smoothness constant (upper Hessian bound).
    """

    m: float
    L: float

    def __post_init__(self):
        if not (math.isfinite(self.m) and math.isfinite(self.L)):
            raise ArgumentError("bounds must be finite, got "
                                f"m={self.m!r}, L={self.L!r}")
        if not (0.0 < self.m <= self.L):
            raise ArgumentError("bounds must satisfy 0 < m <= L, got "
                                f"m={self.m!r}, L={self.L!r}")

    @property
    def kappa(self) -> float:
        """Condition number ``L / m`` (always >= 1)."""
        return self.L / self.m


# ---------------------------------------------------------------------------
# ridge structure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RidgeComponent:
    """One term ``u(a . theta)`` of a ridge-separable potential.

    ``u`` and ``du`` must accept numpy arrays elementwise (use numpy
    ufuncs inside them); ``direction`` is the projection vector ``a``.
    """

    u: object          # callable t -> u(t), elementwise on arrays
    du: object         # callable t -> u'(t), elementwise on arrays
    direction: np.ndarray


class RidgeData:
    """Vectorized view of a ridge decomposition ``U = sum_i u_i(a_i . theta)``.

    Parameters
    ----------
    directions : (n, d) ndarray
        Projection vectors, one per component, as rows.
    u, du : callable
        Maps taking a ``(..., n)`` array of projections to the per-component
        values / derivatives of the same shape (column ``i`` is fed to the
        ``i``-th scalar function).
    """

    def __init__(self, directions: np.ndarray, u, du):
        self.directions = np.ascontiguousarray(directions, dtype=float)
        if self.directions.ndim != 2:
            raise ArgumentError("ridge directions must be a 2-D array")
        self.u = u
        self.du = du

    @property
    def n_components(self) -> int:
        return self.directions.shape[0]

    def projections(self, theta: np.ndarray) -> np.ndarray:
        """Return ``theta @ directions.T`` with shape ``(..., n)``."""
        return np.asarray(theta, dtype=float) @ self.directions.T


def _columnwise(funcs):
    """Lift a list of elementwise scalar maps to a column-wise map on (..., n)."""

    def apply(t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        for i, f in enumerate(funcs):
            out[..., i] = f(t[..., i])
        return out

    return apply


# ---------------------------------------------------------------------------
# potential base class
# ---------------------------------------------------------------------------

class Potential:
    """Base class: a convex potential with certified curvature bounds.

    Subclasses must set ``dim`` and ``bounds`` and implement
    :meth:`gradient`; :meth:`value` and :attr:`ridge` are optional
    capabilities advertised through ``has_value`` / ``has_ridge``.

    Attributes
    ----------
    dim : int
        Ambient dimension ``d``.
    bounds : ConvexSmoothBounds
        Certified constants ``(m, L)``.
    l_alpha : float or None
        Optional bound on the operator norm of a higher derivative of
        ``U`` (used by the step-size rule for interpolated gradients);
        ``None`` when unknown.
    """

    dim: int
    bounds: ConvexSmoothBounds
    l_alpha: float | None = None

    # -- capabilities ------------------------------------------------------

    @property
    def has_value(self) -> bool:
        return type(self).value is not Potential.value

    @property
    def has_ridge(self) -> bool:
        return self.ridge is not None

    @property
    def ridge(self) -> RidgeData | None:
        """Ridge decomposition, or ``None`` when unavailable."""
        return None

    # -- evaluation --------------------------------------------------------

    def value(self, theta: np.ndarray) -> np.ndarray:
        """Potential value ``U(theta)``; batched over leading axes."""
        raise ArgumentError(
            f"{type(self).__name__} does not expose potential values")

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        """Gradient ``grad U(theta)``, same shape as ``theta``.

        ``theta`` may carry leading batch axes; the gradient is computed
        along the last axis.
        """
        raise NotImplementedError

    # -- helpers -----------------------------------------------------------

    def _check_theta(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] != self.dim:
            raise ArgumentError(
                f"theta has trailing dimension {theta.shape[-1]}, "
                f"expected {self.dim}")
        return theta


# ---------------------------------------------------------------------------
# concrete potentials
# ---------------------------------------------------------------------------

class QuadraticPotential(Potential):
    """Quadratic potential ``U(theta) = 0.5 (theta-c)' A (theta-c)``.

    The matrix ``A`` is given by its eigendecomposition, so the exact
    sampler moments are available per eigendirection.

    Parameters
    ----------
    center : (d,) array_like
        Minimizer ``c``.
    eigenvalues : (d,) array_like
        Eigenvalues of ``A``; all must be positive.
    directions : (d, d) array_like, optional
        Orthonormal eigenvectors as columns.  Identity when omitted
        (diagonal ``A``).
    """

    def __init__(self, center, eigenvalues, directions=None):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.eigenvalues = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
        d = self.center.shape[0]
        if self.eigenvalues.shape != (d,):
            raise ArgumentError("center and eigenvalues must have equal length")
        if np.any(self.eigenvalues <= 0):
            raise ArgumentError("all eigenvalues must be positive")
        if directions is None:
            self.directions = np.eye(d)
        else:
            self.directions = np.asarray(directions, dtype=float)
            if self.directions.shape != (d, d):
                raise ArgumentError("directions must be a (d, d) matrix")
            if not np.allclose(self.directions.T @ self.directions,
                               np.eye(d), atol=1e-10):
                raise ArgumentError("directions must be orthonormal columns")
        self.dim = d
        self.matrix = (self.directions * self.eigenvalues) @ self.directions.T
        self.bounds = ConvexSmoothBounds(float(self.eigenvalues.min()),
                                         float(self.eigenvalues.max()))
        # All derivatives of order >= 3 vanish identically.
        self.l_alpha = 0.0
        self._ridge = None

    def value(self, theta):
        theta = self._check_theta(theta)
        delta = theta - self.center
        return 0.5 * np.einsum("...i,ij,...j->...", delta, self.matrix, delta)

    def gradient(self, theta):
        theta = self._check_theta(theta)
        return (theta - self.center) @ self.matrix

    @property
    def ridge(self) -> RidgeData:
        """Eigendirection ridge form: ``u_i(t) = lam_i/2 (t - v_i.c)^2``."""
        if self._ridge is None:
            dirs = self.directions.T.copy()           # rows are eigenvectors
            offs = dirs @ self.center
            lam = self.eigenvalues

            def u(t):
                return 0.5 * lam * (np.asarray(t, float) - offs) ** 2

            def du(t):
                return lam * (np.asarray(t, float) - offs)

            self._ridge = RidgeData(dirs, u, du)
        return self._ridge


class LogisticRegressionPotential(Potential):
    """Ridge-regularised logistic regression negative log-likelihood.

    ``U(theta) = sum_i log(1 + exp(-y_i x_i . theta)) + ridge/2 ||theta||^2``

    with labels ``y_i in {-1, +1}``.  The certified bounds are
    ``m = ridge`` and ``L = ridge + lambda_max(X'X) / 4`` (each logistic
    term has second derivative at most 1/4); the top eigenvalue is
    obtained by power iteration on ``X'X``.

    Parameters
    ----------
    X : (n, d) array_like
        Feature matrix.
    y : (n,) array_like
        Labels in ``{-1, +1}``.
    ridge : float
        Regularisation strength; must be positive so the potential is
        strongly convex.
    """

    def __init__(self, X, y, ridge):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ArgumentError("X must be (n, d) and y must be (n,)")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ArgumentError("labels must be -1 or +1")
        if ridge <= 0:
            raise ArgumentError("ridge must be positive")
        self.X = X
        self.y = y
        self.ridge_strength = float(ridge)
        self.dim = X.shape[1]
        top = _top_eigenvalue_psd(X.T @ X)
        self.bounds = ConvexSmoothBounds(self.ridge_strength,
                                         self.ridge_strength + 0.25 * top)
        self._ridge_data = None

    def value(self, theta):
        theta = self._check_theta(theta)
        logits = theta @ self.X.T                         # (..., n)
        data = np.logaddexp(0.0, -self.y * logits).sum(axis=-1)
        return data + 0.5 * self.ridge_strength * np.sum(theta ** 2, axis=-1)

    def gradient(self, theta):
        theta = self._check_theta(theta)
        logits = theta @ self.X.T                         # (..., n)
        # d/dt log(1+exp(-y t)) = -y * sigmoid(-y t)
        coeff = -self.y * expit(-self.y * logits)
        return coeff @ self.X + self.ridge_strength * theta

    @property
    def ridge(self) -> RidgeData:
        """Ridge form: n data components plus d quadratic penalty components."""
        if self._ridge_data is None:
            n, d = self.X.shape
            dirs = np.vstack([self.X, np.eye(d)])
            y = self.y
            lam = self.ridge_strength

            def u(t):
                t = np.asarray(t, dtype=float)
                out = np.empty_like(t)
                out[..., :n] = np.logaddexp(0.0, -y * t[..., :n])
                out[..., n:] = 0.5 * lam * t[..., n:] ** 2
                return out

            def du(t):
                t = np.asarray(t, dtype=float)
                out = np.empty_like(t)
                out[..., :n] = -y * expit(-y * t[..., :n])
                out[..., n:] = lam * t[..., n:]
                return out

            self._ridge_data = RidgeData(dirs, u, du)
        return self._ridge_data


class RidgeSeparablePotential(Potential):
    """Sum of scalar convex functions of projections.

    ``U(theta) = sum_i u_i(a_i . theta)`` for user-supplied components.
    The scalar maps must be numpy-elementwise (built from ufuncs), and
    the curvature bounds are supplied by the caller; use
    :func:`sandwich_check` to audit them.

    Parameters
    ----------
    components : sequence of RidgeComponent
        The terms ``(u_i, u_i', a_i)``.
    dim : int
        Ambient dimension (each direction must have this length).
    bounds : ConvexSmoothBounds
        Declared curvature bounds of the sum.
    l_alpha : float, optional
        Higher-order smoothness constant, when known.
    """

    def __init__(self, components, dim, bounds, l_alpha=None):
        components = list(components)
        if not components:
            raise ArgumentError("at least one ridge component is required")
        dirs = np.vstack([np.asarray(c.direction, dtype=float) for c in components])
        if dirs.shape != (len(components), dim):
            raise ArgumentError(
                f"every direction must have length dim={dim}")
        self.components = components
        self.dim = int(dim)
        self.bounds = bounds
        self.l_alpha = l_alpha
        self._ridge_data = RidgeData(
            dirs,
            _columnwise([c.u for c in components]),
            _columnwise([c.du for c in components]),
        )

    def value(self, theta):
        theta = self._check_theta(theta)
        t = self._ridge_data.projections(theta)
        return self._ridge_data.u(t).sum(axis=-1)

    def gradient(self, theta):
        theta = self._check_theta(theta)
        t = self._ridge_data.projections(theta)
        return self._ridge_data.du(t) @ self._ridge_data.directions

    @property
    def ridge(self) -> RidgeData:
        return self._ridge_data


class BlackBoxPotential(Potential):
    """Potential known only through callbacks.

    Parameters
    ----------
    gradient_fn : callable
        Map ``(d,) -> (d,)``; batches are handled by looping.
    dim : int
        Ambient dimension.
    bounds : ConvexSmoothBounds
        Declared curvature bounds (trusted, not verified here).
    value_fn : callable, optional
        Map ``(d,) -> float``; required only by :func:`sandwich_check`.
    l_alpha : float, optional
        Higher-order smoothness constant, when known.
    """

    def __init__(self, gradient_fn, dim, bounds, value_fn=None, l_alpha=None):
        self.gradient_fn = gradient_fn
        self.value_fn = value_fn
        self.dim = int(dim)
        self.bounds = bounds
        self.l_alpha = l_alpha

    @property
    def has_value(self) -> bool:
        return self.value_fn is not None

    def value(self, theta):
        if self.value_fn is None:
            raise ArgumentError(
                "this black-box potential has no value callback")
        theta = self._check_theta(theta)
        if theta.ndim == 1:
            return float(self.value_fn(theta))
        flat = theta.reshape(-1, self.dim)
        out = np.array([self.value_fn(row) for row in flat])
        return out.reshape(theta.shape[:-1])

    def gradient(self, theta):
        theta = self._check_theta(theta)
        if theta.ndim == 1:
            g = np.asarray(self.gradient_fn(theta), dtype=float)
            if g.shape != theta.shape:
                raise ArgumentError(
                    f"gradient callback returned shape {g.shape}, "
                    f"expected {theta.shape}")
            return g
        flat = theta.reshape(-1, self.dim)
        out = np.stack([np.asarray(self.gradient_fn(row), dtype=float)
                        for row in flat])
        if out.shape != flat.shape:
            raise ArgumentError("gradient callback returned a bad shape")
        return out.reshape(theta.shape)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def gradient(pot: Potential, theta: np.ndarray) -> np.ndarray:
    """Gradient of the potential at ``theta`` (batched over leading axes)."""
    return pot.gradient(theta)


@dataclass
class MinimizeResult:
    """Outcome of :func:`minimize`.

    Attributes
    ----------
    theta : (d,) ndarray
        Approximate minimizer.
    grad_norm : float
        Gradient norm at ``theta`` (guaranteed ``<= m * tol``).
    iterations : int
        Accelerated-gradient iterations performed.
    gradient_evals : int
        Number of gradient evaluations consumed.
    """

    theta: np.ndarray
    grad_norm: float
    iterations: int
    gradient_evals: int


def minimize(pot: Potential, theta0=None, tol: float | None = None,
             max_iter: int = 200_000) -> MinimizeResult:
    """Locate the minimizer by accelerated gradient descent with restarts.

    Runs Nesterov's method with step ``1/L`` and the gradient-based
    adaptive restart rule (reset momentum whenever the gradient forms an
    obtuse angle with the last displacement).  Terminates as soon as the
    returned point satisfies ``||grad U|| <= m * tol``, which bounds the
    distance to the true minimizer by ``tol``.

    Parameters
    ----------
    pot : Potential
        Target potential.
    theta0 : (d,) array_like, optional
        Starting point; origin by default.
    tol : float, optional
        Target accuracy; defaults to ``1 / L``.
    max_iter : int, optional
        Iteration budget; exhausting it raises :class:`ConvergenceError`
        carrying the last iterate and its gradient norm.

    Returns
    -------
    MinimizeResult
    """
    m, L = pot.bounds.m, pot.bounds.L
    if tol is None:
        tol = 1.0 / L
    if tol <= 0:
        raise ArgumentError(f"tol must be positive, got {tol!r}")
    target = m * tol

    if theta0 is None:
        y = np.zeros(pot.dim)
    else:
        y = np.asarray(theta0, dtype=float).copy()
        if y.shape != (pot.dim,):
            raise ArgumentError(f"theta0 must have shape ({pot.dim},)")

    x_prev = y.copy()
    t_momentum = 1.0
    evals = 0
    for k in range(max_iter):
        g = pot.gradient(y)
        evals += 1
        gnorm = float(np.linalg.norm(g))
        if not math.isfinite(gnorm):
            raise ConvergenceError(
                f"gradient became non-finite at iteration {k}",
                last_iterate=y, grad_norm=gnorm)
        if gnorm <= target:
            return MinimizeResult(theta=y, grad_norm=gnorm,
                                  iterations=k, gradient_evals=evals)
        x = y - g / L
        step = x - x_prev
        if float(g @ step) > 0.0:       # momentum points uphill: restart
            t_momentum = 1.0
            y = x
        else:
            t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_momentum ** 2))
            y = x + ((t_momentum - 1.0) / t_next) * step
            t_momentum = t_next
        x_prev = x

    g = pot.gradient(x_prev)
    raise ConvergenceError(
        f"no point with gradient norm <= {target:.3e} within "
        f"{max_iter} iterations (last grad norm {np.linalg.norm(g):.3e})",
        last_iterate=x_prev, grad_norm=float(np.linalg.norm(g)))


@dataclass
class SandwichReport:
    """Outcome of :func:`sandwich_check`.

    Attributes
    ----------
    probes : int
        Number of probe pairs examined.
    violations : int
        Pairs where the curvature sandwich failed beyond tolerance.
    max_violation : float
        Largest relative excursion outside the declared envelope
        (0.0 when every probe passed).
    ok : bool
        True when no probe violated the bounds.
    """

    probes: int
    violations: int
    max_violation: float
    ok: bool


def probe_pairs(pot: Potential, n: int, radius: float | None = None, rng=None):
    """Draw ``n`` probe pairs ``(theta, theta_prime)`` for :func:`sandwich_check`.

    Both endpoints are uniform in a ball around the minimizer; the
    default radius ``10 / sqrt(m)`` (ten standard deviations of the
    flattest target direction) covers the region chains visit at
    stationarity.
    """
    if n < 1:
        raise ArgumentError("need at least one probe pair")
    if rng is None:
        rng = np.random.default_rng(20240901)
    if radius is None:
        radius = 10.0 / math.sqrt(pot.bounds.m)
    center = minimize(pot, tol=1e-7 / pot.bounds.L).theta

    def ball(k):
        z = rng.standard_normal((k, pot.dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        r = radius * rng.random(k) ** (1.0 / pot.dim)
        return center + z * r[:, None]

    return list(zip(ball(n), ball(n)))


def sandwich_check(pot: Potential, probes, rel_tol: float = 1e-8) -> SandwichReport:
    """Audit the declared curvature bounds on probe pairs.

    For each pair ``(theta, theta_prime)`` checks the two-sided bound on
    the Bregman divergence of ``U``:

        m/2 ||theta' - theta||^2
            <=  U(theta') - U(theta) - <grad U(theta), theta' - theta>
            <=  L/2 ||theta' - theta||^2

    up to relative round-off slack ``rel_tol``.  Violations are report
    content, never exceptions.

    Parameters
    ----------
    pot : Potential
        Target with declared bounds; must expose values (black boxes
        without a value callback raise :class:`ArgumentError`).
    probes : int or sequence of (theta, theta_prime)
        Explicit probe pairs, or a count of random pairs to draw in the
        default ball (see :func:`probe_pairs`).
    rel_tol : float, optional
        Slack relative to the upper envelope ``L/2 ||theta'-theta||^2``.

    Returns
    -------
    SandwichReport
    """
    if not pot.has_value:
        raise ArgumentError(
            "sandwich_check requires potential values; this potential "
            "only exposes gradients")
    if isinstance(probes, (int, np.integer)):
        probes = probe_pairs(pot, int(probes))
    pairs = list(probes)
    if not pairs:
        raise ArgumentError("need at least one probe pair")

    a = np.stack([np.asarray(p[0], dtype=float) for p in pairs])
    b = np.stack([np.asarray(p[1], dtype=float) for p in pairs])
    step = b - a
    r2 = np.sum(step ** 2, axis=1)
    bregman = (pot.value(b) - pot.value(a)
               - np.einsum("ij,ij->i", pot.gradient(a), step))
    m, L = pot.bounds.m, pot.bounds.L
    lo, hi = 0.5 * m * r2, 0.5 * L * r2
    scale = np.maximum(hi, 1e-300)
    lower_viol = (lo - bregman) / scale        # > 0 when below envelope
    upper_viol = (bregman - hi) / scale        # > 0 when above envelope
    worst = np.maximum(lower_viol, upper_viol)
    bad = worst > rel_tol
    return SandwichReport(probes=len(pairs), violations=int(bad.sum()),
                          max_violation=float(max(worst.max(), 0.0)),
                          ok=not bad.any())


# ---------------------------------------------------------------------------
# internal helpers
# ---------------------------------------------------------------------------

def _top_eigenvalue_psd(M: np.ndarray, max_iter: int = 1000,
                        rel_tol: float = 1e-13) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    d = M.shape[0]
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = M @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam_new = float(v @ (M @ v))
        if abs(lam_new - lam) <= rel_tol * abs(lam_new):
            return lam_new
        lam = lam_new
    return lam
