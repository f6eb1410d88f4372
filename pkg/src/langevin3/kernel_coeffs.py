"""Transition-kernel coefficients of the third-order Langevin step.

One step of length ``eta`` of the discretized third-order dynamics is a
Gaussian kernel on the augmented state ``x = (theta, p, r)``.  Its mean
is linear in the state plus a line-integrated gradient term, and its
covariance is ``(1/L) * [s_ij] (x) I_d``; the seven mean coefficients
``mu12 ... mu33`` and six covariance entries ``s11 ... s33`` depend only
on ``(gamma, xi, eta)`` and are available in closed form as polynomials
in ``z = xi*eta`` combined with ``exp(-z)`` and ``exp(-2z)``.

The closed forms cancel catastrophically as ``z -> 0``: ``s11``'s five
terms conspire to leave a residue of order ``z^5`` (the true value is
``gamma^2*xi*eta^5/10 + O(eta^6)``), so direct double-precision
evaluation below ``z ~ 1e-2`` returns pure round-off.  Every
coefficient here is therefore evaluated through :class:`_ExpPoly`,
which switches to an exact-rational Taylor series below ``z = 0.05``
and to well-conditioned grouped evaluation above.  The deliberately
naive transcriptions are kept in :func:`noise_coeffs_naive` as a
regression foil.

Because the closed forms are long and easy to mistype, the module also
ships :func:`quadrature_oracle`, an independent recomputation of all
thirteen coefficients by composite Gauss-Legendre quadrature of the
defining stage integrals (means) and Ito-isometry integrals
(covariances).  The oracle shares no code with the closed forms and is
the arbiter in the verification suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ArgumentError, NumericalError

__all__ = [
    "DynamicsParams",
    "MeanCoeffs",
    "NoiseCoeffs",
    "NoiseFactor",
    "mean_coeffs",
    "noise_coeffs",
    "noise_coeffs_naive",
    "factor_noise",
    "quadrature_oracle",
    "SERIES_SWITCH",
]

# Below this value of z = xi*eta the closed forms are evaluated by
# truncated Taylor series; above it direct grouped evaluation is
# well conditioned.  Calibrated against an extended-precision oracle:
# at the switch point both branches agree to better than 1e-10 relative
# on every coefficient, and the series truncation error is < 1e-13.
SERIES_SWITCH = 0.05

_SERIES_ORDER = 30


# ---------------------------------------------------------------------------
# parameter/value types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DynamicsParams:
    """Parameters of the third-order dynamics and its discretization.

    Attributes
    ----------
    gamma : float
        Coupling rate between the momentum ``p`` and the auxiliary
        variable ``r`` (dimensionless rate).
    xi : float
        Friction acting on ``r`` (dimensionless rate).
    eta : float
        Step size (time units); zero is allowed and yields the identity
        kernel.
    L : float
        Smoothness constant of the target; sets the global ``1/L``
        noise scale (the stationary ``p`` and ``r`` variances are
        ``1/L`` per coordinate).
    """

    gamma: float
    xi: float
    eta: float
    L: float = 1.0

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ArgumentError(f"gamma must be positive, got {self.gamma!r}")
        if not (self.xi > 0 and math.isfinite(self.xi)):
            raise ArgumentError(f"xi must be positive, got {self.xi!r}")
        if not (self.eta >= 0 and math.isfinite(self.eta)):
            raise ArgumentError(f"eta must be >= 0, got {self.eta!r}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ArgumentError(f"L must be positive, got {self.L!r}")

    @classmethod
    def for_condition_number(cls, kappa: float, eta: float, L: float = 1.0):
        """Standard binding ``gamma = kappa`` and ``xi = 2*kappa``."""
        if kappa < 1:
            raise ArgumentError(f"kappa must be >= 1, got {kappa!r}")
        return cls(gamma=float(kappa), xi=2.0 * float(kappa), eta=eta, L=L)

    @property
    def z(self) -> float:
        """Dimensionless step ``xi * eta``."""
        return self.xi * self.eta


@dataclass(frozen=True)
class MeanCoeffs:
    """Mean-map coefficients of the one-step kernel.

    The mean of the next state, given ``x = (theta, p, r)`` and the
    line-integrated gradient ``Delta = (1/L) * integral of grad U along
    theta + t p for t in [0, eta]``, is (coordinatewise over ``d``)::

        theta' = theta - (eta/2) * Delta + mu12 * p + mu13 * r
        p'     =       -          Delta + mu22 * p + mu23 * r
        r'     =          mu31 *  Delta + mu32 * p + mu33 * r

    The gradient-row weights ``(-eta/2, -1, mu31)`` are fixed by the
    construction and exposed via :meth:`du_weights`.
    """

    mu12: float
    mu13: float
    mu22: float
    mu23: float
    mu31: float
    mu32: float
    mu33: float
    eta: float

    def state_matrix(self) -> np.ndarray:
        """Homogeneous part: 3x3 matrix acting on ``(theta, p, r)``."""
        return np.array([
            [1.0, self.mu12, self.mu13],
            [0.0, self.mu22, self.mu23],
            [0.0, self.mu32, self.mu33],
        ])

    def du_weights(self) -> np.ndarray:
        """Weights of ``Delta`` in the (theta, p, r) rows."""
        return np.array([-0.5 * self.eta, -1.0, self.mu31])

    @classmethod
    def identity(cls, eta: float = 0.0) -> "MeanCoeffs":
        return cls(mu12=0.0, mu13=0.0, mu22=1.0, mu23=0.0,
                   mu31=0.0, mu32=0.0, mu33=1.0, eta=eta)


@dataclass(frozen=True)
class NoiseCoeffs:
    """Dimensionless one-step noise covariance ``[s_ij]``.

    The physical covariance of the kernel is ``(1/L) * [s_ij] (x) I_d``:
    the same 3x3 matrix acts independently on every coordinate triplet
    ``(theta_j, p_j, r_j)``.
    """

    s11: float
    s12: float
    s13: float
    s22: float
    s23: float
    s33: float

    def matrix(self) -> np.ndarray:
        """The symmetric 3x3 matrix ``[s_ij]``."""
        return np.array([
            [self.s11, self.s12, self.s13],
            [self.s12, self.s22, self.s23],
            [self.s13, self.s23, self.s33],
        ])

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix())[0])


@dataclass(frozen=True)
class NoiseFactor:
    """Lower-triangular factor ``g`` with ``g @ g.T == [s_ij]``."""

    g: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "g", np.asarray(self.g, dtype=float))


# ---------------------------------------------------------------------------
# stable evaluation of  sum_j P_j(z) * exp(-a_j z)
# ---------------------------------------------------------------------------

class _ExpPoly:
    """A function ``F(z) = z^{-shift} * sum_j P_j(z) e^{-a_j z}`` evaluated stably.

    ``terms`` maps the decay rate ``a`` (a small non-negative integer)
    to the coefficients of ``P_a`` as ``{power: Fraction}``.  The
    constructor derives the exact Taylor series of the sum; evaluation
    uses the series below :data:`SERIES_SWITCH` (where the closed form
    cancels catastrophically) and direct evaluation above.
    """

    def __init__(self, terms: dict, shift: int = 0):
        self.shift = shift
        # Exact Taylor coefficients of sum_j P_j(z) e^{-a_j z}:
        # c_n = sum_j sum_m p_{j,m} * (-a_j)^{n-m} / (n-m)!
        coeffs = []
        for n in range(_SERIES_ORDER + 1):
            c = Fraction(0)
            for a, poly in terms.items():
                for m, p in poly.items():
                    if m <= n:
                        c += Fraction(p) * Fraction((-a) ** (n - m),
                                                    math.factorial(n - m))
            coeffs.append(c)
        if any(coeffs[n] != 0 for n in range(shift)):
            raise AssertionError("_ExpPoly: series does not vanish to 'shift' order")
        self._series = np.array([float(c) for c in coeffs[shift:]])
        self._direct = [
            (float(a), np.array([float(poly.get(m, 0))
                                 for m in range(max(poly) + 1)]))
            for a, poly in terms.items()
        ]

    def __call__(self, z: float) -> float:
        if z < SERIES_SWITCH:
            acc = 0.0
            for c in self._series[::-1]:
                acc = acc * z + c
            return acc
        acc = 0.0
        for a, poly in self._direct:
            val = 0.0
            for c in poly[::-1]:
                val = val * z + c
            acc += val * math.exp(-a * z)
        if self.shift:
            acc /= z ** self.shift
        return acc


_F = Fraction

# phi2(z) = z - 1 + e^{-z}  =  z^2/2 - z^3/6 + ...      (mu13, mu31, s12)
_PHI2 = _ExpPoly({0: {0: -1, 1: 1}, 1: {0: 1}})
_PHI2_OVER_Z = _ExpPoly({0: {0: -1, 1: 1}, 1: {0: 1}}, shift=1)

# mu12 residue: e^{-z} - 1 + z - z^2/2  =  -z^3/6 + ...
_F_MU12 = _ExpPoly({0: {0: -1, 1: 1, 2: -_F(1, 2)}, 1: {0: 1}})
# mu22 residue: 1 - z - e^{-z}  =  -z^2/2 + ...
_F_MU22 = _ExpPoly({0: {0: 1, 1: -1}, 1: {0: -1}})
# 1 - e^{-z}                                            (mu23, mu32)
_F_ONE_MINUS_E = _ExpPoly({0: {0: 1}, 1: {0: -1}})
# mu32 residue: z - 2 + (z + 2) e^{-z}  =  z^3/6 - ...
_F_MU32 = _ExpPoly({0: {0: -2, 1: 1}, 1: {0: 2, 1: 1}})
# mu33 residue: (z + 1) e^{-z} - 1  =  -z^2/2 + ...
_F_MU33 = _ExpPoly({0: {0: -1}, 1: {0: 1, 1: 1}})

# s11: 1 + 2z - 2z^2 + (2/3)z^3 - 4z e^{-z} - e^{-2z}  =  z^5/10 - ...
_F_S11 = _ExpPoly({0: {0: 1, 1: 2, 2: -2, 3: _F(2, 3)},
                   1: {1: -4},
                   2: {0: -1}})
# s22: 2z - 3 + 4 e^{-z} - e^{-2z}  =  (2/3)z^3 - ...
_F_S22 = _ExpPoly({0: {0: -3, 1: 2}, 1: {0: 4}, 2: {0: -1}})
# s13, gamma^3 part: (3/2) + 2z - z^2 - (4z + 2z^2) e^{-z} - ((3/2) + z) e^{-2z}
_F_S13A = _ExpPoly({0: {0: _F(3, 2), 1: 2, 2: -1},
                    1: {1: -4, 2: -2},
                    2: {0: -_F(3, 2), 1: -1}})
# s13, gamma part: 1 - 2z e^{-z} - e^{-2z}  =  z^3/3 - ...
_F_S13B = _ExpPoly({0: {0: 1}, 1: {1: -2}, 2: {0: -1}})
# s23, gamma^3 part: (9/2) - 2z - (6 + 2z) e^{-z} + ((3/2) + z) e^{-2z}
_F_S23A = _ExpPoly({0: {0: _F(9, 2), 1: -2},
                    1: {0: -6, 1: -2},
                    2: {0: _F(3, 2), 1: 1}})
# s23, gamma part: (1 - e^{-z})^2
_F_S23B = _ExpPoly({0: {0: 1}, 1: {0: -2}, 2: {0: 1}})
# s33, gamma^4 part: -(11/2) + 2z + (8 + 4z) e^{-z} - ((5/2) + 3z + z^2) e^{-2z}
_F_S33A = _ExpPoly({0: {0: -_F(11, 2), 1: 2},
                    1: {0: 8, 1: 4},
                    2: {0: -_F(5, 2), 1: -3, 2: -1}})
# s33, gamma^2 part: -1 + 4 e^{-z} - (3 + 2z) e^{-2z}
_F_S33B = _ExpPoly({0: {0: -1}, 1: {0: 4}, 2: {0: -3, 1: -2}})
# s33, friction part: 1 - e^{-2z}  =  2z - ...
_F_S33C = _ExpPoly({0: {0: 1}, 2: {0: -1}})


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def mean_coeffs(params: DynamicsParams) -> MeanCoeffs:
    """Closed-form mean coefficients, safe down to ``eta = 0``.

    Each coefficient is a rational prefactor in ``(gamma, xi, eta)``
    times an exponential-polynomial residue in ``z = xi*eta`` evaluated
    by :class:`_ExpPoly`.
    """
    g, xi, eta = params.gamma, params.xi, params.eta
    z = params.z
    return MeanCoeffs(
        mu12=eta + (g ** 2 / xi ** 3) * _F_MU12(z),
        mu13=(g / xi ** 2) * _PHI2(z),
        mu22=1.0 + (g ** 2 / xi ** 2) * _F_MU22(z),
        mu23=(g / xi) * _F_ONE_MINUS_E(z),
        mu31=(g / xi) * _PHI2_OVER_Z(z),
        mu32=(g ** 3 / xi ** 3) * _F_MU32(z) - (g / xi) * _F_ONE_MINUS_E(z),
        mu33=math.exp(-z) + (g ** 2 / xi ** 2) * _F_MU33(z),
        eta=eta,
    )


@lru_cache(maxsize=None)
def noise_coeffs(params: DynamicsParams) -> NoiseCoeffs:
    """Closed-form dimensionless covariance entries, cancellation-safe."""
    g, xi = params.gamma, params.xi
    z = params.z
    g2, g3, g4 = g ** 2, g ** 3, g ** 4
    return NoiseCoeffs(
        s11=(g2 / xi ** 4) * _F_S11(z),
        s12=(g2 / xi ** 3) * _PHI2(z) ** 2,
        s13=(g3 / xi ** 4) * _F_S13A(z) + (g / xi ** 2) * _F_S13B(z),
        s22=(g2 / xi ** 2) * _F_S22(z),
        s23=(g3 / xi ** 3) * _F_S23A(z) + (g / xi) * _F_S23B(z),
        s33=(g4 / xi ** 4) * _F_S33A(z) + (g2 / xi ** 2) * _F_S33B(z)
            + _F_S33C(z),
    )


def noise_coeffs_naive(params: DynamicsParams) -> NoiseCoeffs:
    """Term-by-term transcription of the covariance formulas.

    Kept as a regression foil: below ``z ~ 1e-2`` the terms cancel and
    the result is round-off noise (``s11`` loses all significant digits
    near ``z = 1e-3``).  Use :func:`noise_coeffs` for real work.
    """
    g, xi, eta = params.gamma, params.xi, params.eta
    g2, g3, g4 = g ** 2, g ** 3, g ** 4
    E = math.exp(-xi * eta)
    E2 = math.exp(-2.0 * xi * eta)
    s11 = (2 * g2 / xi ** 3) * eta - (2 * g2 / xi ** 2) * eta ** 2 \
        + (2 * g2 / (3 * xi)) * eta ** 3 - (4 * g2 / xi ** 3) * eta * E \
        + (g2 / xi ** 4) * (1 - E2)
    s12 = (g2 / xi ** 3) * (xi * eta - (1 - E)) ** 2
    s13 = -(g3 / xi ** 2) * eta ** 2 * (2 * E + 1) \
        + (2 * g3 / xi ** 3 - (g3 / xi ** 3) * E2 - (4 * g3 / xi ** 3) * E
           - (2 * g / xi) * E) * eta \
        + ((3 * g3 / (2 * xi ** 4)) + (g / xi ** 2)) * (1 - E2)
    s22 = (2 * g2 / xi) * eta - (4 * g2 / xi ** 2) * (1 - E) \
        + (g2 / xi ** 2) * (1 - E2)
    s23 = (g3 / xi ** 2) * (E2 - 2 * E - 2) * eta \
        + (3 * g3 / (2 * xi ** 3)) * (E2 - 4 * E + 3) \
        + (g / xi) * (1 - E) ** 2
    s33 = -(g4 / xi ** 2) * eta ** 2 * E2 \
        + (-(2 * g2 / xi) * E2 + (g4 / xi ** 3) * (-3 * E2 + 4 * E + 2)) * eta \
        + (g4 / (2 * xi ** 4)) * (-5 * E2 + 16 * E - 11) \
        + (g2 / xi ** 2) * (-3 * E2 + 4 * E - 1) \
        + (1 - E2)
    return NoiseCoeffs(s11=s11, s12=s12, s13=s13, s22=s22, s23=s23, s33=s33)


# ---------------------------------------------------------------------------
# Cholesky factor with PSD clamping
# ---------------------------------------------------------------------------

def factor_noise(nc) -> NoiseFactor:
    """Lower-triangular factor of the 3x3 noise covariance.

    Eigenvalues in ``[-1e-14 * trace, 0)`` are treated as round-off and
    clamped to zero before factoring; anything more negative raises
    :class:`NumericalError`, since it indicates a bug in the coefficient
    evaluation rather than round-off.  The factor reconstructs the
    (clamped) input to 1e-12 relative Frobenius error.

    Parameters
    ----------
    nc : NoiseCoeffs or (3, 3) array_like
        Symmetric covariance block.

    Returns
    -------
    NoiseFactor
    """
    S = nc.matrix() if isinstance(nc, NoiseCoeffs) else np.asarray(nc, dtype=float)
    if S.shape != (3, 3):
        raise ArgumentError("noise covariance must be 3x3")
    if not np.allclose(S, S.T, rtol=0.0, atol=1e-13 * max(np.abs(S).max(), 1e-300)):
        raise ArgumentError("noise covariance must be symmetric")
    trace = float(np.trace(S))
    if trace == 0.0 and not S.any():
        return NoiseFactor(g=np.zeros((3, 3)))

    w, V = np.linalg.eigh(S)
    if w[0] < -1e-14 * trace:
        raise NumericalError(
            f"noise covariance has eigenvalue {w[0]:.3e}, beyond the "
            f"round-off clamp threshold {-1e-14 * trace:.3e}; "
            "the coefficients are inconsistent")
    if w[0] < 0.0:
        S = (V * np.clip(w, 0.0, None)) @ V.T
        S = 0.5 * (S + S.T)

    # Factor the correlation matrix rather than S itself: in the stiff
    # regime the diagonal spans many orders of magnitude (s11 ~ z^5 while
    # s33 ~ z), and any pivot floor set from trace(S) would wrongly zero
    # the small-but-healthy leading pivots.  Scaling to unit diagonal
    # makes the floor scale-free.
    diag = np.sqrt(np.diag(S).clip(min=0.0))
    scale = np.where(diag > 0.0, diag, 1.0)
    C = S / np.outer(scale, scale)

    # Semidefinite 3x3 Cholesky: a pivot at round-off scale means the
    # column lies in the span of earlier ones and is zeroed exactly.
    g = np.zeros((3, 3))
    pivot_floor = 3e-14
    for j in range(3):
        if diag[j] == 0.0:
            continue
        d = C[j, j] - g[j, :j] @ g[j, :j]
        if d > pivot_floor:
            g[j, j] = math.sqrt(d)
            for i in range(j + 1, 3):
                g[i, j] = (C[i, j] - g[i, :j] @ g[j, :j]) / g[j, j]

    err = np.linalg.norm(g @ g.T - C) / max(np.linalg.norm(C), 1e-300)
    if err > 1e-12:
        raise NumericalError(
            f"noise factor reconstruction error {err:.3e} exceeds 1e-12; "
            "the covariance is not numerically PSD")
    return NoiseFactor(g=scale[:, None] * g)


# ---------------------------------------------------------------------------
# independent quadrature oracle
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def quadrature_oracle(params: DynamicsParams, panels: int = 256):
    """Recompute all kernel coefficients by numerical quadrature.

    Means are obtained by integrating the three-stage construction of
    the step (Ornstein-Uhlenbeck flow for ``r`` with frozen momentum,
    momentum accumulation, position accumulation, then the ``r``
    re-solve against the updated momentum path), with iterated
    integrals reduced to single ones by swapping the order of
    integration.  Covariances come from the Ito isometry: each entry is
    the integral over the kick time of the product of the two
    coordinates' noise-response kernels.  Composite 8-node
    Gauss-Legendre quadrature over ``panels`` panels makes the result
    exact to machine precision for the panel counts accepted here.

    This function intentionally shares no code with
    :func:`mean_coeffs` / :func:`noise_coeffs`; it exists to arbitrate
    them.

    Parameters
    ----------
    params : DynamicsParams
    panels : int
        Number of quadrature panels; at least 64.

    Returns
    -------
    (MeanCoeffs, NoiseCoeffs)
    """
    if panels < 64:
        raise ArgumentError(f"panels must be >= 64, got {panels}")
    g, xi, eta, L = params.gamma, params.xi, params.eta, params.L
    if eta == 0.0:
        return MeanCoeffs.identity(), NoiseCoeffs(0, 0, 0, 0, 0, 0)

    edges = np.linspace(0.0, eta, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    pts = mid[:, None] + half[:, None] * _GL_NODES        # (panels, 8)
    wts = half[:, None] * _GL_WEIGHTS

    def integrate(values):
        return float(np.sum(values * wts))

    ex = np.exp(-xi * pts)                # e^{-xi t}
    ex_rev = np.exp(-xi * (eta - pts))    # e^{-xi (eta - t)}
    em = -np.expm1(-xi * pts)             # 1 - e^{-xi t}
    em_rev = -np.expm1(-xi * (eta - pts))
    g2 = g ** 2

    mc = MeanCoeffs(
        mu12=eta - (g2 / xi) * integrate((eta - pts) * em),
        mu13=g * integrate((eta - pts) * ex),
        mu22=1.0 - (g2 / xi) * integrate(em),
        mu23=g * integrate(ex),
        mu31=(g / eta) * integrate(pts * ex_rev),
        mu32=-g * integrate(ex_rev) + (g ** 3 / xi ** 2) * integrate(em * em_rev),
        mu33=math.exp(-xi * eta) - (g2 / xi) * integrate(ex_rev * em),
        eta=eta,
    )

    # Noise-response kernels as functions of the remaining time u:
    # a drives theta, b drives p (both scaled by gamma/xi), c drives r.
    a = pts + np.expm1(-xi * pts) / xi
    b = em
    c = ex + (g2 / xi) * (pts * ex + np.expm1(-xi * pts) / xi)
    intensity = 2.0 * xi / L              # physical noise intensity
    scale = intensity * (g / xi) ** 2
    nc = NoiseCoeffs(
        s11=L * scale * integrate(a * a),
        s12=L * scale * integrate(a * b),
        s22=L * scale * integrate(b * b),
        s13=L * intensity * (g / xi) * integrate(a * c),
        s23=L * intensity * (g / xi) * integrate(b * c),
        s33=L * intensity * integrate(c * c),
    )
    return mc, nc
