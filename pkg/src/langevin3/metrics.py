"""Wasserstein-2 estimation and mixing diagnostics.

Convergence of the chain is measured in the Wasserstein-2 distance.
For Gaussian laws the distance has the Bures closed form
(:func:`w2_gaussian`); for general sample sets a sliced estimate
averages exact one-dimensional couplings over random projections
(:func:`sliced_w2`).  :func:`mixing_curve` turns a multi-chain run into
a per-step distance-to-target curve — the law at step ``k`` is always
estimated across chains (many independent chains, one draw each),
never by pooling a single chain's history — and :func:`mixing_time`
extracts the first step at which the curve drops below a threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError

__all__ = [
    "GaussianSummary",
    "MixingCurve",
    "w2_gaussian",
    "sliced_w2",
    "mixing_curve",
    "mixing_time",
]


# ---------------------------------------------------------------------------
# Gaussian summaries and the Bures closed form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianSummary:
    """First two moments of a distribution: mean vector and covariance.

    The covariance must be symmetric (to 1e-12, relative to its scale)
    and positive semidefinite up to a tiny tolerance: eigenvalues at or
    above ``-1e-10 * trace`` are accepted and clamped to zero where
    square roots are taken.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1:
            raise ArgumentError(f"mean must be a vector, got shape {mean.shape}")
        if cov.shape != (mean.size, mean.size):
            raise ArgumentError(
                f"cov shape {cov.shape} does not match dimension {mean.size}")
        scale = max(1.0, float(np.abs(cov).max()))
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * scale):
            raise ArgumentError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", (cov + cov.T) / 2.0)
        trace = float(np.trace(self.cov))
        floor = -1e-10 * max(trace, 0.0) - 1e-300
        if np.linalg.eigvalsh(self.cov).min() < floor:
            raise ArgumentError("covariance must be positive semidefinite")

    @property
    def dim(self) -> int:
        return self.mean.size

    @classmethod
    def from_samples(cls, samples: np.ndarray) -> "GaussianSummary":
        """Empirical summary of a sample set of shape ``(n, d)``.

        Uses the unbiased (ddof=1) covariance; requires ``n >= 2``.
        """
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2:
            raise ArgumentError(
                f"samples must have shape (n, d), got {samples.shape}")
        if samples.shape[0] < 2:
            raise ArgumentError(
                "need at least 2 samples to estimate a covariance")
        mean = samples.mean(axis=0)
        centered = samples - mean
        cov = centered.T @ centered / (samples.shape[0] - 1)
        return cls(mean=mean, cov=cov)


def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(cov)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def w2_gaussian(a: GaussianSummary, b: GaussianSummary) -> float:
    """Exact Wasserstein-2 distance between two Gaussians.

    ``sqrt(|mu_a - mu_b|^2 + tr(S_a + S_b - 2 (S_a^{1/2} S_b S_a^{1/2})^{1/2}))``.

    Raises
    ------
    ArgumentError
        On dimension mismatch (indefinite covariances are rejected at
        :class:`GaussianSummary` construction).
    """
    if a.dim != b.dim:
        raise ArgumentError(f"dimension mismatch: {a.dim} vs {b.dim}")
    root_a = _psd_sqrt(a.cov)
    inner = root_a @ b.cov @ root_a
    cross_eigs = np.clip(np.linalg.eigvalsh((inner + inner.T) / 2.0), 0.0, None)
    mean_part = float(np.sum((a.mean - b.mean) ** 2))
    trace_part = float(np.trace(a.cov) + np.trace(b.cov)
                       - 2.0 * np.sum(np.sqrt(cross_eigs)))
    return math.sqrt(max(mean_part + trace_part, 0.0))


# ---------------------------------------------------------------------------
# sliced empirical Wasserstein-2
# ---------------------------------------------------------------------------

def sliced_w2(xs: np.ndarray, ys: np.ndarray, projections: int = 128,
              rng=None) -> float:
    """Sliced Wasserstein-2 estimate between two sample sets.

    Projects both sets onto random unit directions, computes the exact
    one-dimensional W2 for each direction by sorted-quantile coupling,
    and returns the root of the mean squared distance over directions.
    In one dimension with ``projections=1`` this is the exact empirical
    W2.

    Parameters
    ----------
    xs, ys : (n, d) and (m, d) ndarray
        Non-empty sample sets of equal dimension (counts may differ;
        unequal counts are coupled on a common quantile grid).
    projections : int
        Number of random directions.
    rng : numpy.random.Generator, optional
        Direction source; defaults to a fixed counter-based stream so
        repeated calls are deterministic.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    if xs.size == 0 or ys.size == 0:
        raise ArgumentError("sample sets must be non-empty")
    if xs.shape[1] != ys.shape[1]:
        raise ArgumentError(
            f"dimension mismatch: {xs.shape[1]} vs {ys.shape[1]}")
    if projections < 1:
        raise ArgumentError(f"projections must be >= 1, got {projections}")
    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=[2718, 0]))
    d = xs.shape[1]
    dirs = rng.standard_normal((projections, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    px = np.sort(xs @ dirs.T, axis=0)          # (n, P)
    py = np.sort(ys @ dirs.T, axis=0)          # (m, P)
    if px.shape[0] == py.shape[0]:
        sq = np.mean((px - py) ** 2, axis=0)
    else:
        grid = (np.arange(max(px.shape[0], py.shape[0])) + 0.5) \
            / max(px.shape[0], py.shape[0])
        qx = np.quantile(px, grid, axis=0)
        qy = np.quantile(py, grid, axis=0)
        sq = np.mean((qx - qy) ** 2, axis=0)
    return math.sqrt(float(np.mean(sq)))


# ---------------------------------------------------------------------------
# mixing curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MixingCurve:
    """Per-step Wasserstein-2 distance to the target.

    ``points`` pairs each recorded step with its distance estimate and
    a bootstrap standard error; steps are strictly increasing.
    """

    steps: np.ndarray
    values: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        steps = np.asarray(self.steps, dtype=int)
        values = np.asarray(self.values, dtype=float)
        stderr = np.asarray(self.stderr, dtype=float)
        if not (steps.shape == values.shape == stderr.shape) or steps.ndim != 1:
            raise ArgumentError("steps, values, stderr must be equal-length vectors")
        if steps.size and np.any(np.diff(steps) <= 0):
            raise ArgumentError("steps must be strictly increasing")
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "stderr", stderr)

    @property
    def points(self):
        return list(zip(self.steps.tolist(), self.values.tolist(),
                        self.stderr.tolist()))

    def __len__(self) -> int:
        return self.steps.size


def _snapshots_for_target(run, target_dim: int) -> np.ndarray:
    """Recorded snapshots matching the target dimension.

    A target of dimension d selects the position marginal; a target of
    dimension 3d selects the full augmented state (requires a run with
    ``record_full_state``).
    """
    d = run.theta.shape[2]
    if target_dim == d:
        return run.theta
    if target_dim == 3 * d:
        if run.p is None or run.r is None:
            raise ArgumentError(
                "full-state target needs a run recorded with record_full_state")
        return np.concatenate([run.theta, run.p, run.r], axis=2)
    raise ArgumentError(
        f"target dimension {target_dim} matches neither the position "
        f"marginal ({d}) nor the full state ({3 * d})")


def mixing_curve(run, target: GaussianSummary, window: int = 1,
                 bootstrap: int = 64) -> MixingCurve:
    """Distance-to-target at every recorded step of a multi-chain run.

    At each recorded step the law of the chain is summarized across
    chains (one draw per chain) and compared to the Gaussian target
    with :func:`w2_gaussian`; along-chain samples are never pooled into
    a single-step estimate.  ``window > 1`` applies a trailing moving
    average over that many recorded points, which steadies plateau
    read-offs without mixing laws at different steps into one moment
    estimate.  Standard errors come from a bootstrap over chains with a
    fixed internal stream (results are deterministic).

    Parameters
    ----------
    run : RunReport
        Output of :func:`langevin3.sampler.run_chain`; needs >= 2 chains.
    target : GaussianSummary
        Stationary law: position marginal (dim d) or full state (3d).
    window : int
        Trailing moving-average width in recorded points (1 = raw).
    bootstrap : int
        Bootstrap resamples per point for the standard error (0 skips
        the bootstrap and reports zero standard errors).

    Raises
    ------
    ArgumentError
        If the run has fewer than two chains, the target dimension
        matches neither marginal, or ``window < 1``.
    """
    if window < 1:
        raise ArgumentError(f"window must be >= 1, got {window}")
    if bootstrap < 0:
        raise ArgumentError(f"bootstrap must be >= 0, got {bootstrap}")
    snaps = _snapshots_for_target(run, target.dim)
    n_rec, chains, _ = snaps.shape
    if chains < 2:
        raise ArgumentError(
            f"need at least 2 chains to estimate a covariance, got {chains}")

    values = np.empty(n_rec)
    stderr = np.zeros(n_rec)
    boot_rng = np.random.Generator(np.random.Philox(key=[1123, 0]))
    boot_idx = (boot_rng.integers(0, chains, size=(bootstrap, chains))
                if bootstrap else None)
    for i in range(n_rec):
        values[i] = w2_gaussian(GaussianSummary.from_samples(snaps[i]), target)
        if bootstrap:
            reps = np.empty(bootstrap)
            for bi in range(bootstrap):
                resampled = snaps[i][boot_idx[bi]]
                reps[bi] = w2_gaussian(
                    GaussianSummary.from_samples(resampled), target)
            stderr[i] = reps.std(ddof=1)

    if window > 1:
        smooth = np.empty_like(values)
        smooth_se = np.empty_like(stderr)
        for i in range(n_rec):
            lo = max(0, i - window + 1)
            smooth[i] = values[lo:i + 1].mean()
            smooth_se[i] = math.sqrt(float(np.mean(stderr[lo:i + 1] ** 2))
                                     / (i + 1 - lo))
        values, stderr = smooth, smooth_se

    return MixingCurve(steps=run.record_steps.copy(), values=values,
                       stderr=stderr)


def mixing_time(curve: MixingCurve, eps: float):
    """First recorded step with distance estimate <= eps, else None."""
    if not eps > 0:
        raise ArgumentError(f"eps must be positive, got {eps!r}")
    hits = np.nonzero(curve.values <= eps)[0]
    if hits.size == 0:
        return None
    return int(curve.steps[hits[0]])
