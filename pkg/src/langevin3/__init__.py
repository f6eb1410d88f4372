"""Third-order Langevin sampling for smooth, strongly log-concave targets.

The augmented dynamics evolve position, velocity, and a driven
acceleration-like block ``(theta, p, r)``; Brownian noise enters only
the last block, which makes position trajectories twice continuously
differentiable and cuts the discretization bias of the resulting
sampler to second order in the step size.  The one-step transition is
Gaussian with closed-form coefficients once a single line-integrated
gradient is supplied — exactly for ridge-separable potentials, or
through Chebyshev interpolation for smooth ones.

Layout:

- :mod:`langevin3.model` — target potentials and their interface;
- :mod:`langevin3.kernel_coeffs` — transition-kernel coefficients,
  numerically stable in the stiff small-step regime;
- :mod:`langevin3.delta_u` — line-integrated gradient providers;
- :mod:`langevin3.sampler` — the chain driver plus first- and
  second-order baselines and step-size heuristics;
- :mod:`langevin3.analysis` — Lyapunov/contraction certificates;
- :mod:`langevin3.metrics` — Wasserstein-2 estimation and mixing times;
- :mod:`langevin3.reference` — continuous-time oracles for validation;
- :mod:`langevin3.cli` — the ``langevin3`` command-line tool.
"""

from .analysis import (CONTRACTION_RATE_TIME, ContractionReport,
                       CubicCertificateReport, GFunctions,
                       GInequalityReport, LyapunovMatrix,
                       check_cubic_certificate,
                       check_gfunction_inequalities, contraction_test,
                       drift_eigenvalues_closed_form, drift_matrix,
                       drift_max_eigenvalue, g_functions, s_matrix, s_norm)
from .delta_u import (ChebyshevPlan, LineSegment, build_chebyshev_plan,
                      delta_u_chebyshev, delta_u_provider, delta_u_ridge,
                      interpolation_error_bound)
from .errors import (ArgumentError, ConvergenceError, Langevin3Error,
                     NumericalError)
from .kernel_coeffs import (DynamicsParams, MeanCoeffs, NoiseCoeffs,
                            NoiseFactor, factor_noise, mean_coeffs,
                            noise_coeffs, noise_coeffs_naive,
                            quadrature_oracle)
from .metrics import (GaussianSummary, MixingCurve, mixing_curve,
                      mixing_time, sliced_w2, w2_gaussian)
from .model import (BlackBoxPotential, ConvexSmoothBounds,
                    LogisticRegressionPotential, MinimizeResult, Potential,
                    QuadraticPotential, RidgeComponent, RidgeData,
                    RidgeSeparablePotential, SandwichReport, minimize,
                    probe_pairs, sandwich_check)
from .reference import (LinearModeTransition, coupled_fine_pair,
                        discrete_mode_map, discrete_stationary_cov,
                        exact_transition, fine_euler)
from .sampler import (ChainState, RunReport, SamplerConfig, StepSchedule,
                      init_state, run_chain, step, step_size_exact,
                      step_size_interpolated, ula_step, underdamped_step)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "Langevin3Error", "ArgumentError", "NumericalError", "ConvergenceError",
    # model
    "ConvexSmoothBounds", "RidgeComponent", "RidgeData", "Potential",
    "QuadraticPotential", "LogisticRegressionPotential",
    "RidgeSeparablePotential", "BlackBoxPotential", "MinimizeResult",
    "minimize", "SandwichReport", "probe_pairs", "sandwich_check",
    # kernel coefficients
    "DynamicsParams", "MeanCoeffs", "NoiseCoeffs", "NoiseFactor",
    "mean_coeffs", "noise_coeffs", "noise_coeffs_naive", "factor_noise",
    "quadrature_oracle",
    # line-integrated gradients
    "LineSegment", "ChebyshevPlan", "build_chebyshev_plan",
    "delta_u_chebyshev", "delta_u_ridge", "delta_u_provider",
    "interpolation_error_bound",
    # sampler
    "ChainState", "SamplerConfig", "RunReport", "StepSchedule",
    "init_state", "step", "run_chain", "ula_step", "underdamped_step",
    "step_size_exact", "step_size_interpolated",
    # analysis
    "CONTRACTION_RATE_TIME", "ContractionReport", "CubicCertificateReport",
    "GFunctions", "GInequalityReport", "LyapunovMatrix",
    "s_matrix", "s_norm", "drift_matrix",
    "drift_max_eigenvalue", "drift_eigenvalues_closed_form", "g_functions",
    "check_gfunction_inequalities", "check_cubic_certificate",
    "contraction_test",
    # metrics
    "GaussianSummary", "MixingCurve", "w2_gaussian", "sliced_w2",
    "mixing_curve", "mixing_time",
    # reference oracles
    "LinearModeTransition", "exact_transition", "discrete_mode_map",
    "discrete_stationary_cov", "fine_euler", "coupled_fine_pair",
]
