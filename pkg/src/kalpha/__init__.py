"""Numerical laboratory for a family of heavy-tailed Levy processes whose
jump magnitudes have logarithmic (log-Pareto) tails.

Simulates their sample paths in overflow-proof log-domain arithmetic and
verifies, at desk scale, the analytic facts that drive their support:
no positive moments, vanishing growth index, and exponential or
power-exponential upper envelopes.
"""

__version__ = "0.1.0"

from .diagnostics import (ExceedanceReport, MomentScan, PruittSlopeReport,
                          build_exceedance_report, envelope_exceedances,
                          growth_scan, moment_scan, pruitt_slope)
from .measure import (ConsistencyError, EnvelopeSpec, KAlphaParams,
                      SupportVerdict, UpperFunctionResult, classify_support,
                      inverse_tail, laplace_exponent, levy_density,
                      log_mag_survival, pruitt_index, solve_crossover,
                      tail_one_sided, truncated_moment,
                      upper_function_integral)
from .numerics import (LN2, QuadratureError, QuadResult, SignedLogValue,
                       SLV_ZERO, SubdivisionLimitError, adaptive_quad,
                       slv_sum)
from .paths import (EventPath, GridPath, JumpEvent, band_rate, band_variance,
                    compose, read_event_path, running_sup,
                    simulate_large_jumps, simulate_many,
                    simulate_small_jumps, write_event_path)
from .spaces import (Bump, ExpPoly, Gaussian, PairingResult, TestFunction,
                     k_norm, kbeta_norm, pair_white_noise,
                     parse_test_function, s_norm)

__all__ = [
    "__version__",
    "LN2", "SignedLogValue", "SLV_ZERO", "QuadResult", "QuadratureError",
    "SubdivisionLimitError", "adaptive_quad", "slv_sum",
    "KAlphaParams", "EnvelopeSpec", "SupportVerdict", "UpperFunctionResult",
    "ConsistencyError", "levy_density", "tail_one_sided", "log_mag_survival",
    "inverse_tail", "truncated_moment", "solve_crossover", "pruitt_index",
    "laplace_exponent", "upper_function_integral", "classify_support",
    "JumpEvent", "EventPath", "GridPath", "simulate_large_jumps",
    "simulate_small_jumps", "simulate_many", "band_rate", "band_variance",
    "running_sup", "compose", "write_event_path", "read_event_path",
    "ExceedanceReport", "MomentScan", "PruittSlopeReport",
    "envelope_exceedances", "build_exceedance_report", "growth_scan",
    "moment_scan", "pruitt_slope",
    "TestFunction", "Gaussian", "Bump", "ExpPoly", "PairingResult",
    "s_norm", "k_norm", "kbeta_norm", "pair_white_noise",
    "parse_test_function",
]
