"""Estimation-theoretic privacy filters on finite alphabets.

Core objects live in :mod:`ensrlab.prob` (pmfs, channels, MMSE),
:mod:`ensrlab.dependence` (maximal correlation), :mod:`ensrlab.filters`
(privacy-constrained filter search), :mod:`ensrlab.biso`,
:mod:`ensrlab.iid` and :mod:`ensrlab.gaussian` (closed forms and their
numerical checks).
"""

from .dependence import (SpectralReport, maximal_correlation, min_normalized_mmse,
                         normalized_mmse, rho_m_sq, verify_sdpi, weak_independence_test)
from .errors import (ClampWarning, DegenerateError, DimensionError, EnsrError,
                     InfeasibleError, InputError, NotBisoError, ResourceError, ScopeError)
from .filters import (FilterProblem, FilterSolution, PrivacyCurve, SearchConfig,
                      erasure_filter, evaluate_filter, p_error_curve, privacy_curve, solve,
                      verify_bounds, verify_convexity)
from .prob import Alphabet, Channel, JointDistribution, compose, correlation_ratio_sq, mmse

__version__ = "0.1.0"

__all__ = [
    "Alphabet", "Channel", "ClampWarning", "DegenerateError", "DimensionError",
    "EnsrError", "FilterProblem", "FilterSolution", "InfeasibleError", "InputError",
    "JointDistribution", "NotBisoError", "PrivacyCurve", "ResourceError", "ScopeError",
    "SearchConfig", "SpectralReport", "compose", "correlation_ratio_sq", "erasure_filter",
    "evaluate_filter", "maximal_correlation", "min_normalized_mmse", "mmse",
    "normalized_mmse", "p_error_curve", "privacy_curve", "rho_m_sq", "solve",
    "verify_bounds", "verify_convexity", "verify_sdpi", "weak_independence_test",
]
