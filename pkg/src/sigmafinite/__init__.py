"""Computing with improper distributions: sigma-finite marginals, proper conditionals and their pitfalls."""

from .exceptions import (
    DimensionMismatch,
    DivergentSlice,
    DomainError,
    InvalidDomain,
    InvalidSize,
    NegativeDensity,
    NotSigmaFinite,
    ReferenceDegenerate,
    SigmaFiniteError,
    UnknownCase,
    ZeroEvidence,
    ZeroFirstIncrement,
    ZeroSlice,
)
from .measures import (
    Kernel,
    MarginalResult,
    ProperDensity,
    bayes_posterior,
    condition,
    is_sigma_finite,
    marginal,
    total_mass,
)
from .numerics import DEFAULT_CONFIG, Domain1D, QuadratureConfig, integrate, integrate2d

__version__ = "0.1.0"
