"""Exception types raised across the package."""


class SigmaFiniteError(Exception):
    """Base class for all package errors."""


class InvalidDomain(SigmaFiniteError, ValueError):
    """Degenerate or malformed integration domain."""


class NegativeDensity(SigmaFiniteError, ValueError):
    """A kernel returned a negative value at a quadrature node."""


class NotSigmaFinite(SigmaFiniteError):
    """Conditioning on a quantity whose law is not sigma-finite."""


class ZeroSlice(SigmaFiniteError):
    """The conditioning slice has zero mass."""


class DivergentSlice(SigmaFiniteError):
    """The conditioning slice has infinite mass."""


class ZeroEvidence(SigmaFiniteError):
    """Marginal density of the observation is zero."""


class DomainError(SigmaFiniteError, ValueError):
    """Argument outside the model's parameter space."""


class InvalidSize(SigmaFiniteError, ValueError):
    pass


class DimensionMismatch(SigmaFiniteError, ValueError):
    pass


class ZeroFirstIncrement(SigmaFiniteError, ValueError):
    pass


class ReferenceDegenerate(SigmaFiniteError):
    """Reference test function integrates to zero against a sequence member."""


class UnknownCase(SigmaFiniteError, ValueError):
    pass
