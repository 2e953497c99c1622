"""Exception types shared across the package."""


class MetaISError(Exception):
    """Base class for every error raised by this package."""


class InputError(MetaISError):
    """Bad caller input: dimension mismatch, non-finite value, bad size."""


class ConfigError(MetaISError):
    """Invalid configuration value."""


class ConditioningError(MetaISError):
    """Correlation matrix not factorizable even at the maximum nugget."""


class IdentifiabilityError(MetaISError):
    """Regression basis too large for the number of design points."""


class FitFailure(MetaISError):
    """Every candidate length-scale produced a conditioning error."""


class SamplerStallError(MetaISError):
    """Slice shrinkage exhausted its contraction budget."""


class DominationError(MetaISError):
    """Instrumental density vanishes at a failing point of positive mass."""


class EstimationError(MetaISError):
    """An estimator could not be computed."""
