"""Exception and warning types shared across the package."""


class GqmetError(Exception):
    """Base class for all errors raised by gqmet."""


class DomainError(GqmetError, ValueError):
    """A parameter lies outside its admissible domain."""


class MalformedInputError(GqmetError, ValueError):
    """Input contains NaN/Inf or has the wrong shape."""


class UnphysicalStateError(DomainError):
    """A covariance matrix violates the uncertainty bound det(cov) >= 1."""


class UnphysicalChannelError(DomainError):
    """A channel fails the complete-positivity condition."""


class NumericalFailure(GqmetError, ArithmeticError):
    """A computation produced a non-finite or singular intermediate."""


class PureStateSingularity(NumericalFailure):
    """Purity term of the QFI is singular: purity is 1 but its derivative is not 0."""


class GridError(GqmetError):
    """Oracle grid too small (tail mass or aliasing above threshold)."""


class CutoffError(GqmetError):
    """Fock truncation loses more population than allowed."""


class FitError(GqmetError):
    """Power-law fit has no usable points."""


class EmptyResultError(GqmetError):
    """A sweep produced no physical grid point."""


class UnphysicalProbeWarning(UserWarning):
    """Probe settings violate sigma_q * sigma_p <= 2 nbar + 1."""


class DivergenceWarning(RuntimeWarning):
    """A closed-form QFI diverges (nu1 * nu2 -> 1 with a finite numerator)."""


class FitPointsExcludedWarning(UserWarning):
    """Some points were dropped from a log-log fit."""
