"""Exception hierarchy shared by every wittenlab module."""


class WittenLabError(Exception):
    """Base class for all errors raised by wittenlab."""


class DomainError(WittenLabError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ShapeError(WittenLabError, ValueError):
    """Array or point dimensions do not match the problem dimension."""


class ConfigurationError(WittenLabError, ValueError):
    """An experiment or grid was configured with unusable parameters."""


class ConstructionError(WittenLabError, ValueError):
    """A Morse function could not be built from the requested parameters."""


class OverflowGuardError(WittenLabError, ValueError):
    """The deformation parameter would overflow the exponential weights."""

    def __init__(self, message, max_admissible_k):
        super().__init__(message)
        self.max_admissible_k = max_admissible_k


class ProbeError(WittenLabError, ValueError):
    """A probe point falls where the model comparison is meaningless."""


class ResolutionError(WittenLabError, ValueError):
    """The grid is too coarse for the requested scaling parameter."""


class GapAmbiguityError(WittenLabError):
    """No clean spectral gap separates the numerical kernel."""

    def __init__(self, message, candidates):
        super().__init__(message)
        self.candidates = tuple(candidates)


class EigensolverError(WittenLabError, RuntimeError):
    """Dense eigensolver failed or produced a decomposition violating invariants."""

    def __init__(self, message, dump_path=None):
        super().__init__(message)
        self.dump_path = dump_path
