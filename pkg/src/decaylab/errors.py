"""Exception types shared by the decaylab modules.

The CLI maps each class to a distinct exit status, so the pipeline raises
these instead of returning status flags.
"""


class DecaylabError(Exception):
    exit_code = 1


class ConfigError(DecaylabError, ValueError):
    exit_code = 2


class HypothesisError(DecaylabError):
    """The damping does not satisfy ``a >= 0`` with ``int a > 0``."""

    exit_code = 3


class TrivialDampingError(HypothesisError):
    pass


class SpectrumOnAxisError(DecaylabError):
    """``i*tau`` lies in the spectrum of the generator for some scanned tau."""

    exit_code = 4

    def __init__(self, message, taus=()):
        super().__init__(message)
        self.taus = tuple(float(t) for t in taus)


class EigensolverError(DecaylabError):
    exit_code = 5

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual
