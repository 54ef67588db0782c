"""Exception hierarchy shared by every critlab module."""


class CritlabError(Exception):
    """Base class for all errors raised by critlab."""


class InvalidArgumentError(CritlabError, ValueError):
    """An argument violates a documented precondition."""


class TranslationRangeError(CritlabError, OverflowError):
    """A translation by 3**n is outside the supported range."""


class UnsupportedOperatorError(CritlabError, ValueError):
    """The operator is outside what the routine supports (e.g. non-unit diffusion)."""


class NumericalError(CritlabError, RuntimeError):
    """A numerical procedure failed; ``log`` carries the diagnostic trail."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = list(log or [])


class ConvergenceError(NumericalError):
    """An iterative limit did not settle within its budget."""


class DiscretizationError(NumericalError):
    """Output violates a property the continuous problem guarantees; refine the mesh."""

    def __init__(self, message, log=None, result=None):
        super().__init__(message, log)
        self.result = result


class DegeneratePairError(NumericalError):
    """Two solutions are proportional, so their Wronskian vanishes."""
