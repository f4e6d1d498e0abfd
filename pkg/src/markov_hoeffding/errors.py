"""Exception types raised by the library.

Every error subclasses :class:`MarkovBoundError` (itself a ``ValueError``) so
callers can catch the whole family. ``PreconditionError`` marks failures of a
theorem's hypothesis (as opposed to malformed input); the command-line tool
maps it to exit code 3.
"""


class MarkovBoundError(ValueError):
    """Base class for all library errors."""


class PreconditionError(MarkovBoundError):
    """A theorem's hypothesis does not hold for the supplied inputs."""


# chain construction
class NotStochastic(MarkovBoundError):
    pass


class DegenerateStationary(MarkovBoundError):
    pass


# extremal machinery
class PoleHit(MarkovBoundError):
    pass


class BracketFailure(MarkovBoundError):
    pass


class DegenerateRange(MarkovBoundError):
    pass


class NotLeonPerron(MarkovBoundError):
    pass


# bounds
class GapExhausted(PreconditionError):
    pass


class InvalidP(PreconditionError):
    pass


# simulation
class HorizonTooLarge(MarkovBoundError):
    pass


# applications
class PerturbationTooLarge(PreconditionError):
    pass


class SampleTooSmall(PreconditionError):
    pass


class SingularSigma(PreconditionError):
    pass


class BracketEmpty(PreconditionError):
    pass


class ModelViolation(PreconditionError):
    pass


class Disconnected(PreconditionError):
    pass


class CTooSmall(PreconditionError):
    pass
