"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`TempleLabError`.
The CLI maps the three families below to exit codes.
"""


class TempleLabError(Exception):
    """Base class."""


class ConfigError(TempleLabError):
    """Malformed configuration or system definition (CLI exit code 2)."""


class NumericalAbort(TempleLabError):
    """A computation had to stop for numerical reasons (CLI exit code 3)."""


# system-core
class DegenerateSpectrum(NumericalAbort):
    pass


class NonReal(NumericalAbort):
    pass


class CommutationViolation(NumericalAbort):
    pass


class OutOfDomain(NumericalAbort):
    pass


class NonPositiveViscosity(NumericalAbort):
    pass


# viscous-solver
class DomainExit(OutOfDomain):
    pass


class Instability(NumericalAbort):
    pass


class InsufficientRecords(TempleLabError):
    pass


# riemann-semigroup
class NoConvergence(NumericalAbort):
    pass


class DegenerateFlux(NumericalAbort):
    pass


class SectorOverlap(NumericalAbort):
    pass


class InteractionReached(NumericalAbort):
    pass


class FrontBudgetExceeded(NumericalAbort):
    pass


# estimates-lab
class GridMismatch(TempleLabError):
    pass


class SpeedGapViolated(NumericalAbort):
    pass


class NoReference(TempleLabError):
    pass
