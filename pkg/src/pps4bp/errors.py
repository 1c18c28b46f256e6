"""Exception hierarchy shared by every module."""


class PPS4BPError(Exception):
    """Base class for all package errors."""


class DegenerateInput(PPS4BPError, ValueError):
    """A chart or Hamiltonian was evaluated at an unregularized singularity."""


class SbcPoint(DegenerateInput):
    """Momenta requested at a simultaneous binary collision (a cluster factor is zero)."""


class TotalCollapse(DegenerateInput):
    """Reduced Hamiltonian evaluated at Q1 = Q2 = 0."""


class SingularityHit(PPS4BPError):
    """The vector field became singular during an integration."""


class StepLimit(PPS4BPError):
    """An integration exceeded its step budget."""


class NoEvent(PPS4BPError):
    """No sign change of the event function was found within the span."""


class BoundaryMismatch(PPS4BPError):
    """A trajectory segment does not satisfy the required endpoint pattern."""


class BracketFailure(PPS4BPError):
    """A root-finding bracket could not be established."""


class LineSearchFailure(PPS4BPError):
    """The minimizer stopped without meeting its tolerances."""


class SeedFailure(PPS4BPError):
    """The first continuation step could not be solved from the seed orbit."""


class NoConvergence(PPS4BPError):
    """An iterative eigenvalue computation did not converge."""
