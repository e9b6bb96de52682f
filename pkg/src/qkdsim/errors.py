"""Exception types shared across the simulator."""


class QkdSimError(Exception):
    """Base class for all qkdsim errors."""


class InvalidInputError(QkdSimError, ValueError):
    """An argument violates a documented precondition or invariant."""


class InfeasibleAttackError(QkdSimError):
    """The requested source restriction cannot supply a valid test set.

    Raised when the test-set size exceeds the number of positions the
    restricted source is allowed to draw from (k > n/2 statically, or the
    realized allowed pool is smaller than k).
    """


class InsufficientPositionsError(QkdSimError):
    """Fewer sifted positions are available than the test set requires."""
