"""Exception hierarchy shared by all solvers."""


class ParclustError(Exception):
    """Base class for every error raised by this package."""


class StructuralError(ParclustError, ValueError):
    """Malformed input: unknown ids, bad shapes, negative costs, ..."""


class InfeasibleInstance(ParclustError):
    """No solution satisfies the parity constraints."""


class SizeGuardExceeded(ParclustError):
    """An exhaustive oracle refused an instance above its size bound."""


class InvariantViolation(ParclustError, AssertionError):
    """An internal guarantee of an algorithm failed.

    These are never legal runtime states; seeing one means a bug.
    """
