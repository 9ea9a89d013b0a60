"""Exception hierarchy shared by every module."""


class BNIdentityError(Exception):
    """Base class for data and contract errors raised by this package."""


class CycleDetected(BNIdentityError):
    pass


class DomainTooLarge(BNIdentityError):
    pass


class UnknownVariable(BNIdentityError, KeyError):
    pass


class ScopeMismatch(BNIdentityError, ValueError):
    pass


class InvalidModel(BNIdentityError, ValueError):
    """A DAG, CPT, distribution or sample table violates its invariants."""


class DegenerateQ(BNIdentityError, ValueError):
    pass


class OutOfDomain(BNIdentityError, ValueError):
    pass


class InvalidFactorization(BNIdentityError, ValueError):
    pass


class NodeInPrefix(BNIdentityError, ValueError):
    pass


class NodeSetMismatch(BNIdentityError, ValueError):
    pass


class InvariantViolation(BNIdentityError, AssertionError):
    """Debug-mode check of the tree-ordering construction failed."""


class InvalidConfig(BNIdentityError, ValueError):
    pass


class DomainMismatch(BNIdentityError, ValueError):
    pass


class ShapeMismatch(BNIdentityError, ValueError):
    pass


class BudgetExceeded(BNIdentityError):
    pass


class ZeroQ(BNIdentityError, ValueError):
    pass


class InsufficientSamples(BNIdentityError):
    pass


class InsufficientSamplesWarning(UserWarning):
    """Emitted when a subtest runs below its recommended sample size."""
