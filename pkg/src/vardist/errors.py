"""Exception hierarchy shared by every module."""


class VardistError(Exception):
    """Base class for all errors raised by vardist."""


class ParameterError(VardistError, ValueError):
    """A parameter vector violates the family's constraints."""


class UnsupportedFamilyError(VardistError, ValueError):
    """The requested family or parameterization is not implemented."""


class InsufficientSupportError(VardistError, ValueError):
    """Fewer than two distinct support points remain."""


class ZeroDensityError(VardistError, ValueError):
    """A density or frequency vanishes (or underflows) where it must be positive."""


class SupportMismatchError(VardistError, ValueError):
    """Two tables do not share the same support sequence."""


class DegenerateError(VardistError, ValueError):
    """Inputs make a closed-form estimator undefined (e.g. coincident points)."""


class DomainError(VardistError, ValueError):
    """Bounds, regions or perturbations leave no feasible value."""


class SelectionError(VardistError, ValueError):
    """Fewer than two candidates could be evaluated."""
