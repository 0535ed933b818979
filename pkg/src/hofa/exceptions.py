"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation (bad shape, index, tag)."""


class CapacityError(ValueError):
    """A request exceeds a fixed implementation cap."""


class NumericError(ArithmeticError):
    """Floating-point input is unusable (NaN or infinite entries)."""


class ConstructionError(ValueError):
    """A requested object cannot be built for the given model sizes."""
