"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input lies outside the domain of an operation."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its accuracy target."""
