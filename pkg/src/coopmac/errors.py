class ValidationError(ValueError):
    """Raised when a probability table violates its invariants."""


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a formula."""


class ResourceError(RuntimeError):
    """Raised when a table would exceed the configured size cap."""
