"""Exception hierarchy shared across the package."""


class WpxError(Exception):
    """Base class for all package errors."""


class DomainError(WpxError):
    """A value violates a domain invariant (bad position, weights, schema...)."""


class EstimationError(WpxError):
    """A model fit failed (rank deficiency, degenerate data, stage failure)."""


class InvariantViolation(WpxError):
    """An internal consistency check failed during a run."""
