"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid configuration (empty charset, empty corpus, bad parameters)."""


class ContractViolation(RuntimeError):
    """An operation precondition was broken by the caller."""


class EstimationError(RuntimeError):
    """Not enough data to estimate the requested quantity."""

    def __init__(self, message: str, **counts: int):
        super().__init__(message + (f" ({counts})" if counts else ""))
        self.counts = counts


class SessionError(RuntimeError):
    """Unknown or inactive study session."""


class OrderingError(RuntimeError):
    """Out-of-order key event (timestamp or sequence number)."""
