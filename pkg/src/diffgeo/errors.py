"""Exception types shared across the package.

Domain errors signal inputs outside an operation's documented domain and are
raised before any expensive work.  Numerical errors signal non-finite state
encountered mid-computation and carry enough context to locate the failure.
"""


class DiffgeoError(Exception):
    """Base class for package errors."""


class DomainError(DiffgeoError, ValueError):
    """Input outside the documented domain (bad t, log-SNR, sizes, ...)."""


class NumericalError(DiffgeoError, RuntimeError):
    """Non-finite value produced during iteration (diverged chain, NaN loss)."""


class ConfigError(DiffgeoError, ValueError):
    """Malformed run configuration.

    ``pointer`` is a JSON-pointer-style path ("/schedule/kind") identifying
    the offending entry.
    """

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"config error at {pointer}: {message}")
