# funnelgate/errors.py


class FunnelGateError(Exception):
    """Base class for everything raised by funnelgate."""


class ConfigError(FunnelGateError):
    """Bad or inconsistent configuration document / arguments."""


class FunnelDomainError(FunnelGateError, ValueError):
    """xi is outside the open funnel, the inverse transform is undefined."""

    def __init__(self, xi, lower, upper, t):
        super().__init__(
            f"xi={xi!r} outside funnel ({lower!r}, {upper!r}) at t={t!r}"
        )
        self.xi = xi
        self.lower = lower
        self.upper = upper
        self.t = t


class DegenerateSystemError(FunnelGateError):
    """Zero I/O path or an improper filter."""


class NumericError(FunnelGateError):
    """Non-finite state or an iteration that failed to converge."""
