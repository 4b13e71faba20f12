"""Exception hierarchy shared by all layers; the CLI maps these onto exit codes."""

from typing import Optional


class LdpNetError(Exception):
    """Base class for all errors raised deliberately by ldpnet."""


class ConfigError(LdpNetError, ValueError):
    """Raised when an experiment configuration violates its schema or registries."""

    def __init__(self, message: str, field_path: str = ""):
        """Initialize the error with the offending field.

        Args:
            message (str): Human-readable description.
            field_path (str): Dotted path of the offending field, e.g. ``graph.seed``.
        """
        super().__init__(f"{field_path}: {message}" if field_path else message)
        self.field_path = field_path


class CapExceededError(LdpNetError, ValueError):
    """Raised when an exact computation would exceed its configured size cap."""


class ContractViolationError(LdpNetError, RuntimeError):
    """Raised when a numerical self-check (invariant or a priori bound) fails."""


class BlowUpError(ContractViolationError):
    """Raised when an integrator produces non-finite states."""


class NoConvergenceError(LdpNetError, RuntimeError):
    """Raised when the Euler ladder reaches its step cap before the tolerance."""

    def __init__(self, message: str, gap: float, steps: int, gaps: Optional[list] = None):
        super().__init__(f"{message} (gap={gap:.3e}, steps={steps})")
        self.gap = gap
        self.steps = steps
        self.gaps = list(gaps or [])
