"""Exception types shared across the package."""


class MPJCError(Exception):
    """Base class for all package errors."""


class CutoffTooSmallError(MPJCError, ValueError):
    """Raised when a truncated Fock expansion loses more weight than allowed.

    The measured leakage is kept on the instance so callers can report it.
    """

    def __init__(self, message, leakage=None, cutoff=None):
        super().__init__(message)
        self.leakage = leakage
        self.cutoff = cutoff


class ConfigError(MPJCError, ValueError):
    """Invalid experiment configuration."""


class SolverError(MPJCError, RuntimeError):
    """Numerical propagation failed or drifted past its tolerance."""
