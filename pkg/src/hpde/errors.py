"""Exception types raised by the solver and the experiment drivers."""


class HPDEError(Exception):
    """Base class for all package errors."""


class ConfigError(HPDEError, ValueError):
    """Invalid run configuration (maps to CLI exit code 2)."""


class SolverError(HPDEError):
    """An iterative solve did not reach its tolerance.

    Attributes
    ----------
    residual : float
        Relative residual at the last iteration.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class CFLError(HPDEError):
    """Time step violates the configured CFL limit."""

    def __init__(self, cfl, limit):
        super().__init__(f"CFL number {cfl:.4g} exceeds limit {limit:.4g}")
        self.cfl = cfl
        self.limit = limit


class BlowUpError(HPDEError):
    """A tracked norm exceeded the blow-up threshold during a run."""

    def __init__(self, message, series=None):
        super().__init__(message)
        self.series = series if series is not None else []
