"""Exception types raised across the package."""


class GDDCError(Exception):
    """Base class for all package errors."""


class CapacityExceeded(GDDCError):
    """A site cannot absorb the load assigned to it."""

    def __init__(self, message, site=None, workload=None, excess=0.0):
        super().__init__(message)
        self.site = site
        self.workload = workload
        self.excess = excess


class InvalidPremium(GDDCError):
    """A clean-premium fraction was set on a site that does not offer one."""


class InfeasibleScenario(GDDCError):
    """No feasible assignment exists (total demand exceeds fleet capacity)."""


class ParseError(GDDCError):
    """A scenario or assignment file is malformed."""


class ValidationError(GDDCError):
    """A scenario violates an invariant; ``path`` names the offending field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class InsufficientData(GDDCError):
    """Too few training rows to fit a model."""


class ArityMismatch(GDDCError):
    """Feature vector length does not match the fitted model."""


class ArityUnsupported(GDDCError):
    """Exact hypervolume requested for more than three objectives."""


class InfeasibleAssignment(GDDCError):
    """An assignment violates arrival-rate conservation, bounds or capacity."""
