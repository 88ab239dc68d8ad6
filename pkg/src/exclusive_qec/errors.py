"""Exception types shared across the package."""


class ExclusiveQECError(Exception):
    """Base class for package errors."""


class InvalidParameter(ExclusiveQECError, ValueError):
    """A parameter is outside its allowed range."""


class PreconditionViolation(ExclusiveQECError, ValueError):
    """An input does not satisfy a documented precondition."""


class InfeasibleSector(ExclusiveQECError):
    """No correction exists in the requested logical sector."""


class OverlapError(ExclusiveQECError):
    """Adjacent splitting levels share too little probability mass."""


class FitError(ExclusiveQECError):
    """A fit could not be performed on the supplied data."""
