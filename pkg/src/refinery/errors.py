"""Exception hierarchy shared by every module.

All validation failures derive from :class:`RefineryError`, which is itself a
``ValueError`` so callers that only care about "bad input" can catch that.
"""


class RefineryError(ValueError):
    """Base class for all input and model validation errors."""


class ExhaustiveUnavailable(RefineryError):
    """Exact enumeration requested for a model with continuous support."""
