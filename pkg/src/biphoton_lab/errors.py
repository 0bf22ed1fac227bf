"""Exception types shared across the package.

Analysis code distinguishes configuration problems (ValidationError,
ResolutionError, GeometryError), data that cannot support the requested
estimate (NoSignalError, DegenerateInputError), and estimator failures
(FitFailureError). CLI maps ValidationError to exit code 2 and the rest
to exit code 1.
"""


class ValidationError(ValueError):
    """A config value or input record violates the documented schema.

    The message names the offending field with a dotted path, e.g.
    "sim.pair_rate_hz: must be positive".
    """


class ResolutionError(ValueError):
    """A frequency/time grid is too coarse or too narrow for the model."""


class GeometryError(ValueError):
    """Scan or map geometry is unusable (non-uniform or mismatched axes)."""


class NoSignalError(RuntimeError):
    """The data contain no identifiable peak above the floor."""


class DegenerateInputError(ValueError):
    """Input curve is degenerate for the requested transform (e.g. g2 ~ 1)."""


class FitFailureError(RuntimeError):
    """A model fit did not produce a usable estimate.

    Distinct from numerical non-convergence inside scipy: raised after we
    have inspected the data/fit and concluded no meaningful parameters exist.
    """
