"""Exception hierarchy shared by all horolab modules."""


class HorolabError(Exception):
    """Base class for every error raised by horolab."""


class ModelError(HorolabError, ValueError):
    """Invalid model parameters (dimension, curvature profile, chart)."""


class ConvergenceError(HorolabError, RuntimeError):
    """A numerical limit, root search or integration did not reach its tolerance."""


class ModelViolation(HorolabError, RuntimeError):
    """A numerical observation contradicts a structural property the model must have.

    Examples are multiple crossings of a geodesic ray with a distance sphere,
    or a singular Jacobi tensor (conjugate points).
    """


class NonExponentialGrowth(ModelViolation):
    """Jacobi tensors do not grow exponentially, so the model is not rank one."""


class ConfigError(HorolabError, ValueError):
    """Malformed experiment configuration."""
