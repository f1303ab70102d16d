"""Exception hierarchy.

Every error raised by this package derives from SplineGdError so callers
(and the CLI) can map failures to a small set of exit-code families.
"""


class SplineGdError(Exception):
    """Base class for all package errors."""


class ConfigError(SplineGdError):
    """Bad configuration: unknown keys, invalid values, missing files."""


class InvalidConfig(ConfigError):
    """A config value is out of range or inconsistent."""


class UnknownKey(ConfigError):
    """A config file or override names a key outside the schema."""

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"unknown config key: {key!r}")


class InvalidValue(ConfigError):
    """A config value failed to parse or violates a constraint."""


class MissingFile(ConfigError):
    """A referenced input file does not exist."""


class DataError(SplineGdError):
    """Bad dataset: unsorted, duplicated, or out-of-range inputs."""


class NotTwiceDifferentiable(SplineGdError):
    """A pre-activation sits on (or too close to) a ReLU kink.

    Carries the offending neuron index and data value so callers can report
    which unit broke second-order differentiability.
    """

    def __init__(self, neuron: int, x: float, margin: float):
        self.neuron = neuron
        self.x = x
        self.margin = margin
        super().__init__(
            f"pre-activation of neuron {neuron} at x={x!r} has magnitude "
            f"{margin:.3e}, too close to the ReLU kink"
        )


class NoConvergence(SplineGdError):
    """Iterative eigensolver failed to reach tolerance within max_iters."""

    def __init__(self, iters: int, estimate: float, residual: float):
        self.iters = iters
        self.estimate = estimate
        self.residual = residual
        super().__init__(
            f"power iteration did not converge after {iters} iterations "
            f"(estimate {estimate!r}, residual {residual:.3e})"
        )


class Diverged(SplineGdError):
    """Gradient descent produced a non-finite parameter or loss."""


class NotInterpolating(SplineGdError):
    """Least-squares residual exceeds the interpolation tolerance."""

    def __init__(self, residual_rms: float, tol: float):
        self.residual_rms = residual_rms
        self.tol = tol
        super().__init__(
            f"residual RMS {residual_rms:.3e} exceeds interpolation tol {tol:.1e}"
        )


class MissingGroundTruth(SplineGdError):
    """Operation requires a dataset with a ground-truth function."""


class MissingSigma(SplineGdError):
    """Operation requires a dataset with a known noise level."""


class EmptyInterval(SplineGdError):
    """No data points fall inside the requested interval."""


class NotEquispaced(SplineGdError):
    """Design is not an equispaced grid, so grid-based bounds do not apply."""


class NoInterval(SplineGdError):
    """No grid point satisfies the requested weight threshold."""


class InsufficientData(SplineGdError):
    """Too few valid cells remain to fit a rate."""
