"""
eqkernel.core._errors

Exceptions raised across the library. Each one also derives from the builtin a
caller would naturally catch, so `except ValueError` keeps working.
"""


class EqkernelError(Exception):
    """Base class for every library error."""


class NormalizationError(EqkernelError, ValueError):
    """Vector is not a unit vector in the required norm."""


class DimensionError(EqkernelError, ValueError):
    """Mismatched qubit counts or input dimensions."""


class SymmetryError(EqkernelError, ValueError):
    """Matrix expected symmetric is not."""


class BoxViolationError(EqkernelError, ValueError):
    """Preprocessor produced a value outside its declared box."""


class CircuitError(EqkernelError, ValueError):
    """Invalid gate specification."""


class SamplerError(EqkernelError, ValueError):
    """Kernel has no spectral sampler."""


class SmoothnessError(EqkernelError, ValueError):
    """Finite differences at the origin do not converge."""


class GuardError(EqkernelError, RuntimeError):
    """A desk-scale size guard was exceeded."""


class ConfigError(EqkernelError, ValueError):
    """Experiment configuration is invalid."""
