"""Exception types shared across the package."""


class VirtimuError(Exception):
    """Base class for all package errors."""


class DegenerateSignalError(VirtimuError):
    """A signal has zero variance (or is otherwise unusable for correlation)."""


class SignalLengthError(VirtimuError):
    """Sequences have mismatched or insufficient length."""


class RenderError(VirtimuError):
    """Video rendering cannot proceed (motion excursion, rate deficit, ...)."""


class RegistrationError(VirtimuError):
    """Image registration failed (constant image, shape mismatch, divergence)."""


class ConfigError(VirtimuError):
    """Invalid configuration or CLI input."""
