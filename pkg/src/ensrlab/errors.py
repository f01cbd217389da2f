"""Exception hierarchy shared by every ensrlab module."""


class EnsrError(Exception):
    """Base class for all library errors."""


class InputError(EnsrError, ValueError):
    """Malformed probabilities, alphabets or files."""


class DimensionError(EnsrError, ValueError):
    """Alphabets of two objects that must agree do not."""


class DegenerateError(EnsrError, ValueError):
    """A quantity is undefined because some variable is constant."""


class NotBisoError(EnsrError, ValueError):
    """The channel fails the binary-input symmetric-output test."""


class ScopeError(EnsrError, ValueError):
    """The inputs fall outside the setting in which a result applies."""


class InfeasibleError(EnsrError, ValueError):
    """No filter can satisfy the requested privacy level."""


class ResourceError(EnsrError):
    """A product construction would exceed the configured size cap."""


class ClampWarning(UserWarning):
    """A privacy level or closed-form value was clamped to its valid range."""
