"""Exception types shared across the package."""


class CodedGdError(Exception):
    """Base class for all package errors."""


class NotEnoughMessages(CodedGdError):
    """Decoding was attempted below the scheme's recovery threshold.

    This is a normal control outcome while messages are still arriving,
    not a fault.
    """


class DecodingError(CodedGdError):
    """The received set cannot be decoded, or the solve is numerically unusable."""

    def __init__(self, msg, condition=None):
        super().__init__(msg)
        self.condition = condition


class ConfigError(CodedGdError):
    """An experiment configuration failed validation."""
