"""Error taxonomy shared by all stages.

Every failure surfaced to the CLI falls into one of four categories
(config / io / validation / numeric), each with its own exit code.
"""


class EshdrError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1
    category = "error"


class ConfigError(EshdrError):
    """Bad or inconsistent run configuration (unknown keys, bad types)."""

    exit_code = 2
    category = "config"


class FormatError(EshdrError):
    """Malformed file content (PFM / PPM / ESHDR1 / sidecar / manifest).

    ``offset`` is the byte offset of the first offending byte when the
    format is binary and the offset is known.
    """

    exit_code = 3
    category = "io"

    def __init__(self, message, path=None, offset=None):
        self.path = path
        self.offset = offset
        parts = [message]
        if path is not None:
            parts.append(f"file: {path}")
        if offset is not None:
            parts.append(f"byte offset: {offset}")
        super().__init__(" | ".join(parts))


class ValidationError(EshdrError):
    """Inputs violate a documented precondition or invariant."""

    exit_code = 4
    category = "validation"


class DomainMismatchError(ValidationError):
    """A normalized image carried the wrong transfer-domain tag."""


class NumericError(EshdrError):
    """Non-finite values or numerically impossible state."""

    exit_code = 5
    category = "numeric"
