"""Exception hierarchy shared by all modules."""


class FrostlabError(Exception):
    """Base class for every error raised by the package."""


class PreconditionError(FrostlabError, ValueError):
    """A numerical precondition of an operation is violated.

    Raised as ``PreconditionError(operation, message)`` or with a single
    message.
    """

    def __init__(self, op, message=None):
        self.op = op if message is not None else None
        super().__init__(op if message is None else f"{op}: {message}")


class DegeneracyError(PreconditionError):
    """Vectors that should span a subspace are (numerically) dependent."""


class PoleError(PreconditionError):
    """A Gamma-function pole was hit."""


class ConfigError(FrostlabError, ValueError):
    """An experiment configuration is invalid.

    ``path`` names the offending field, e.g. ``"frames"`` or ``"p[2]"``.
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
