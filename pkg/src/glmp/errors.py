"""Exception types shared across the package."""


class GlmpError(Exception):
    """Base class for library errors."""


class ShapeError(GlmpError):
    """Operand dimensions do not line up."""


class GraphError(GlmpError):
    """The computation record is malformed (e.g. contains a cycle)."""


class VocabError(GlmpError):
    """A token or token id is not covered by the vocabulary."""


class ParseError(GlmpError):
    """A corpus file could not be parsed."""

    def __init__(self, message, path=None, line_no=None):
        loc = ""
        if path is not None:
            loc += f"{path}"
        if line_no is not None:
            loc += f":{line_no}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.path = path
        self.line_no = line_no


class TrainingError(GlmpError):
    """Training diverged or received invalid gradients."""


class CheckpointError(GlmpError):
    """Checkpoint file is missing, corrupt, or version-incompatible."""


class NullCopyError(GlmpError):
    """The null memory slot was asked for an object word."""
