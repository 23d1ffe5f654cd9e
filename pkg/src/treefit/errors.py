"""Exception hierarchy shared by all treefit modules."""


class TreefitError(Exception):
    """Base class for all library errors."""


class ContractViolation(TreefitError):
    """An operation was called outside its documented precondition."""


class ParseError(TreefitError):
    """Malformed input text; carries line or byte position when known."""

    def __init__(self, message, line=None, offset=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if offset is not None:
            loc.append(f"byte {offset}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.line = line
        self.offset = offset


class HypothesisError(TreefitError):
    """A degree/size hypothesis fails numerically on this instance.

    The message names the violated inequality with both sides evaluated.
    Embedding entry points downgrade this to a warning when ``force`` is set.
    """

    def __init__(self, name, lhs, rhs, relation=">="):
        super().__init__(f"hypothesis failed: {name}: {lhs} {relation} {rhs} is false")
        self.name = name
        self.lhs = lhs
        self.rhs = rhs


class EmbeddingFailure(TreefitError):
    """Structured embedding failure (never a malformed embedding).

    ``diagnostics`` is a JSON-serializable dict: at minimum a ``reason``,
    plus scenario tag, starved slice/cluster and fill percentages when the
    failure happened inside the cluster machinery.
    """

    def __init__(self, reason, **diagnostics):
        super().__init__(reason)
        self.diagnostics = {"reason": reason, **diagnostics}


class InternalInvariantError(TreefitError):
    """A guaranteed property failed to materialize; treated as a bug signal."""
