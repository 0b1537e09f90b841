"""Exception types shared across the package.

The CLI maps these onto its exit codes: precondition failures exit 2,
resource limits exit 3, cross-method inconsistencies exit 4.
"""


class PreconditionError(ValueError):
    """An operation was called outside its documented domain."""


class ResourceLimitError(RuntimeError):
    """An enumeration or search would exceed a configured size limit."""


class InconsistencyError(RuntimeError):
    """Two independent computations of the same quantity disagree
    beyond their certified tolerance."""


class GeneratorNotFoundError(RuntimeError):
    """A forced generator search exhausted all candidates."""
