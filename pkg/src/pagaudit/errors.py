"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: input problems (2), background-knowledge
inconsistencies (3), anything else (4).
"""


class PagauditError(Exception):
    """Base class for all errors raised by this package."""


class InputError(PagauditError):
    """Malformed or out-of-contract input: unknown nodes, bad CSV, bad schema."""


class SchemaError(InputError):
    """Dataset schema violation (kind mismatch, arity overflow, missing value)."""


class DegenerateInputError(InputError):
    """Numerically degenerate input, e.g. a singular correlation submatrix."""


class FitError(InputError):
    """Model fitting cannot proceed, e.g. an outcome column with one class."""


class KnowledgeInconsistencyError(PagauditError):
    """Background knowledge contradicts itself or the evidence in the graph."""


class InternalConsistencyError(PagauditError):
    """A pipeline stage received state that violates its preconditions."""
