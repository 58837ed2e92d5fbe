"""Exception types shared across the package."""

from __future__ import annotations


class SchemaError(ValueError):
    """A document failed strict schema validation.

    Carries the JSON path of the offending field so diagnostics can point at
    the exact location in the source document.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class DuplicateIdError(SchemaError):
    """Two entries in a collection share an id that must be unique."""


class EmptyMeshError(ValueError):
    """A mesh with no triangles was given where geometry is required."""


class NonFiniteError(ValueError):
    """A coordinate was NaN or infinite."""


class DegenerateMeshError(ValueError):
    """A mesh collapses to zero extent on at least one axis."""


class MismatchedLayoutError(ValueError):
    """Two layouts that must cover the same parts in the same order do not."""


class ParseError(ValueError):
    """No well-formed positions block could be extracted from planner text."""


class CountMismatchError(ValueError):
    """A positions block parsed fine but holds the wrong number of triples."""


class RejectedCaseError(ValueError):
    """A memory case failed its interference re-check and was not stored."""


class StorageError(OSError):
    """A durable write or read failed."""


class PlannerTransportError(RuntimeError):
    """The planner backend could not be reached or gave no usable response."""


class PlannerExhaustedError(PlannerTransportError):
    """A scripted planner ran out of canned answers."""


class PlannerOverflowError(RuntimeError):
    """The planner determined the batch cannot fit the build volume."""

    def __init__(self, rejected_ids: list[str]):
        self.rejected_ids = list(rejected_ids)
        super().__init__(f"parts do not fit: {', '.join(self.rejected_ids)}")


class UnknownRunError(KeyError):
    """No run with the given id exists."""


class RunNotActiveError(RuntimeError):
    """The run exists but is no longer accepting interventions."""
