"""Exception hierarchy.

Errors fall into four families that the command line maps onto exit codes:
design-string errors, input-data errors, analysis configuration errors and
computation errors.
"""

from __future__ import annotations


class GStudyError(Exception):
    """Base class for every error raised by this package."""

    category = "error"


# -- design strings ---------------------------------------------------------


class DesignError(GStudyError, ValueError):
    category = "design"


class DesignSyntaxError(DesignError):
    """Malformed design string (unexpected character or token)."""


class MixedOperatorAmbiguity(DesignSyntaxError):
    """Crossing and nesting operators mixed at one grouping level."""


class EmptyToken(DesignSyntaxError):
    """An operator or parenthesis with nothing on one side."""


class UnbalancedParens(DesignSyntaxError):
    pass


class DuplicateFacet(DesignError):
    pass


class TooFewFacets(DesignError):
    pass


# -- input data -------------------------------------------------------------


class DataError(GStudyError, ValueError):
    category = "data"


class EmptyTable(DataError):
    pass


class MissingColumn(DataError):
    def __init__(self, column: str, available=()):
        self.column = column
        self.available = list(available)
        msg = f"column {column!r} not found"
        if self.available:
            msg += f" (available: {', '.join(self.available)})"
        super().__init__(msg)


class NonNumericResponse(DataError):
    def __init__(self, row: int, value, column: str = "response"):
        self.row = row
        self.value = value
        self.column = column
        super().__init__(f"row {row}: {column} value {value!r} is not a finite number")


class MissingLabel(DataError):
    def __init__(self, row: int, column: str):
        self.row = row
        self.column = column
        super().__init__(f"row {row}: empty label in facet column {column!r}")


class Unbalanced(DataError):
    """An index combination has no observation (or more than one)."""

    def __init__(self, message: str, combination=None):
        self.combination = combination
        super().__init__(message)


class DuplicateObservation(Unbalanced):
    pass


class NestedCountMismatch(DataError):
    def __init__(self, facet: str, counts):
        self.facet = facet
        self.counts = dict(counts)
        super().__init__(
            f"nested facet {facet!r} has differing level counts across parents: "
            + ", ".join(f"{k}={v}" for k, v in self.counts.items())
        )


# -- analysis configuration -------------------------------------------------


class AnalysisError(GStudyError, ValueError):
    category = "usage"


class UnknownFacet(AnalysisError):
    pass


class NoObject(AnalysisError):
    pass


class UnknownRole(AnalysisError):
    pass


class EmptyCandidateList(AnalysisError):
    pass


class OutOfDomain(AnalysisError):
    pass


# -- computation ------------------------------------------------------------


class ComputationError(GStudyError):
    category = "computation"


class UnknownComponent(ComputationError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown component"


class MissingTValue(ComputationError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "missing T value"


class ZeroDf(ComputationError):
    def __init__(self, facet: str, component: str):
        self.facet = facet
        self.component = component
        super().__init__(
            f"component {component!r} has zero degrees of freedom: facet {facet!r} has a single level"
        )


class SingularSystem(ComputationError):
    pass


class NotCrossed(ComputationError, ValueError):
    pass
