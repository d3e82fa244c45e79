"""Exception types shared across the package."""


class RfcorrectError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RfcorrectError, ValueError):
    """A parameter or specification field violates its invariants."""


class SchemaError(RfcorrectError, ValueError):
    """Column names or shapes do not match what a model expects."""


class MissingColumnError(SchemaError):
    """A required column is absent from a CSV header."""


class EmptyDataError(RfcorrectError, ValueError):
    """An operation received (or produced) zero usable rows."""


class DegenerateDataError(RfcorrectError, ValueError):
    """Input data is degenerate for the requested statistic or fit."""


class RankDeficiencyError(RfcorrectError, ValueError):
    """The least-squares design matrix is rank deficient."""

    def __init__(self, dependent_columns):
        self.dependent_columns = list(dependent_columns)
        cols = ", ".join(self.dependent_columns)
        super().__init__(f"design matrix is rank deficient; dependent column(s): {cols}")


class DomainError(RfcorrectError, ValueError):
    """An argument lies outside a function's mathematical domain."""
