"""Errors raised while reading artifact tables."""


class KsplotsError(Exception):
    """Base class for figure-pipeline errors."""


class MissingColumnError(KsplotsError):
    """An expected column (or JSON key) is absent; carries its name."""

    def __init__(self, column: str, path):
        super().__init__(f"missing column '{column}' in {path}")
        self.column = column


class EmptyInputError(KsplotsError):
    """The input table carries a header but no rows."""
