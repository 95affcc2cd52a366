"""Exception hierarchy shared by the library and the command line."""

from dataclasses import dataclass


class NondetError(Exception):
    """Base class for every error raised by nondetlab."""


class UsageError(NondetError, ValueError):
    """Invalid parameter or parameter combination (exit code 1)."""


class DataError(NondetError, ValueError):
    """Invalid input data or a failed validation (exit code 2)."""


@dataclass(frozen=True)
class TraceSchemaIssue:
    """One schema violation found while ingesting traces."""

    line: int
    message: str
    record: str | None = None

    def __str__(self) -> str:
        where = f"line {self.line}"
        if self.record:
            where += f" ({self.record})"
        return f"{where}: {self.message}"


class TraceParseError(DataError):
    """Raised when trace ingestion finds schema violations in strict mode."""

    def __init__(self, issues: list[TraceSchemaIssue]):
        self.issues = issues
        first = str(issues[0]) if issues else "unknown error"
        extra = f" (+{len(issues) - 1} more)" if len(issues) > 1 else ""
        super().__init__(f"{first}{extra}")

    @property
    def line(self) -> int | None:
        """Line number of the first violation."""
        return self.issues[0].line if self.issues else None
