class FairAuditError(Exception):
    """Base class for input and configuration errors (CLI exit code 1)."""


class SchemaError(FairAuditError):
    pass


class MissingColumn(SchemaError):
    def __init__(self, column, source=None):
        self.column = column
        where = f" in {source}" if source else ""
        super().__init__(f"MissingColumn({column!r}){where}")


class DataError(FairAuditError):
    pass


class EmptyDataset(DataError):
    pass


class UnparseableNumeric(DataError):
    def __init__(self, column, line, value):
        self.column = column
        self.line = line
        self.value = value
        super().__init__(f"column {column!r}, line {line}: cannot parse {value!r} as a number")


class NonBinaryLabel(DataError):
    pass


class ScoreFileError(DataError):
    pass


class MetricUndefined(FairAuditError):
    """A metric whose defining denominator is zero, or too few groups."""


class SplitMismatch(FairAuditError):
    """Paired comparison attempted over different data splits."""


class ConfigError(FairAuditError):
    pass
