"""Exception types shared across the toolkit."""


class PsaAuditError(Exception):
    """Base class for all toolkit errors."""


class ParseError(PsaAuditError):
    """A charge string could not be parsed (no leading statute number)."""


class ConfigError(PsaAuditError):
    """A config file is malformed or a value falls outside its domain."""


class SchemaError(PsaAuditError):
    """A tabular input file does not match its documented schema."""


class NotDisposed(PsaAuditError):
    """A matched court case still has pending charges."""


class DegenerateInput(PsaAuditError):
    """A hypothesis test was given data for which its p-value is undefined."""


class EmptyInput(PsaAuditError):
    """An aggregation was given no records."""


class LengthMismatch(PsaAuditError):
    """Two columns that must be compared element-wise differ in length."""
