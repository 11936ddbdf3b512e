"""Exception types shared across the package."""


class SurveyGlmError(Exception):
    """Base class for every error raised by svyglm."""


class CsvFormatError(SurveyGlmError):
    """Structurally malformed delimited input (ragged row, blank header, ...)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class MissingColumnError(SurveyGlmError):
    """A bound column name is absent from the input header."""


class EmptyDataError(SurveyGlmError):
    """Input contained a header but no data rows."""


class BadWeightError(SurveyGlmError):
    """A sampling weight is missing, non-finite, or not strictly positive."""


class BadFpcError(SurveyGlmError):
    """A sampling fraction is missing, outside [0, 1), or inconsistent within a stratum."""


class PsuStratumConflictError(SurveyGlmError):
    """The same PSU label appears under two different strata."""


class UnknownColumnError(SurveyGlmError):
    """A model term references a column that does not exist."""


class TypeMismatchError(SurveyGlmError):
    """A column has the wrong kind (categorical where numeric is required, or vice versa)."""


class UnknownReferenceLevelError(SurveyGlmError):
    """The requested reference level is not among the observed levels."""


class AllRowsDroppedError(SurveyGlmError):
    """Listwise deletion removed every row."""


class FormulaError(SurveyGlmError):
    """The model formula does not parse or is self-contradictory."""


class DomainError(SurveyGlmError):
    """A value lies outside the valid domain of a link or family."""


class NonPositiveDfError(SurveyGlmError):
    """Degrees of freedom for a dispersion or test are not positive."""


class RankDeficientError(SurveyGlmError):
    """The design (or a required matrix) is rank deficient."""

    def __init__(self, message, aliased=()):
        if aliased:
            message = f"{message} (aliased columns: {', '.join(aliased)})"
        super().__init__(message)
        self.aliased = tuple(aliased)


class SingletonStratumError(SurveyGlmError):
    """A stratum contains a single PSU and no fallback policy was selected."""


class DimensionMismatchError(SurveyGlmError):
    """Vector or matrix shapes do not conform."""


class SingularContrastError(SurveyGlmError):
    """A contrast matrix has rank zero (or an all-zero row)."""


class ConfigError(SurveyGlmError):
    """Invalid command-line, config-file, or simulation parameters."""
