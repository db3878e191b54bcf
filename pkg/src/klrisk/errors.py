"""Exception hierarchy.  Each class carries a short ``code`` used by the CLI."""


class KLRiskError(Exception):
    code = "error"


class DomainError(KLRiskError, ValueError):
    code = "domain"


class ShapeError(KLRiskError, ValueError):
    code = "shape"


class DataError(KLRiskError, ValueError):
    """Bad input file contents; ``row`` and ``column`` locate the offending cell."""

    code = "data"

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EncodingError(KLRiskError, ValueError):
    code = "encoding"


class SingularDesignError(KLRiskError):
    code = "singular_design"


class SeparationError(KLRiskError):
    code = "separation"


class ConvergenceError(KLRiskError):
    """Newton iterations exhausted; ``coefficients`` holds the last iterate."""

    code = "convergence"

    def __init__(self, message, coefficients=None):
        super().__init__(message)
        self.coefficients = coefficients


class ComparisonError(KLRiskError, ValueError):
    code = "comparison"


class RelationError(ComparisonError):
    code = "relation"


class IntervalSearchError(KLRiskError):
    """Test inversion failed; ``bracket`` is the last (lower, upper) pair examined."""

    code = "interval_search"

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class StudyError(KLRiskError):
    code = "study"
