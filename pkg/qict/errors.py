"""
Exception hierarchy.

Every error carries a human-readable ``detail`` and the process ``exit_code``
the CLI reports for it. Library code raises; only ``qict.cli`` turns these
into exit statuses.
"""
from typing import Optional


class QICTError(Exception):
    """Base error with a detail message and an exit code."""

    exit_code = 4

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class ScenarioParseError(QICTError):
    exit_code = 2


class ScenarioValidationError(QICTError):
    """Invalid scenario content. ``field`` is the dotted path of the offender."""

    exit_code = 3

    def __init__(self, detail: str, field: str = ""):
        super().__init__(f"{field}: {detail}" if field else detail)
        self.field = field


class DomainError(QICTError):
    """Input outside the domain of an operation."""


class UndefinedEfficiencyError(QICTError):
    pass


class UndefinedVisibilityError(QICTError):
    pass


class EnumerationLimitError(QICTError):
    pass


class AlignmentError(QICTError):
    pass


class ResamplingRequiredError(QICTError):
    pass


class UsageError(QICTError):
    pass


class UndefinedSNRError(QICTError):
    pass


class RangeError(QICTError):
    pass


class FitError(QICTError):
    pass
