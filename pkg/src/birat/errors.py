"""Exception hierarchy.  Every error carries the CLI exit code it maps to."""


class BiratError(Exception):
    exit_code = 1
    kind = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    def report(self):
        return {"error": self.kind, "message": str(self), "exit_code": self.exit_code,
                "details": self.details}


class UsageError(BiratError, ValueError):
    exit_code = 1
    kind = "usage"


class InvalidMapError(UsageError):
    kind = "invalid-map"


class ParseError(BiratError):
    exit_code = 2
    kind = "parse"


class ResourceError(BiratError):
    """Raised when a computation would exceed its configured budget.

    ``details["partial"]`` holds whatever was finished before the budget ran out.
    """

    exit_code = 3
    kind = "resource"


class StatisticalInsufficiency(BiratError):
    exit_code = 4
    kind = "statistical-insufficiency"


class IndeterminacyProximity(BiratError, ArithmeticError):
    """The image lift is numerically zero: the point sits on (or next to) the indeterminacy set."""

    exit_code = 5
    kind = "indeterminacy-proximity"


class QualityFailure(BiratError):
    exit_code = 6
    kind = "quality-failure"


EXIT_CODES = {
    0: "success",
    UsageError.exit_code: "usage error or invalid input",
    ParseError.exit_code: "file or parse error",
    ResourceError.exit_code: "resource budget exceeded",
    StatisticalInsufficiency.exit_code: "statistical insufficiency (too many rejected samples)",
    IndeterminacyProximity.exit_code: "indeterminacy proximity",
    QualityFailure.exit_code: "quality or verification failure",
}
