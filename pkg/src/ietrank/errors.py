"""Exception hierarchy.  Each class carries the CLI exit code it maps to."""

from __future__ import annotations


class IETError(Exception):
    exit_code = 1
    code = "error"


class ParseError(IETError, ValueError):
    exit_code = 2
    code = "parse"


class DomainError(IETError, ValueError):
    """A precondition on the arguments does not hold."""

    exit_code = 3
    code = "precondition"


class TieError(DomainError):
    """Rauzy type undefined: the two competing lengths are equal.

    ``step`` is the (0-based) step at which the tie occurred; ``partial`` is
    whatever was computed before it, if anything.
    """

    code = "tie"

    def __init__(self, message: str, step: int = 0, partial=None):
        super().__init__(message)
        self.step = step
        self.partial = partial


class BudgetError(IETError):
    exit_code = 4
    code = "budget"

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class VerificationError(IETError):
    exit_code = 5
    code = "verification"
