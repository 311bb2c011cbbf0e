"""Exception hierarchy shared by every Involutor module.

Each class carries a stable ``exit_code`` so the CLI can surface module
errors without inspecting messages.
"""


class InvolutorError(Exception):
    exit_code = 70


# ! --- Configuration ---


class ParseError(InvolutorError):
    """Malformed config text: syntax, unknown keys, float literals."""

    exit_code = 2

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        context = []
        if line is not None:
            context.append(f"line {line}")
        if key:
            context.append(f"key '{key}'")
        prefix = f"[{', '.join(context)}] " if context else ""
        super().__init__(f"{prefix}{message}")


class ConfigValidationError(InvolutorError):
    exit_code = 3


# ! --- Exact numerics ---


class InfiniteQueryPoint(InvolutorError):
    exit_code = 4


class LadderMember(InvolutorError):
    exit_code = 5


class LevelNotComputed(InvolutorError):
    exit_code = 6


# ! --- Countable sets ---


class IndexOutOfRange(InvolutorError):
    exit_code = 7


class BudgetExceeded(InvolutorError):
    """A budgeted scan of an opaque set ran out before deciding."""

    exit_code = 8

    def __init__(self, budget, message=None):
        self.budget = budget
        super().__init__(message or f"scan budget of {budget} entries exhausted")


# ! --- Validation gates ---


class InputValidationError(InvolutorError):
    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class DisjointnessError(InputValidationError):
    exit_code = 10


class DuplicateEnumerationError(InputValidationError):
    exit_code = 11


class IsolatedPointError(InputValidationError):
    exit_code = 12


# ! --- Builder ---


class SeparatorUnverifiable(InvolutorError):
    exit_code = 20


class SeedPartnerMissing(InvolutorError):
    exit_code = 21


class FExhausted(InvolutorError):
    exit_code = 22


class NotInDomain(InvolutorError):
    exit_code = 23


class WorkCapExceeded(InvolutorError):
    exit_code = 24


# ! --- Sigma baseline ---


class InvalidTarget(InvolutorError):
    exit_code = 30


class NotInX(InvolutorError):
    exit_code = 31


class UnsupportedChain(InvolutorError):
    exit_code = 32


# ! --- Analysis ---


class IsolatedTarget(InvolutorError):
    exit_code = 40


class NotYetPaired(InvolutorError):
    exit_code = 41


class NotDiscontinuityPoint(InvolutorError):
    exit_code = 42


class NotContinuityPoint(InvolutorError):
    exit_code = 43


class CapExceeded(InvolutorError):
    exit_code = 44

    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)


class OpaqueSetError(InvolutorError):
    exit_code = 45
