"""Exception hierarchy shared by the library and the command line.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented process status without a lookup table.
"""


class SolitonForgeError(Exception):
    exit_code = 1

    @property
    def reason(self) -> str:
        return type(self).__name__


class ValidationError(SolitonForgeError, ValueError):
    """Input rejected before any computation starts."""

    exit_code = 2


class AlphaZero(ValidationError):
    pass


class DegenerateDirection(ValidationError):
    """2n + m = 0: the wave speed cannot be recovered from eta."""


class LambdaZero(ValidationError):
    """B^2 - 4C = 0 has no closed-form family here."""


class DegenerateAmplitude(ValidationError):
    """B - C - 1 = 0 makes the top ansatz coefficient vanish."""


class CaseMismatch(ValidationError):
    """Requested EXP/TRIG branch disagrees with the sign of Lambda."""


class BalanceError(SolitonForgeError, ValueError):
    exit_code = 2


class NonIntegerBalance(BalanceError):
    pass


class NoNonlinearTerm(BalanceError):
    pass


class NoSolutionFound(SolitonForgeError):
    exit_code = 4


class SingularPath(SolitonForgeError):
    """An integration segment crosses a pole of the expansion variable."""

    exit_code = 3


class VerificationFailed(SolitonForgeError):
    exit_code = 3
