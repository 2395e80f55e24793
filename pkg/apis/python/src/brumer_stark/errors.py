"""
Exception hierarchy shared by every module.

Input problems derive from `ValueError`, numeric failures from
`ArithmeticError`, so callers that only know the builtins keep working. Each
class carries the process exit code the command line maps it to.
"""


class BrumerStarkError(Exception):
    exit_code = 7


class ConfigError(BrumerStarkError, ValueError):
    exit_code = 2


class NotFundamental(BrumerStarkError, ValueError):
    exit_code = 3


class NotReal(BrumerStarkError, ValueError):
    exit_code = 3


class NotInert(BrumerStarkError, ValueError):
    exit_code = 4


class Ramified(BrumerStarkError, ValueError):
    exit_code = 4


class UnsupportedSmoothing(BrumerStarkError, ValueError):
    exit_code = 5


class LevelTooDeep(BrumerStarkError, ValueError):
    exit_code = 5


class NotUnit(BrumerStarkError, ValueError):
    exit_code = 7


class DomainError(BrumerStarkError, ValueError):
    exit_code = 7


class NonSquare(BrumerStarkError, ValueError):
    exit_code = 7


class PrecisionExhausted(BrumerStarkError, ArithmeticError):
    exit_code = 6


class InsufficientPrecision(BrumerStarkError, ArithmeticError):
    exit_code = 6


class NoPurePDenominator(BrumerStarkError, ArithmeticError):
    exit_code = 7


class PalindromyFailure(BrumerStarkError, ArithmeticError):
    exit_code = 7


class ModulusTooSmall(BrumerStarkError, ArithmeticError):
    exit_code = 7


class CacheError(BrumerStarkError, ArithmeticError):
    exit_code = 8
