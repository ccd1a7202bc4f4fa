"""Exception hierarchy. The CLI maps each class to a process exit code."""


class HyperVsaError(Exception):
    exit_code = 1


class ConfigError(HyperVsaError, ValueError):
    exit_code = 2


class DataError(HyperVsaError, ValueError):
    exit_code = 3


class NumericError(HyperVsaError, ArithmeticError):
    exit_code = 4


class DegenerateTargetError(NumericError):
    """A similarity target whose factor has a zero-variance row."""

    def __init__(self, index: int):
        super().__init__(f"entity {index} has zero variance after PSD clipping")
        self.index = index
