"""Exception hierarchy shared by the library and the CLI.

Every error carries the process exit code the CLI reports for it.
"""


class TensorImputeError(Exception):
    """Base class for all library errors."""

    exit_code: int = 1


class InputError(TensorImputeError, ValueError):
    """Bad arguments, files or configuration."""

    exit_code = 2


class NumericalError(TensorImputeError, ArithmeticError):
    """An estimation step cannot produce a usable answer from the data."""

    exit_code = 3


class ModeError(InputError):
    def __init__(self, mode: int, order: int) -> None:
        super().__init__(f"mode {mode + 1} is out of range for an order-{order} tensor")
        self.mode = mode
        self.order = order


class DimensionError(InputError):
    pass


class ConfigError(InputError):
    pass


class UnknownSettingError(InputError):
    pass


class MalformedCSVError(InputError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnidentifiableRowError(NumericalError):
    def __init__(self, mode: int, row: int) -> None:
        super().__init__(
            f"row {row + 1} of the mode-{mode + 1} unfolding is never observed; its loading row is unidentifiable"
        )
        self.mode = mode
        self.row = row


class EmptySliceError(NumericalError):
    def __init__(self, t: int) -> None:
        super().__init__(f"time slice {t + 1} has no observed entries")
        self.t = t


class EigenDecompositionError(NumericalError):
    pass


class SingularCovarianceError(NumericalError):
    pass
