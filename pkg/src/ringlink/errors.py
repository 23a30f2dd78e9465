"""Exception types raised across the package."""


class ContractViolation(ValueError):
    """A caller broke a documented precondition."""


class ConfigurationError(ValueError):
    """A configuration is internally inconsistent or physically impossible."""


class OutOfCalibrationError(ValueError):
    """Geometry lies outside the envelope covered by the coupling calibration."""


class SingularLoadError(ZeroDivisionError):
    """The bridge load impedance is zero."""


class DegenerateNoiseError(ArithmeticError):
    """The without-ring population has zero spread, so SNR is undefined."""


class TimeRegressionError(ContractViolation):
    """A state machine was stepped with a timestamp earlier than the last one."""


class ScriptParseError(ValueError):
    """An event script line could not be parsed."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
