class PipewatchError(Exception):
    """Base class for every error raised by pipewatch itself."""


class InputDomainError(PipewatchError, ValueError):
    """A value lies outside the domain an operation accepts (e.g. tick > m)."""


class ConfigurationError(PipewatchError):
    """A config file, scenario file or parameter set is invalid."""


class ParameterMismatchError(PipewatchError):
    """Logged parameters disagree with the ones in use."""


class LogFormatError(PipewatchError):
    def __init__(self, line_number: int, message: str):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class ReplayError(PipewatchError):
    def __init__(self, iteration: int, message: str):
        self.iteration = iteration
        super().__init__(f"iteration {iteration}: {message}")
