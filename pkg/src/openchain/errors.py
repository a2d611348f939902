"""Exception hierarchy. Each class carries the process exit code used by the CLI."""


class OpenChainError(Exception):
    exit_code = 1


class ConfigError(OpenChainError, ValueError):
    """Invalid configuration or validation failure."""

    exit_code = 2


class ParseError(ConfigError):
    pass


class CatalogError(ConfigError):
    pass


class InputError(ConfigError):
    """Bad input to plotting or sweep utilities."""


class ShapeError(OpenChainError, ValueError):
    exit_code = 2


class SizeError(OpenChainError, ValueError):
    exit_code = 2


class QubitIndexError(OpenChainError, IndexError):
    exit_code = 2


class NumericError(OpenChainError, ArithmeticError):
    exit_code = 3


class PositivityError(NumericError):
    pass


class NumericalInstabilityError(NumericError):
    pass


class OutputError(OpenChainError, OSError):
    exit_code = 4
