"""Exception hierarchy.

``ConfigError`` maps to CLI exit code 2, ``DataError`` to exit code 3.
"""


class GraphCepsError(Exception):
    pass


class ConfigError(GraphCepsError, ValueError):
    """Invalid configuration: graph definition, run config, CLI usage."""


class ContractError(GraphCepsError, ValueError):
    """A precondition of an operation was violated (shapes, symmetry, ...)."""


class DataError(GraphCepsError):
    """Input data is missing, malformed or unusable."""


class WavFormatError(DataError):
    pass


class UnsupportedFormatError(DataError):
    pass


class EmptyInputError(DataError, ValueError):
    pass


class TrainingError(DataError):
    pass
