"""Exception hierarchy shared across the engine.

The CLI maps these onto exit codes: SpecError -> 2, DataError -> 3,
EngineError and anything unexpected -> 4.
"""


class TlsearchError(Exception):
    """Base class for all engine errors."""


class SpecError(TlsearchError):
    """Specification text could not be parsed or is semantically invalid."""


class DataError(TlsearchError):
    """Input data (annotations, config, calibration samples) is malformed."""


class EngineError(TlsearchError):
    """An engine limit was hit or an internal contract was violated."""
