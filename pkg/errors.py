"""
Exception hierarchy for the structure constant engine
Every error carries the CLI exit code it maps to
"""
from typing import Optional, Sequence


class EngineError(Exception):
    """Base class for all engine failures"""
    exit_code = 1


class ValidationError(EngineError):
    """Parameters fail a module precondition"""
    exit_code = 2


class ScopeError(EngineError):
    """Requested (d, k-N) combination has no known kernel"""
    exit_code = 3


class ReconstructionError(EngineError):
    """WDVV reconstruction could not pin down a correlator"""
    exit_code = 4


class UnderdeterminedError(ReconstructionError):
    def __init__(self, keys: Sequence, message: Optional[str] = None):
        self.keys = list(keys)
        names = ", ".join(str(key) for key in self.keys)
        super().__init__(message or f"underdetermined correlators: {names}")


class InconsistentSystemError(ReconstructionError):
    def __init__(self, key, first, second):
        self.key = key
        super().__init__(f"inconsistent WDVV values for {key}: {first} != {second}")


class VerificationError(EngineError):
    """An acceptance check produced a value different from the expected one"""
    exit_code = 5


class ResidueError(EngineError):
    """Iterated residue left a non-polynomial remainder"""
    exit_code = 4


class SeriesInversionError(EngineError):
    """Leading coefficient of a series cannot be inverted"""
    exit_code = 4


class TableMissError(EngineError):
    """Lookup of a level or degree that was never computed"""
    exit_code = 4

    def __init__(self, N: int, k: int, d: int, n: Optional[int] = None):
        self.N, self.k, self.d, self.n = N, k, d, n
        where = f"(N={N}, k={k}, d={d}" + (f", n={n})" if n is not None else ")")
        super().__init__(f"structure constant table has no entry {where}")


class CacheFormatError(EngineError):
    """Cache file header or record cannot be parsed or fails validation"""
    exit_code = 2


class ResultsStoreError(EngineError):
    """The results database could not be created or written"""
    exit_code = 6
