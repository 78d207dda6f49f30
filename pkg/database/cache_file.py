"""
Correlator cache file
Versioned text file: a header line, then one `kind|d|exponents|p/q` record per line
"""
import fcntl
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from config import settings
from errors import CacheFormatError
from exact_core import format_rational, parse_rational
from gw_reconstruction import CorrelatorKey, CorrelatorStore
from recursion_engine import ConstantsTable

logger = logging.getLogger(__name__)

CACHE_VERSION = "v1"
HEADER_PREFIX = "# vgw-cache"

CORRELATOR = "gw"
TABLE_ENTRY = "vsc"


@dataclass
class CacheContents:
    N: int
    k: int
    correlators: List[Tuple[CorrelatorKey, Fraction]] = field(default_factory=list)
    # (d, n) -> value at level N
    table_entries: Dict[Tuple[int, int], Fraction] = field(default_factory=dict)


def default_cache_path(N: int, k: int) -> str:
    if settings.CACHE_PATH:
        return settings.CACHE_PATH
    return os.path.join(settings.CACHE_DIR, f"vgw_N{N}_k{k}.cache")


@contextmanager
def locked(path: str, mode: str):
    """Open `path` under an advisory lock (shared for reads, exclusive for writes)"""
    with open(path, mode) as handle:
        fcntl.flock(handle.fileno(), fcntl.LOCK_SH if mode == "r" else fcntl.LOCK_EX)
        try:
            yield handle
        finally:
            fcntl.flock(handle.fileno(), fcntl.LOCK_UN)


def format_header(N: int, k: int) -> str:
    return f"{HEADER_PREFIX} {CACHE_VERSION} N={N} k={k}"


def parse_header(line: str) -> Tuple[int, int]:
    fields = line.split()
    if len(fields) != 5 or " ".join(fields[:2]) != HEADER_PREFIX:
        raise CacheFormatError(f"not a correlator cache header: {line!r}")
    if fields[2] != CACHE_VERSION:
        raise CacheFormatError(f"unsupported cache version {fields[2]!r}, expected {CACHE_VERSION}")
    try:
        params = dict(item.split("=", 1) for item in fields[3:])
        return int(params["N"]), int(params["k"])
    except (KeyError, ValueError) as e:
        raise CacheFormatError(f"malformed cache header: {line!r}") from e


def format_record(kind: str, degree: int, exponents, value: Fraction) -> str:
    return f"{kind}|{degree}|{','.join(str(a) for a in exponents)}|{format_rational(value)}"


def parse_record(line: str, line_number: int):
    parts = line.split("|")
    if len(parts) != 4:
        raise CacheFormatError(f"line {line_number}: expected 4 fields, got {len(parts)}")
    kind, degree, exponents, value = parts
    try:
        degree = int(degree)
        exponents = tuple(int(a) for a in exponents.split(",")) if exponents else ()
    except ValueError as e:
        raise CacheFormatError(f"line {line_number}: {e}") from e
    if kind not in (CORRELATOR, TABLE_ENTRY):
        raise CacheFormatError(f"line {line_number}: unknown record kind {kind!r}")
    if "/" not in value:
        raise CacheFormatError(f"line {line_number}: value {value!r} is not p/q")
    return kind, degree, exponents, parse_rational(value)


def dumps(store: CorrelatorStore, table: Optional[ConstantsTable] = None) -> str:
    N, k = store.params.N, store.params.k
    lines = [format_header(N, k)]
    if table is not None:
        for d in range(1, table.d_max + 1):
            if (N, d) not in table.rows:
                continue
            for n, value in table.entries(N, d):
                lines.append(format_record(TABLE_ENTRY, d, (n,), value))
    for key, value, _status in store.records():
        lines.append(format_record(CORRELATOR, key.degree, key.insertions, value))
    return "\n".join(lines) + "\n"


def loads(text: str) -> CacheContents:
    lines = text.splitlines()
    if not lines:
        raise CacheFormatError("empty cache file")
    N, k = parse_header(lines[0])
    contents = CacheContents(N=N, k=k)
    for number, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        kind, degree, exponents, value = parse_record(line, number)
        if kind == CORRELATOR:
            contents.correlators.append((CorrelatorKey.of(degree, exponents), value))
        else:
            if len(exponents) != 1:
                raise CacheFormatError(f"line {number}: table entry needs exactly one index")
            contents.table_entries[(degree, exponents[0])] = value
    return contents


def save(store: CorrelatorStore, path: str, table: Optional[ConstantsTable] = None) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with locked(path, "a+") as handle:
        handle.seek(0)
        handle.truncate()
        handle.write(dumps(store, table))
    logger.info(f"saved {len(store)} correlators to {path}")


def load(path: str) -> Optional[CacheContents]:
    """Parsed cache, or None when the file does not exist yet"""
    if not os.path.exists(path):
        return None
    with locked(path, "r") as handle:
        return loads(handle.read())


def apply(contents: CacheContents, store: CorrelatorStore) -> int:
    """Check the cache matches the store's (N, k) and seed table, then merge it"""
    N, k = store.params.N, store.params.k
    if (contents.N, contents.k) != (N, k):
        raise CacheFormatError(
            f"cache is for N={contents.N}, k={contents.k}, store is for N={N}, k={k}"
        )
    for (d, n), value in contents.table_entries.items():
        if d > store.seed_table.d_max:
            continue
        if store.seed_table.get(N, d, n) != value:
            raise CacheFormatError(f"cached L~_{n}^{{{N},{k},{d}}} = {value} disagrees with the recursion")
    return store.load_records(contents.correlators)
