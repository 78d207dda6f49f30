"""
Virtual Gromov-Witten invariants
Memoized correlator store seeded from virtual structure constants and
completed by WDVV (associativity) elimination over exact rationals.
"""
import logging
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from errors import (
    CacheFormatError,
    InconsistentSystemError,
    ReconstructionError,
    UnderdeterminedError,
    ValidationError,
)
from recursion_engine import ConstantsTable, HypersurfaceParams, virtual_constants

logger = logging.getLogger(__name__)

SEEDED = "seeded"
RECONSTRUCTED = "reconstructed"
PENDING = "pending"

# Sibling chains at high degree nest one frame per WDVV step
MIN_RECURSION_LIMIT = 20000


@dataclass(frozen=True, order=True)
class CorrelatorKey:
    """v(O_{e^{a_1}} ... O_{e^{a_n}})_d with exponents sorted non-increasing"""
    degree: int
    insertions: Tuple[int, ...]

    @classmethod
    def of(cls, degree: int, insertions: Iterable[int]) -> "CorrelatorKey":
        if degree < 0:
            raise ValidationError(f"degree must be non-negative, got {degree}")
        return cls(degree, tuple(sorted(insertions, reverse=True)))

    @property
    def n(self) -> int:
        return len(self.insertions)

    def __str__(self) -> str:
        return f"v({','.join(str(a) for a in self.insertions)})_{self.degree}"


@dataclass
class WdvvEquation:
    """Linear form sum(coefficients[key] * v(key)) + constant = 0"""
    corners: Tuple[int, int, int, int]
    extras: Tuple[int, ...]
    degree: int
    coefficients: Dict[CorrelatorKey, Fraction] = field(default_factory=dict)
    constant: Fraction = Fraction(0)

    def add_unknown(self, key: CorrelatorKey, coefficient: Fraction) -> None:
        value = self.coefficients.get(key, Fraction(0)) + coefficient
        if value:
            self.coefficients[key] = value
        else:
            self.coefficients.pop(key, None)

    @property
    def is_trivial(self) -> bool:
        return not self.coefficients and self.constant == 0


class _ReconstructionCycle(Exception):
    def __init__(self, key: CorrelatorKey):
        self.key = key
        super().__init__(str(key))


class CorrelatorStore:
    """Correlator values for one hypersurface (N, k).

    Seeds come from the virtual structure constants at level N; everything
    else is reconstructed on demand and memoized.
    """

    def __init__(self, params: HypersurfaceParams, seed_table: Optional[ConstantsTable] = None,
                 d_max: Optional[int] = None, allow_unvalidated: bool = False):
        self.params = params
        if seed_table is None:
            if d_max is None:
                raise ValidationError("CorrelatorStore needs either a seed table or d_max")
            seed_table = virtual_constants(params.N, params.k, d_max, allow_unvalidated=allow_unvalidated)
        if seed_table.k != params.k:
            raise ValidationError(f"seed table is for k={seed_table.k}, store is for k={params.k}")
        self.seed_table = seed_table
        self.values: Dict[CorrelatorKey, Fraction] = {}
        self.status: Dict[CorrelatorKey, str] = {}
        self._seeded_degrees = set()
        self._pending = set()
        if sys.getrecursionlimit() < MIN_RECURSION_LIMIT:
            sys.setrecursionlimit(MIN_RECURSION_LIMIT)

    def __len__(self) -> int:
        return len(self.values)

    def _store(self, key: CorrelatorKey, value: Fraction, status: str) -> None:
        known = self.values.get(key)
        if known is not None and known != value:
            raise InconsistentSystemError(key, known, value)
        self.values[key] = value
        self.status[key] = status

    def ensure_seeded(self, degree: int) -> None:
        if degree not in self._seeded_degrees:
            seed(self, degree)

    def evaluate(self, key: CorrelatorKey) -> Fraction:
        """Value of a canonical key after divisor and flat-metric normalization"""
        reduced, multiplier = normalize(key, self.params)
        if reduced is None:
            return Fraction(0)
        if reduced.degree == 0:
            return multiplier * self.params.k
        self.ensure_seeded(reduced.degree)
        if reduced in self.values:
            return multiplier * self.values[reduced]
        if reduced in self._pending:
            raise _ReconstructionCycle(reduced)
        return multiplier * reconstruct(self, reduced)

    def value(self, insertions: Sequence[int], degree: int) -> Fraction:
        return self.evaluate(CorrelatorKey.of(degree, insertions))

    def records(self) -> List[Tuple[CorrelatorKey, Fraction, str]]:
        return [(key, self.values[key], self.status[key]) for key in sorted(self.values)]

    def load_records(self, records: Iterable[Tuple[CorrelatorKey, Fraction]]) -> int:
        """Merge cached values, rejecting any that break the selection rule"""
        count = 0
        for key, value in records:
            if any(a < 0 or a > self.params.top for a in key.insertions):
                raise CacheFormatError(f"cached key {key} has an exponent outside 0..{self.params.top}")
            if value and not self.params.selection_holds(key.degree, key.insertions):
                raise CacheFormatError(f"cached key {key} violates the selection rule")
            self._store(key, value, SEEDED if _is_seed_shaped(key) else RECONSTRUCTED)
            count += 1
        logger.info(f"loaded {count} cached correlators for N={self.params.N}, k={self.params.k}")
        return count


def _is_seed_shaped(key: CorrelatorKey) -> bool:
    """Keys that `seed` writes: degree-0 three-point, and two-point or O_e three-point at d >= 1"""
    if key.degree == 0:
        return len(key.insertions) == 3
    return len(key.insertions) == 2 or (len(key.insertions) == 3 and 1 in key.insertions)


def _three_point_seed(params: HypersurfaceParams, table: ConstantsTable, degree: int,
                      a: int) -> Fraction:
    """v(O_{e^a} O_{e^b} O_e)_d with b fixed by the selection rule"""
    N, k = params.N, params.k
    shift = (k - N) * degree
    L = table.lookup(N)
    return k * (L(degree, N - 2 - a) - L(degree, 1 + shift))


def seed(store: CorrelatorStore, degree: int) -> None:
    """Store the three-point values with one O_e insertion at this degree"""
    params = store.params
    N, k = params.N, params.k
    if degree == 0:
        for a, b, c in combinations_with_replacement(range(params.top, -1, -1), 3):
            if a + b + c == params.top:
                store._store(CorrelatorKey.of(0, (a, b, c)), Fraction(k), SEEDED)
        store._seeded_degrees.add(0)
        return
    # raises TableMissError when the seed table stops short of this degree
    store.seed_table.row(N, degree)
    shift = (k - N) * degree
    count = 0
    for a in range(0, params.top + 1):
        b = N - 3 - a - shift
        if not 0 <= b <= params.top:
            continue
        value = _three_point_seed(params, store.seed_table, degree, a)
        store._store(CorrelatorKey.of(degree, (a, b, 1)), value, SEEDED)
        store._store(CorrelatorKey.of(degree, (a, b)), value / degree, SEEDED)
        count += 1
    store._seeded_degrees.add(degree)
    logger.debug(f"seeded {count} three-point correlators at d={degree}")


def normalize(key: CorrelatorKey, params: HypersurfaceParams) -> Tuple[Optional[CorrelatorKey], Fraction]:
    """Reduce a key with the flat-metric and divisor axioms.

    Returns:
        (reduced key, multiplier) with v(key) = multiplier * v(reduced), or
        (None, 0) when the correlator vanishes. Reduced keys at d >= 1 have
        at least three insertions and keep an O_e only in the three-point case.
    """
    zero = (None, Fraction(0))
    insertions = list(key.insertions)
    if any(a < 0 or a > params.top for a in insertions):
        return zero
    if not params.selection_holds(key.degree, insertions):
        return zero
    if key.degree == 0:
        if len(insertions) == 3:
            return CorrelatorKey.of(0, insertions), Fraction(1)
        return zero
    if 0 in insertions:
        return zero
    multiplier = Fraction(1)
    while len(insertions) > 3 and 1 in insertions:
        insertions.remove(1)
        multiplier *= key.degree
    while len(insertions) < 3:
        insertions.append(1)
        multiplier /= key.degree
    return CorrelatorKey.of(key.degree, insertions), multiplier


def _internal_index(params: HypersurfaceParams, degree: int, exponents: Sequence[int]) -> int:
    """Exponent i making v(exponents, i)_degree satisfy the selection rule"""
    return params.N - 4 + params.chern * degree - sum(a - 1 for a in exponents)


def _factor(store: CorrelatorStore, degree: int, exponents: Sequence[int],
            unknowns: FrozenSet[CorrelatorKey]):
    reduced, multiplier = normalize(CorrelatorKey.of(degree, exponents), store.params)
    if reduced is None:
        return None, Fraction(0)
    if reduced in unknowns:
        return reduced, multiplier
    if reduced.degree == 0:
        return None, multiplier * store.params.k
    return None, store.evaluate(reduced) * multiplier


def wdvv_equation(store: CorrelatorStore, a: int, b: int, c: int, dbar: int,
                  extras: Sequence[int], degree: int,
                  unknowns: FrozenSet[CorrelatorKey] = frozenset()) -> WdvvEquation:
    """Associativity equation LHS - RHS for corners (a, b, c, dbar).

    Sums over degree splits d_1 = 0..degree, every bipartition of the extra
    insertions and the internal index i fixed by the selection rule. Keys in
    `unknowns` stay symbolic, everything else is evaluated into the constant.
    """
    params = store.params
    extras = tuple(extras)
    if a + b + c + dbar + sum(x - 1 for x in extras) != params.top + params.chern * degree:
        raise ValidationError(
            f"corners {(a, b, c, dbar)} with extras {extras} do not fit degree {degree}"
        )
    equation = WdvvEquation(corners=(a, b, c, dbar), extras=extras, degree=degree)
    for d1 in range(degree + 1):
        d2 = degree - d1
        for mask in range(1 << len(extras)):
            alpha = [x for bit, x in enumerate(extras) if mask >> bit & 1]
            beta = [x for bit, x in enumerate(extras) if not mask >> bit & 1]
            _accumulate(store, equation, Fraction(1), d1, d2, [a, b] + alpha, beta + [c, dbar], unknowns)
            _accumulate(store, equation, Fraction(-1), d1, d2, [a, c] + alpha, beta + [b, dbar], unknowns)
    return equation


def _accumulate(store: CorrelatorStore, equation: WdvvEquation, sign: Fraction, d1: int, d2: int,
                left: List[int], right: List[int], unknowns: FrozenSet[CorrelatorKey]) -> None:
    params = store.params
    i = _internal_index(params, d1, left)
    if not 0 <= i <= params.top:
        return
    left_key, left_value = _factor(store, d1, left + [i], unknowns)
    if left_key is None and not left_value:
        return
    right_key, right_value = _factor(store, d2, right + [params.top - i], unknowns)
    if right_key is None and not right_value:
        return
    if left_key is not None and right_key is not None:
        raise ReconstructionError(
            f"WDVV term {left_key} * {right_key} is quadratic in the unknowns"
        )
    if left_key is not None:
        equation.add_unknown(left_key, sign * left_value * right_value)
    elif right_key is not None:
        equation.add_unknown(right_key, sign * left_value * right_value)
    else:
        equation.constant += sign * left_value * right_value


def _tier_one(store: CorrelatorStore, key: CorrelatorKey) -> Fraction:
    """Solve the divisor-corner equation (1, a-1, B, C) for the target"""
    insertions = list(key.insertions)
    a = insertions.pop()
    B, C, rest = insertions[0], insertions[1], insertions[2:]
    equation = wdvv_equation(store, 1, a - 1, B, C, rest, key.degree, unknowns=frozenset({key}))
    coefficient = equation.coefficients.get(key)
    if not coefficient:
        raise UnderdeterminedError([key], f"divisor-corner equation does not involve {key}")
    return -equation.constant / coefficient


def reconstruct(store: CorrelatorStore, key: CorrelatorKey) -> Fraction:
    """Value of a normalized key whose exponents are all at least 2"""
    if key in store.values:
        return store.values[key]
    if key.n < 3 or min(key.insertions) < 2:
        raise ValidationError(f"{key} is not a normalized reconstruction target")
    store._pending.add(key)
    store.status[key] = PENDING
    try:
        value = _tier_one(store, key)
    except (_ReconstructionCycle, UnderdeterminedError) as e:
        logger.info(f"divisor-corner reconstruction of {key} stalled ({e}), solving its class")
        value = None
    finally:
        store._pending.discard(key)
        store.status.pop(key, None)
    if value is None:
        solved = _solve_class(store, key.degree, key.n)
        if key not in solved:
            raise UnderdeterminedError([key])
        value = solved[key]
    store._store(key, value, RECONSTRUCTED)
    logger.debug(f"{key} = {value}")
    return value


def _class_keys(params: HypersurfaceParams, degree: int, n: int) -> List[CorrelatorKey]:
    keys = []
    for exponents in combinations_with_replacement(range(params.top, 1, -1), n):
        if params.selection_holds(degree, exponents):
            keys.append(CorrelatorKey.of(degree, exponents))
    return keys


def _class_equations(store: CorrelatorStore, keys: List[CorrelatorKey],
                     unknowns: FrozenSet[CorrelatorKey]) -> List[WdvvEquation]:
    equations = []
    for key in keys:
        insertions = list(key.insertions)
        for a in sorted(set(insertions)):
            rest = list(insertions)
            rest.remove(a)
            for p in range(len(rest)):
                for q in range(p + 1, len(rest)):
                    extras = [x for r, x in enumerate(rest) if r not in (p, q)]
                    equation = wdvv_equation(store, 1, a - 1, rest[p], rest[q], extras,
                                             key.degree, unknowns)
                    if not equation.is_trivial:
                        equations.append(equation)
    return equations


def _solve_class(store: CorrelatorStore, degree: int, n: int) -> Dict[CorrelatorKey, Fraction]:
    """Gaussian elimination over every divisor-corner equation of one (d, n) class"""
    keys = [key for key in _class_keys(store.params, degree, n) if key not in store.values]
    unknowns = frozenset(keys)
    equations = _class_equations(store, keys, unknowns)
    logger.info(f"class d={degree}, n={n}: {len(keys)} unknowns, {len(equations)} equations")
    solved = solve_linear_system(equations, keys)
    for key, value in solved.items():
        store._store(key, value, RECONSTRUCTED)
    return solved


def solve_linear_system(equations: List[WdvvEquation],
                        keys: List[CorrelatorKey]) -> Dict[CorrelatorKey, Fraction]:
    """Exact row reduction; returns the unknowns the system pins down.

    Raises InconsistentSystemError when a row reduces to 0 = c with c != 0.
    """
    index = {key: j for j, key in enumerate(keys)}
    rows = []
    for equation in equations:
        row = [Fraction(0)] * (len(keys) + 1)
        for key, coefficient in equation.coefficients.items():
            row[index[key]] = coefficient
        row[-1] = -equation.constant
        rows.append(row)
    pivots = []
    r = 0
    for col in range(len(keys)):
        pivot = next((i for i in range(r, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        lead = rows[r][col]
        rows[r] = [entry / lead for entry in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                factor = rows[i][col]
                rows[i] = [x - factor * y for x, y in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    for row in rows[r:]:
        if row[-1] != 0:
            raise InconsistentSystemError("linear system", 0, row[-1])
    solved = {}
    for i, col in enumerate(pivots):
        if any(rows[i][j] != 0 for j in range(len(keys)) if j != col):
            continue
        solved[keys[col]] = rows[i][-1]
    return solved
