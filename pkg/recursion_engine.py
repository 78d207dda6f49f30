"""
Virtual structure constant recursion
Descends from the Beauville regime N >= 2k through the residue polynomials
Poly_d, builds true constants for Fano and near-Fano hypersurfaces and checks
the quantum ring relations they must satisfy.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, Iterator, List, Optional, Tuple

from sympy import ZZ
from sympy.polys.rings import ring

from config import settings
from errors import TableMissError, ValidationError, VerificationError
from exact_core import (
    MultiPoly,
    RationalSum,
    coefficient_map,
    iterated_residue,
    residue_ring,
)

logger = logging.getLogger(__name__)

VIRTUAL = "virtual"
TRUE = "true"


@dataclass(frozen=True)
class HypersurfaceParams:
    """Degree-k hypersurface in projective (N-1)-space"""
    N: int
    k: int

    def __post_init__(self):
        if self.N < 4:
            raise ValidationError(f"N must be at least 4, got {self.N}")
        if self.k < 2:
            raise ValidationError(f"k must be at least 2, got {self.k}")

    @property
    def chern(self) -> int:
        """First Chern class coefficient N - k"""
        return self.N - self.k

    @property
    def top(self) -> int:
        """Largest exponent of the additive basis e^0..e^{N-2}"""
        return self.N - 2

    def selection_holds(self, degree: int, exponents) -> bool:
        return (self.N - 5) + self.chern * degree == sum(a - 1 for a in exponents)

    def flasel_window(self, d: int) -> Tuple[int, int]:
        """Range of m where L_m^{N,k,d} may be non-zero (inclusive bounds)"""
        N, c = self.N, self.chern
        if c >= 2:
            return 0, (N - 1) - c * d
        if c == 1:
            if d == 1:
                return 1, N - 3
            return 0, N - 1 - c * d
        return 2 + (self.k - N) * d, N - 3


@dataclass
class ConstantRow:
    """Values of one (N, k, d) row over the window [lo, lo + len(values) - 1]"""
    lo: int
    values: List[Fraction]

    @property
    def hi(self) -> int:
        return self.lo + len(self.values) - 1

    def get(self, n: int) -> Fraction:
        if self.lo <= n <= self.hi:
            return self.values[n - self.lo]
        return Fraction(0)

    def trimmed(self) -> "ConstantRow":
        values = list(self.values)
        lo = self.lo
        while values and values[0] == 0:
            values.pop(0)
            lo += 1
        while values and values[-1] == 0:
            values.pop()
        return ConstantRow(lo, values)


@dataclass
class ConstantsTable:
    """L~ (virtual) or L (true) structure constants for a fixed k.

    Rows are stored per (N, d). The window of a row is the hull of its support
    as propagated through the recursion, so lookups outside it are exact zeros;
    asking for a level or degree never computed raises TableMissError.
    """
    kind: str
    k: int
    d_max: int
    rows: Dict[Tuple[int, int], ConstantRow] = field(default_factory=dict)

    def has_level(self, N: int) -> bool:
        return (N, 1) in self.rows

    def row(self, N: int, d: int) -> ConstantRow:
        try:
            return self.rows[(N, d)]
        except KeyError:
            raise TableMissError(N, self.k, d) from None

    def get(self, N: int, d: int, n: int) -> Fraction:
        return self.row(N, d).get(n)

    def window(self, N: int, d: int) -> Tuple[int, int]:
        row = self.row(N, d)
        return row.lo, row.hi

    def levels(self) -> List[int]:
        return sorted({N for N, _ in self.rows}, reverse=True)

    def entries(self, N: int, d: int) -> Iterator[Tuple[int, Fraction]]:
        row = self.row(N, d)
        for offset, value in enumerate(row.values):
            yield row.lo + offset, value

    def lookup(self, N: int):
        """Callable (d, n) -> value bound to level N"""
        def value(d: int, n: int) -> Fraction:
            return self.get(N, d, n)
        return value


@dataclass(frozen=True)
class OrderedPartitionMonomial:
    """x^{d_{i_0}} z_{i_1}^{d_{i_1}} .. z_{i_m}^{d_{i_m}} y^{d_{i_{m+1}}} with its split points"""
    degree: int
    exponents: Tuple[int, ...]
    splits: Tuple[int, ...]

    def __post_init__(self):
        if sum(self.exponents) != self.degree - 1:
            raise ValidationError(f"exponent sum {sum(self.exponents)} != d-1 = {self.degree - 1}")
        if self.splits[0] != 0 or self.splits[-1] != self.degree:
            raise ValidationError(f"split points {self.splits} must run from 0 to {self.degree}")

    @property
    def m(self) -> int:
        return len(self.splits) - 2

    @classmethod
    def from_monom(cls, degree: int, monom: Tuple[int, ...]) -> "OrderedPartitionMonomial":
        """Read a Poly_d exponent vector laid out as (x, y, z_1..z_{d-1}, ...)"""
        exponents = [monom[0]]
        splits = [0]
        for j in range(1, degree):
            e = monom[1 + j]
            if e:
                exponents.append(e)
                splits.append(j)
        exponents.append(monom[1])
        splits.append(degree)
        return cls(degree, tuple(exponents), tuple(splits))


def beauville_init(k: int) -> List[Fraction]:
    """Coefficients of k * prod_{j=1}^{k-1} (j w + (k - j))"""
    if k < 2:
        raise ValidationError(f"k must be at least 2, got {k}")
    _, w = ring("w", ZZ)
    product = w.ring.one * k
    for j in range(1, k):
        product *= j * w + (k - j)
    return [Fraction(int(product.coeff_wrt(w, n).LC)) for n in range(k)]


@lru_cache(maxsize=None)
def poly_d(d: int) -> MultiPoly:
    """Residue polynomial Poly_d in x, y, z_1..z_{d-1}, homogeneous of degree d-1"""
    if d < 1:
        raise ValidationError(f"degree must be positive, got {d}")
    R = residue_ring(d)
    if d == 1:
        return R.ring.one
    chain = [R.x] + list(R.w) + [R.y]
    numerator = R.ring.one * d
    factors = []
    owners = {}
    for j in range(1, d):
        wj = chain[j]
        numerator *= wj ** 2
        pole = wj - R.z[j - 1]
        cartan = 2 * wj - chain[j - 1] - chain[j + 1]
        factors += [(pole, 1), (cartan, 1)]
        owners[pole] = wj
        owners[cartan] = wj
    integrand = RationalSum.term(numerator, factors)
    result = iterated_residue(integrand, list(reversed(R.w)), owners, eps=R.eps)
    logger.info(f"Poly_{d} has {len(result)} monomials")
    return result


def delta_vector(mon: OrderedPartitionMonomial, N: int, k: int) -> Tuple[int, ...]:
    m, d = mon.m, mon.degree
    splits, exps = mon.splits, mon.exponents
    delta = []
    for j in range(1, m + 2):
        # component j of alpha + beta + gamma
        value = m + 1 - d
        if j >= 2:
            value += (splits[j - 1] - (j - 1)) + splits[j - 1] * (N - k)
        # eps_i has ones in positions 1..i
        value += sum(exps[i] - 1 for i in range(j, m + 1))
        value += exps[m + 1]
        delta.append(value)
    return tuple(delta)


def phi(mon: OrderedPartitionMonomial, n: int, N: int, k: int, table: ConstantsTable) -> Fraction:
    """prod_j L_{n + delta_j}^{N+1, k, i_j - i_{j-1}}"""
    delta = delta_vector(mon, N, k)
    value = Fraction(1)
    for j in range(1, mon.m + 2):
        value *= table.get(N + 1, mon.splits[j] - mon.splits[j - 1], n + delta[j - 1])
        if not value:
            break
    return value


@lru_cache(maxsize=None)
def _recursion_terms(d: int) -> Tuple[Tuple[OrderedPartitionMonomial, Fraction], ...]:
    return tuple(
        (OrderedPartitionMonomial.from_monom(d, monom), coeff)
        for monom, coeff in sorted(coefficient_map(poly_d(d)).items())
    )


def _descend_row(N: int, k: int, d: int, table: ConstantsTable) -> ConstantRow:
    """L^{N,k,d}_n = phi(Poly_d) over the propagated support window"""
    lo, hi = None, None
    live = []
    for mon, coeff in _recursion_terms(d):
        delta = delta_vector(mon, N, k)
        factors = [(table.row(N + 1, mon.splits[j] - mon.splits[j - 1]), delta[j - 1])
                   for j in range(1, mon.m + 2)]
        if any(not row.values for row, _ in factors):
            continue
        bounds = [(row.lo - shift, row.hi - shift) for row, shift in factors]
        start = max(b[0] for b in bounds)
        stop = min(b[1] for b in bounds)
        if start > stop:
            continue
        lo = start if lo is None else min(lo, start)
        hi = stop if hi is None else max(hi, stop)
        live.append((coeff, factors))
    if lo is None:
        return ConstantRow(0, [])
    values = []
    for n in range(lo, hi + 1):
        total = Fraction(0)
        for coeff, factors in live:
            term = coeff
            for row, shift in factors:
                term *= row.get(n + shift)
                if not term:
                    break
            total += term
        values.append(total)
    return ConstantRow(lo, values).trimmed()


def _check_degree(d_max: int, allow_unvalidated: bool) -> None:
    if d_max < 1:
        raise ValidationError(f"d_max must be positive, got {d_max}")
    if d_max > settings.MAX_VALIDATED_DEGREE and not allow_unvalidated:
        raise ValidationError(
            f"d_max={d_max} exceeds the validated range {settings.MAX_VALIDATED_DEGREE}; "
            f"pass --allow-unvalidated-degree to override"
        )


def _initial_table(kind: str, N0: int, k: int, d_max: int) -> ConstantsTable:
    table = ConstantsTable(kind=kind, k=k, d_max=d_max)
    table.rows[(N0, 1)] = ConstantRow(0, beauville_init(k)).trimmed()
    for d in range(2, d_max + 1):
        table.rows[(N0, d)] = ConstantRow(0, [])
    return table


def _descend(table: ConstantsTable, start: int, stop: int, k: int, d_max: int,
             near_fano_level: Optional[int] = None) -> None:
    for level in range(start - 1, stop - 1, -1):
        for d in range(1, d_max + 1):
            if d == 1 and level == near_fano_level:
                above = table.row(level + 1, 1)
                shift = Fraction(factorial(k))
                values = [above.get(m) - shift for m in range(0, k)]
                table.rows[(level, 1)] = ConstantRow(0, values).trimmed()
                continue
            table.rows[(level, d)] = _descend_row(level, k, d, table)
        logger.info(f"k={k}: level N={level} done for d<={d_max}")


def virtual_constants(N: int, k: int, d_max: int, allow_unvalidated: bool = False) -> ConstantsTable:
    """L~^{N',k,d} for N <= N' <= max(N, 2k), d <= d_max"""
    HypersurfaceParams(N, k)
    _check_degree(d_max, allow_unvalidated)
    N0 = max(N, 2 * k)
    table = _initial_table(VIRTUAL, N0, k, d_max)
    _descend(table, N0, N, k, d_max)
    return table


def true_constants_near_fano(N: int, k: int, d_max: int, allow_unvalidated: bool = False) -> ConstantsTable:
    """True structure constants for N - k >= 1"""
    params = HypersurfaceParams(N, k)
    if params.chern < 1:
        raise ValidationError(f"near-Fano constants need N-k >= 1, got N={N}, k={k}")
    _check_degree(d_max, allow_unvalidated)
    N0 = max(N, 2 * k)
    table = _initial_table(TRUE, N0, k, d_max)
    near_fano_level = k + 1 if params.chern == 1 else None
    _descend(table, N0, N, k, d_max, near_fano_level=near_fano_level)
    return table


def cy_hypergeom_oracle(k: int, d: int) -> Tuple[Fraction, Fraction]:
    """(L~_0^{k,k,d}, L~_1^{k,k,d}) from the hypergeometric closed forms"""
    if k < 3:
        raise ValidationError(f"k must be at least 3, got {k}")
    if d < 1:
        raise ValidationError(f"degree must be positive, got {d}")
    a = [Fraction(factorial(k * j), factorial(j) ** k) for j in range(d + 1)]
    harmonic = [Fraction(0)] * (d + 1)
    running = Fraction(0)
    for i in range(1, d + 1):
        running += sum(Fraction(m, i * (k * i - m)) for m in range(1, k))
        harmonic[i] = running
    b = [a[j] * harmonic[j] for j in range(d + 1)]
    # (t - x) = b / a as a power series in e^x
    quotient = [Fraction(0)] * (d + 1)
    for j in range(d + 1):
        quotient[j] = (b[j] - sum(a[i] * quotient[j - i] for i in range(1, j + 1))) / a[0]
    return a[d], d * quotient[d]


@dataclass
class RelationReport:
    passed: bool
    N: int
    k: int
    d_max: int
    violation: Optional[str] = None


def _truncated_matmul(A, B, size: int, q_max: int):
    result = [[[Fraction(0)] * (q_max + 1) for _ in range(size)] for _ in range(size)]
    for i in range(size):
        for l in range(size):
            a = A[i][l]
            if not any(a):
                continue
            for j in range(size):
                b = B[l][j]
                if not any(b):
                    continue
                target = result[i][j]
                for p, ap in enumerate(a):
                    if not ap:
                        continue
                    for r in range(q_max + 1 - p):
                        if b[r]:
                            target[p + r] += ap * b[r]
    return result


def _matrix_power(M, exponent: int, size: int, q_max: int):
    identity = [[[Fraction(int(i == j))] + [Fraction(0)] * q_max for j in range(size)] for i in range(size)]
    result = identity
    for _ in range(exponent):
        result = _truncated_matmul(result, M, size, q_max)
    return result


def quantum_relation_check(N: int, k: int, d_max: int, table: Optional[ConstantsTable] = None) -> RelationReport:
    """Check (O_e)^{N-1} = k^k (O_e)^{k-1} q (or its N-k=1 shift) up to q^{d_max}"""
    params = HypersurfaceParams(N, k)
    if params.chern < 1:
        raise ValidationError(f"ring relations need N-k >= 1, got N={N}, k={k}")
    if table is None:
        table = true_constants_near_fano(N, k, d_max)
    size = N - 1
    # column j holds O_e * O_{e^j}
    M = [[[Fraction(0)] * (d_max + 1) for _ in range(size)] for _ in range(size)]
    for j in range(size):
        if j + 1 < size:
            M[j + 1][j][0] += 1
        m = N - 2 - j
        for d in range(1, d_max + 1):
            value = table.get(N, d, m)
            if not value:
                continue
            target = j + 1 + (k - N) * d
            if not 0 <= target < size:
                return RelationReport(False, N, k, d_max,
                                      f"L_{m}^{{{N},{k},{d}}} = {value} points outside the basis")
            M[target][j][d] += value
    if params.chern == 1:
        shift = Fraction(factorial(k))
        for i in range(size):
            M[i][i][1] += shift
    lhs = _matrix_power(M, N - 1, size, d_max)
    rhs = _matrix_power(M, k - 1, size, d_max)
    coefficient = Fraction(k ** k)
    for i in range(size):
        for j in range(size):
            for p in range(d_max + 1):
                expected = coefficient * rhs[i][j][p - 1] if p >= 1 else Fraction(0)
                if lhs[i][j][p] != expected:
                    return RelationReport(
                        False, N, k, d_max,
                        f"entry ({i},{j}) at q^{p}: {lhs[i][j][p]} != {expected}",
                    )
    logger.info(f"ring relation holds for N={N}, k={k} up to q^{d_max}")
    return RelationReport(True, N, k, d_max)


def require_relation(N: int, k: int, d_max: int) -> None:
    report = quantum_relation_check(N, k, d_max)
    if not report.passed:
        raise VerificationError(f"ring relation violated for N={N}, k={k}: {report.violation}")
