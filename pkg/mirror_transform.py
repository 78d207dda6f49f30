"""
Generalized mirror transformation
Assembles true structure constants L_n^{N,k,d} (k >= N) from virtual data:
V kernels read off reconstructed correlators, their linear parts and
hidden quadratic parts, the modified G kernels and the Calabi-Yau
specialization through the mirror map.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import factorial, prod
from typing import Callable, Dict, List, Tuple

from sympy import QQ, ZZ
from sympy.polys.ring_series import rs_exp, rs_mul, rs_series_inversion, rs_series_reversion, rs_subs
from sympy.polys.rings import PolyElement, ring
from sympy.utilities.iterables import partitions as sympy_partitions

from errors import ScopeError, SeriesInversionError, ValidationError
from exact_core import to_domain, to_fraction
from gw_reconstruction import CorrelatorStore
from recursion_engine import ConstantsTable

logger = logging.getLogger(__name__)

# Highest degree with a known kernel, per k - N
MAX_KERNEL_DEGREE = {0: 5, 1: 5}
GENERAL_KERNEL_DEGREE = 3


@dataclass(frozen=True)
class Partition:
    """d_1 >= d_2 >= ... >= d_l >= 1"""
    parts: Tuple[int, ...] = ()

    @classmethod
    def of(cls, *parts: int) -> "Partition":
        if any(p < 1 for p in parts):
            raise ValidationError(f"partition parts must be positive, got {parts}")
        return cls(tuple(sorted(parts, reverse=True)))

    @property
    def weight(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def multiplicity(self, i: int) -> int:
        return self.parts.count(i)

    def multiplicities(self) -> Dict[int, int]:
        return {i: self.parts.count(i) for i in sorted(set(self.parts))}

    def union(self, f: int) -> "Partition":
        return Partition.of(*self.parts, f)

    def __str__(self) -> str:
        if not self.parts:
            return "()"
        return "+".join(f"({p})" for p in self.parts)


@dataclass(frozen=True)
class TransformTerm:
    """One (m, sigma_m) summand of the generalized mirror transformation"""
    partition: Partition
    coefficient: Fraction
    seed_product: Fraction
    kernel: Fraction

    @property
    def value(self) -> Fraction:
        return self.coefficient * self.seed_product * self.kernel


def partitions(m: int) -> List[Partition]:
    """Partitions of m, largest part first: 3 -> (3), (2,1), (1,1,1)"""
    if m < 0:
        raise ValidationError(f"cannot partition a negative integer {m}")
    if m == 0:
        return [Partition()]
    result = []
    # sympy reuses the yielded dict
    for counts in sympy_partitions(m):
        parts = []
        for part, mult in sorted(counts.items(), reverse=True):
            parts.extend([part] * mult)
        result.append(Partition(tuple(parts)))
    return result


def _shift(store: CorrelatorStore) -> int:
    return store.params.k - store.params.N


def v_kernel(n: int, d: int, sigma: Partition, store: CorrelatorStore) -> Fraction:
    """V_{d-m}^{N,k,d}(n; sigma) from the reconstructed virtual correlator"""
    m = sigma.weight
    if d <= m:
        raise ValidationError(f"V needs d > |sigma|, got d={d}, sigma={sigma}")
    N, k = store.params.N, store.params.k
    shift = _shift(store)
    exponents = [N - 2 - n, n - 1 - shift * d] + [1 + shift * p for p in sigma.parts]
    value = store.value(exponents, d - m)
    return value / k / Fraction(d - m) ** (sigma.length - 1)


def pi_f(g: Callable[[int], Fraction], f: int, d: int, N: int, k: int) -> Callable[[int], Fraction]:
    """n -> sum_j g(n-j) - sum_j g(1+(k-N)(d+f)-j), j = 0..(k-N)f"""
    width = (k - N) * f
    anchor = 1 + (k - N) * (d + f)

    def image(n: int) -> Fraction:
        return (sum((g(n - j) for j in range(width + 1)), Fraction(0))
                - sum((g(anchor - j) for j in range(width + 1)), Fraction(0)))
    return image


def a_coeffs(sigma: Partition, N: int, k: int) -> List[Fraction]:
    """Coefficients of prod_j (1 - x^{d_j(k-N)+1}) / (1 - x)"""
    if k < N:
        raise ValidationError(f"A coefficients need k >= N, got N={N}, k={k}")
    R, x = ring("x", ZZ)
    product = R.one
    for p in sigma.parts:
        product *= sum((x ** j for j in range(p * (k - N) + 1)), R.zero)
    terms = dict(product.iterterms())
    top = (k - N) * sigma.weight
    return [to_fraction(terms.get((j,), 0)) for j in range(top + 1)]


def linear_part(n: int, d: int, m: int, sigma: Partition, N: int, k: int,
                table: ConstantsTable) -> Fraction:
    """Part of V_{d-m}^{N,k,d}(n; sigma) linear in L~^{N,k,d-m}"""
    if sigma.weight != m:
        raise ValidationError(f"partition {sigma} does not have weight {m}")
    L = table.lookup(N)
    reference = 1 + (k - N) * d
    return sum(
        (A * (L(d - m, n - j) - L(d - m, reference - j)) for j, A in enumerate(a_coeffs(sigma, N, k))),
        Fraction(0),
    )


def _hi_terms(j: int, n: int, L: Callable[[int], Fraction]) -> Fraction:
    window = sum((L(n - i) for i in range(5)), Fraction(0))
    if j == 1:
        return L(n) * L(n - 4) - L(3) * window + L(2) * (L(n - 1) + L(n - 2) + L(n - 3))
    if j == 2:
        return L(n) * L(n - 3) + L(n - 1) * L(n - 4) - L(4) * window + L(2) * L(n - 2)
    if j == 3:
        return (L(n) * L(n - 2) + L(n - 1) * L(n - 3) + L(n - 2) * L(n - 4)
                - L(5) * window - L(2) * L(n - 2))
    if j == 4:
        return L(n - 1) * L(n - 3) - L(4) * (L(n - 1) + L(n - 2) + L(n - 3)) + L(3) * L(n - 2)
    raise ValidationError(f"hi index must be in 1..4, got {j}")


def hi_poly(j: int, n: int, k: int, table: ConstantsTable) -> Fraction:
    """Quadratic correction hi_j(n) in L~^{k-1,k,1}, normalized to vanish at n=6"""
    level = table.lookup(k - 1)

    def L(i: int) -> Fraction:
        return level(1, i)
    return _hi_terms(j, n, L) - _hi_terms(j, 6, L)


def v_tilde(n: int, d: int, f: int, sigma: Partition, store: CorrelatorStore) -> Fraction:
    """pi_f applied to V_{d-m}^{N,k,d}(.; sigma), an approximation of the sigma+(f) kernel"""
    N, k = store.params.N, store.params.k
    image = pi_f(lambda i: v_kernel(i, d, sigma, store), f, d, N, k)
    return image(n)


def hi_part(n: int, d: int, f: int, sigma: Partition, store: CorrelatorStore) -> Fraction:
    """V_{d-m}^{N,k,d+f}(n; sigma+(f)) minus its pi_f approximation"""
    return v_kernel(n, d + f, sigma.union(f), store) - v_tilde(n, d, f, sigma, store)


def _check_scope(d: int, store: CorrelatorStore) -> None:
    shift = _shift(store)
    if shift < 0:
        raise ValidationError(
            f"mirror transformation needs k >= N, got N={store.params.N}, k={store.params.k}"
        )
    if d <= GENERAL_KERNEL_DEGREE:
        return
    limit = MAX_KERNEL_DEGREE.get(shift)
    if limit is None or d > limit:
        raise ScopeError(f"no G kernel is known for d={d} with k-N={shift} (beyond the supported scope)")


# (d, sigma) whose G differs from V when k - N = 1
MODIFIED_KERNELS = frozenset({(4, (1, 1)), (5, (2, 1)), (5, (1, 1, 1)), (5, (1, 1))})


class _NearCalabiYauBrackets:
    """Building blocks of the k-N=1 kernels at d = 4, 5.

    Kernels with d - m = 1 are the exact linear forms, so they are defined
    for every n. The others come from reconstructed correlators.
    """

    def __init__(self, store: CorrelatorStore):
        self.store = store
        self.N, self.k = store.params.N, store.params.k
        L = store.seed_table.lookup(self.N)
        self.L1 = lambda i: L(1, i)
        self.L2 = lambda i: L(2, i)
        self.L3 = lambda i: L(3, i)

    def V(self, n: int, d: int, *parts: int) -> Fraction:
        sigma = Partition.of(*parts)
        if d - sigma.weight == 1:
            return linear_part(n, d, sigma.weight, sigma, self.N, self.k, self.store.seed_table)
        return v_kernel(n, d, sigma, self.store)

    def lifted(self, n: int) -> Fraction:
        """pi_1 of V_2^{k-1,k,3}(.;(1))"""
        L2, V = self.L2, self.V
        return V(n, 3, 1) + V(n - 1, 3, 1) - (L2(5) - L2(3))

    def B(self, n: int) -> Fraction:
        L1, V = self.L1, self.V
        return (V(n, 2, 1) * (L1(n - 3) - L1(2))
                + (L1(n) - L1(2)) * V(n - 2, 2, 1)
                - V(n, 4, 2, 1) * (L1(3) - L1(2))
                - V(n, 4, 3) * (L1(4) - L1(2)))

    def B_A(self, n: int) -> Fraction:
        L1, L2, V = self.L1, self.L2, self.V
        return (V(n, 3, 1) * (L1(n - 4) - L1(2))
                + (L1(n) - L1(2)) * V(n - 2, 3, 1)
                - (V(n, 4, 2) + V(n - 1, 4, 2) - (L2(6) - L2(3))) * (L1(3) - L1(2))
                - V(n, 5, 4) * (L2(5) - L2(3)))

    def B_B(self, n: int) -> Fraction:
        L1, L2, V = self.L1, self.L2, self.V
        return (V(n, 2, 1) * (L2(n - 3) - L2(3))
                + (L2(n) - L2(3)) * V(n - 3, 2, 1)
                - V(n, 5, 3, 1) * (L2(4) - L2(3))
                - V(n, 5, 3) * (L1(4) - L1(2)))

    def hi(self, n: int) -> List[Fraction]:
        return [hi_poly(j, n, self.k, self.store.seed_table) for j in range(1, 5)]


def _modified_kernel(n: int, d: int, sigma: Partition, brackets: _NearCalabiYauBrackets) -> Fraction:
    """G for the kernels in MODIFIED_KERNELS, assembled from lower-degree V"""
    b = brackets
    if d == 4:
        return b.lifted(n) + Fraction(3, 4) * b.B(n)
    h1, h2, h3, h4 = b.hi(n)
    if sigma.parts == (2, 1):
        return (b.V(n, 4, 2) + b.V(n - 1, 4, 2) - (b.L2(6) - b.L2(3))
                + Fraction(8, 5) * h1 + h2 + Fraction(4, 5) * h3 - Fraction(3, 5) * h4)
    if sigma.parts == (1, 1, 1):
        return (b.lifted(n) + Fraction(4, 5) * b.B(n)
                + b.lifted(n - 1) + Fraction(4, 5) * b.B(n - 1)
                - b.V(6, 3, 1)
                + Fraction(46, 25) * (h1 + h2) + Fraction(16, 25) * h3 - Fraction(2, 25) * h4)
    L1 = b.L1
    return (b.V(n, 4, 1) + b.V(n - 1, 4, 1) - (b.L3(6) - b.L3(4))
            + Fraction(4, 5) * b.B_A(n) + Fraction(3, 5) * b.B_B(n)
            - (L1(3) - L1(2)) * (Fraction(6, 5) * h1 + h2 + Fraction(3, 5) * h3 - Fraction(1, 5) * h4))


def quartic_hidden_part(n: int, store: CorrelatorStore) -> Fraction:
    """hi_2^{k-1,k,4}(n;(1)+(1)), the quadratic remainder of V_2^{k-1,k,4}(n;(1)+(1))

    Built from linear forms only, so it extends past the index window.
    """
    if _shift(store) != 1:
        raise ValidationError(f"the quartic hidden part needs k-N=1, got N={store.params.N}, k={store.params.k}")
    return Fraction(1, 2) * _NearCalabiYauBrackets(store).B(n)


def g_kernel(n: int, d: int, sigma: Partition, store: CorrelatorStore) -> Fraction:
    """G_{d-m}^{N,k,d}(n; sigma): V, or the modified formula where one is known"""
    _check_scope(d, store)
    if _shift(store) == 1 and (d, sigma.parts) in MODIFIED_KERNELS:
        return _modified_kernel(n, d, sigma, _NearCalabiYauBrackets(store))
    return v_kernel(n, d, sigma, store)


def transform_coefficient(d: int, sigma: Partition) -> Fraction:
    """(-1)^l d^l / (prod d_j prod mul(i)!)"""
    denominator = prod(sigma.parts) * prod(factorial(mult) for mult in sigma.multiplicities().values())
    return Fraction((-d) ** sigma.length, denominator)


def transform_terms(n: int, d: int, store: CorrelatorStore) -> List[TransformTerm]:
    _check_scope(d, store)
    N = store.params.N
    shift = _shift(store)
    L = store.seed_table.lookup(N)
    terms = []
    for m in range(d):
        for sigma in partitions(m):
            seed_product = prod((L(p, 1 + shift * p) for p in sigma.parts), start=Fraction(1))
            coefficient = transform_coefficient(d, sigma)
            if not seed_product:
                terms.append(TransformTerm(sigma, coefficient, seed_product, Fraction(0)))
                continue
            terms.append(TransformTerm(sigma, coefficient, seed_product, g_kernel(n, d, sigma, store)))
    return terms


def generalized_transform(n: int, d: int, store: CorrelatorStore) -> Fraction:
    """True structure constant L_n^{N,k,d} for k >= N"""
    value = sum((term.value for term in transform_terms(n, d, store)), Fraction(0))
    logger.debug(f"L_{n}^{{{store.params.N},{store.params.k},{d}}} = {value}")
    return value


# X is the virtual side variable e^x, Q the true side variable e^t
_SERIES_RING, _X, _Q = ring("X, Q", QQ)


def _coefficients(p: PolyElement, variable: PolyElement, order: int) -> List[Fraction]:
    return [to_fraction(p.coeff(variable ** i)) for i in range(order + 1)]


def _invert_series(p: PolyElement, order: int) -> PolyElement:
    """1/p modulo X^{order+1}"""
    if not p.coeff(1):
        raise SeriesInversionError("series with zero constant term has no inverse")
    return rs_series_inversion(p, _X, order + 1)


def _virtual_series(table: ConstantsTable, k: int, n: int, order: int) -> PolyElement:
    """1 + sum_d L~_n^{k,k,d} X^d"""
    L = table.lookup(k)
    return _SERIES_RING.one + sum((to_domain(L(d, n)) * _X ** d for d in range(1, order + 1)), _SERIES_RING.zero)


def _check_calabi_yau(table: ConstantsTable, k: int, d: int) -> None:
    if table.k != k:
        raise ValidationError(f"table is for k={table.k}, expected k={k}")
    if not table.has_level(k):
        raise ValidationError(f"table has no level N={k}")
    if d > table.d_max:
        raise ValidationError(f"table stops at d={table.d_max}, asked for d={d}")


def cy_transform(n: int, d: int, k: int, table: ConstantsTable) -> Fraction:
    """L_n^{k,k,d} through the exponential of the mirror map coefficients"""
    _check_calabi_yau(table, k, d)
    L = table.lookup(k)
    exponent = sum((to_domain(-d * L(j, 1) / j) * _X ** j for j in range(1, d)), _SERIES_RING.zero)
    weights = _coefficients(rs_exp(exponent, _X, d), _X, d - 1)
    return sum(
        (weights[m] * (L(d - m, n) - L(d - m, 1)) for m in range(d)),
        Fraction(0),
    )


def mirror_map_series(k: int, d_max: int, table: ConstantsTable) -> List[Fraction]:
    """Coefficients of e^{dx} in t(x) - x, d = 1..d_max"""
    _check_calabi_yau(table, k, d_max)
    L = table.lookup(k)
    return [L(d, 1) / d for d in range(1, d_max + 1)]


def cy_transform_via_mirror_map(n: int, d_max: int, k: int, table: ConstantsTable) -> List[Fraction]:
    """[L_n^{k,k,d} for d = 1..d_max] from L~_n(e^x) / L~_1(e^x) at x = x(t)"""
    _check_calabi_yau(table, k, d_max)
    prec = d_max + 1
    ratio = rs_mul(_virtual_series(table, k, n, d_max),
                   _invert_series(_virtual_series(table, k, 1, d_max), d_max), _X, prec)
    # Q = X exp(sum_d t_d X^d), solved for X as a series in Q
    shift = sum((to_domain(t) * _X ** d for d, t in enumerate(mirror_map_series(k, d_max, table), 1)),
                _SERIES_RING.zero)
    q_of_x = rs_mul(_X, rs_exp(shift, _X, prec), _X, prec)
    x_of_q = rs_series_reversion(q_of_x, _X, prec, _Q)
    L = rs_subs(ratio, {_X: x_of_q}, _Q, prec)
    return _coefficients(L, _Q, d_max)[1:]
