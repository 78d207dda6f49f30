"""
Verification suites
Named checks comparing engine output with closed forms, hypergeometric
oracles, ring relations and published numerical values.
"""
import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Callable, Dict, List, Optional

from errors import ValidationError
from gw_reconstruction import CorrelatorStore
from mirror_transform import (
    Partition,
    cy_transform,
    cy_transform_via_mirror_map,
    generalized_transform,
    hi_poly,
    linear_part,
    mirror_map_series,
    partitions,
    pi_f,
    quartic_hidden_part,
    v_kernel,
)
from recursion_engine import (
    HypersurfaceParams,
    cy_hypergeom_oracle,
    quantum_relation_check,
    virtual_constants,
)

logger = logging.getLogger(__name__)

DEGREE_FOUR_ANCHOR = Fraction(1324882975682876246483412831870565329165165953902032)
DEGREE_FIVE_ANCHOR = Fraction(
    100355724573836807695163109854598526931747042477505803923089934593470758513921, 180000
)
QUINTIC_LINES = Fraction(575)
QUINTIC_CONICS = Fraction(975375)


@dataclass
class CheckResult:
    name: str
    expected: object
    actual: object
    seconds: float

    @property
    def passed(self) -> bool:
        return self.expected == self.actual


@dataclass
class SuiteReport:
    suite: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def check(self, name: str, expected, compute: Callable[[], object]) -> CheckResult:
        start = time.perf_counter()
        actual = compute()
        result = CheckResult(name, expected, actual, time.perf_counter() - start)
        self.checks.append(result)
        status = "ok" if result.passed else "MISMATCH"
        logger.info(f"[{self.suite}] {name}: {status} ({result.seconds:.2f}s)")
        return result


def make_store(N: int, k: int, d_max: int) -> CorrelatorStore:
    return CorrelatorStore(HypersurfaceParams(N, k), d_max=d_max)


# Closed forms for the kernels, written only in terms of L~ (no correlators)

def _level(store: CorrelatorStore) -> Callable[[int, int], Fraction]:
    return store.seed_table.lookup(store.params.N)


def _hi2_cubic(n: int, store: CorrelatorStore) -> Fraction:
    """Quadratic part of V_2^{N,k,3}(n;(1))"""
    L = _level(store)
    s = store.params.k - store.params.N

    def one(i: int) -> Fraction:
        return L(1, i)

    def block(p: int) -> Fraction:
        total = Fraction(0)
        for j in range(s):
            total += sum((one(p - m) * one(p - 2 * s + j - m) for m in range(j + 1)), Fraction(0))
            total -= one(s + 2 + j) * sum((one(p - m) for m in range(2 * s + 1)), Fraction(0))
            total += one(1 + s) * sum((one(p - m) for m in range(j + 1, 2 * s - j)), Fraction(0))
        return total
    return block(n) - block(1 + 3 * s)


def closed_form(n: int, d: int, sigma: Partition, store: CorrelatorStore) -> Fraction:
    """V_{d-m}^{N,k,d}(n; sigma) from the explicit formulas for d <= 3 and (k-N=1) d = 4"""
    N, k = store.params.N, store.params.k
    s = k - N
    L = _level(store)
    m = sigma.weight
    if d - m == 1:
        return linear_part(n, d, m, sigma, N, k, store.seed_table)
    if m == 0:
        return L(d, n) - L(d, 1 + s * d)
    if d == 3 and sigma.parts == (1,):
        linear = sum((L(2, n - j) - L(2, 1 + 3 * s - j) for j in range(s + 1)), Fraction(0))
        return linear + _hi2_cubic(n, store)
    if d == 4 and s == 1:
        return _quartic_closed_form(n, sigma, store)
    raise ValidationError(f"no closed form for V_{d - m}^{{{N},{k},{d}}}(n;{sigma})")


def _quartic_closed_form(n: int, sigma: Partition, store: CorrelatorStore) -> Fraction:
    L = _level(store)
    L1 = lambda i: L(1, i)
    L2 = lambda i: L(2, i)
    L3 = lambda i: L(3, i)

    def V(i: int, d: int, *parts: int) -> Fraction:
        return closed_form(i, d, Partition.of(*parts), store)

    if sigma.parts == (2,):
        return (V(n, 3, 1) + L2(n - 2) - L2(5)
                + V(n, 3, 2) * (L1(n - 3) - L1(2))
                - V(n, 4, 3) * (L1(4) - L1(2)))
    if sigma.parts == (1,):
        return (L3(n) + L3(n - 1) - L3(5) - L3(4)
                + (L2(n) - L2(3)) * (L1(n - 3) - L1(2))
                + (L1(n) - L1(2)) * (L2(n - 2) - L2(3))
                - (L1(3) - L1(2)) * V(n, 4, 2)
                - V(n, 4, 3) * (L2(4) - L2(3)))
    if sigma.parts == (1, 1):
        bracket = (V(n, 2, 1) * (L1(n - 3) - L1(2))
                   + (L1(n) - L1(2)) * V(n - 2, 2, 1)
                   - V(n, 4, 2, 1) * (L1(3) - L1(2))
                   - V(n, 4, 3) * (L1(4) - L1(2)))
        return (V(n, 3, 1) + V(n - 1, 3, 1) - (L2(5) - L2(3))
                + Fraction(1, 2) * bracket)
    raise ValidationError(f"no quartic closed form for sigma={sigma}")


def _window(store: CorrelatorStore, d: int) -> range:
    """n with both moving exponents in 0..N-2"""
    N, k = store.params.N, store.params.k
    return range(1 + (k - N) * d, N - 1)


def suite_hypergeometric(k: int = 5, d_max: int = 3, **_) -> SuiteReport:
    report = SuiteReport("hypergeometric")
    table = virtual_constants(k, k, d_max)
    L = table.lookup(k)
    for d in range(1, d_max + 1):
        top, second = cy_hypergeom_oracle(k, d)
        report.check(f"L~_0^{{{k},{k},{d}}} = (kd)!/(d!)^k",
                     Fraction(factorial(k * d), factorial(d) ** k), lambda: L(d, 0))
        report.check(f"L~_0^{{{k},{k},{d}}} hypergeometric", top, lambda: L(d, 0))
        report.check(f"L~_1^{{{k},{k},{d}}} hypergeometric", second, lambda: L(d, 1))
    return report


DEFAULT_RELATION_CASES = [(9, 4, 5), (10, 3, 5), (7, 5, 5), (5, 4, 3), (6, 5, 3), (7, 6, 3)]


def suite_relations(N: Optional[int] = None, k: Optional[int] = None, d_max: int = 3, **_) -> SuiteReport:
    report = SuiteReport("relations")
    cases = [(N, k, d_max)] if N is not None and k is not None else DEFAULT_RELATION_CASES
    for N_, k_, d_ in cases:
        report.check(f"quantum ring relation N={N_}, k={k_}, q^{d_}", True,
                     lambda: quantum_relation_check(N_, k_, d_).passed)
    return report


def suite_published(**_) -> SuiteReport:
    report = SuiteReport("published")
    quintic = virtual_constants(5, 5, 2)
    report.check("L_2^{5,5,1}", QUINTIC_LINES, lambda: cy_transform(2, 1, 5, quintic))
    report.check("L_2^{5,5,2}", QUINTIC_CONICS, lambda: cy_transform(2, 2, 5, quintic))
    report.check("L_7^{11,12,4}", DEGREE_FOUR_ANCHOR, lambda: generalized_transform(7, 4, make_store(11, 12, 4)))
    report.check("L_8^{12,13,5}", DEGREE_FIVE_ANCHOR, lambda: generalized_transform(8, 5, make_store(12, 13, 5)))
    return report


def suite_kernels(N: int = 6, k: int = 7, d_max: int = 3, **_) -> SuiteReport:
    """Flat-metric zeros, index symmetry and specialization of V"""
    report = SuiteReport("kernels")
    store = make_store(N, k, d_max)
    s = k - N
    for d in range(1, d_max + 1):
        for m in range(d):
            for sigma in partitions(m):
                label = f"V_{d - m}^{{{N},{k},{d}}}(.;{sigma})"
                report.check(f"{label} at n={1 + s * d}", Fraction(0),
                             lambda: v_kernel(1 + s * d, d, sigma, store))
                report.check(f"{label} at n={N - 2}", Fraction(0), lambda: v_kernel(N - 2, d, sigma, store))
                for n in _window(store, d):
                    mirror = N - 1 + s * d - n
                    report.check(f"{label} symmetry n={n}", v_kernel(mirror, d, sigma, store),
                                 lambda: v_kernel(n, d, sigma, store))
                for f in (1, 2):
                    if d + f > d_max:
                        continue
                    point = 2 + s * (d + f)
                    report.check(f"{label} specialization f={f}", v_kernel(point, d, sigma, store),
                                 lambda: v_kernel(point, d + f, sigma.union(f), store))
    return report


def suite_closed_forms(N: int = 6, k: int = 7, **_) -> SuiteReport:
    report = SuiteReport("closed-forms")
    store = make_store(N, k, 3)
    for d in range(1, 4):
        for m in range(d):
            for sigma in partitions(m):
                for n in _window(store, d):
                    report.check(f"V_{d - m}^{{{N},{k},{d}}}({n};{sigma})",
                                 closed_form(n, d, sigma, store),
                                 lambda: v_kernel(n, d, sigma, store))
    return report


def suite_quartic(k: int = 7, **_) -> SuiteReport:
    report = SuiteReport("quartic")
    N = k - 1
    store = make_store(N, k, 4)
    for sigma in partitions(0) + partitions(1) + partitions(2) + partitions(3):
        for n in _window(store, 4):
            report.check(f"V_{4 - sigma.weight}^{{{N},{k},4}}({n};{sigma})",
                         closed_form(n, 4, sigma, store),
                         lambda: v_kernel(n, 4, sigma, store))
    return report


def suite_cy_collapse(k: int = 6, d_max: int = 3, **_) -> SuiteReport:
    report = SuiteReport("cy-collapse")
    store = make_store(k, k, d_max)
    table = store.seed_table
    for n in range(2, k - 2):
        via_map = cy_transform_via_mirror_map(n, d_max, k, table)
        for d in range(1, d_max + 1):
            expected = cy_transform(n, d, k, table)
            report.check(f"L_{n}^{{{k},{k},{d}}} generalized", expected,
                         lambda: generalized_transform(n, d, store))
            report.check(f"L_{n}^{{{k},{k},{d}}} mirror map", expected, lambda: via_map[d - 1])
    L = table.lookup(k)
    report.check("mirror map coefficients", [L(d, 1) / d for d in range(1, d_max + 1)],
                 lambda: mirror_map_series(k, d_max, table))
    return report


def suite_hi(k: int = 7, **_) -> SuiteReport:
    """hi_j vanishing, and the degree-five lift of hi_2^{k-1,k,4}(.;(1)+(1)) surviving at n=7"""
    report = SuiteReport("hi")
    N = k - 1
    store = make_store(N, k, 1)
    for j in range(1, 5):
        for n in (6, 7):
            report.check(f"hi_{j}({n}) k={k}", Fraction(0), lambda: hi_poly(j, n, k, store.seed_table))
    lifted = pi_f(lambda i: quartic_hidden_part(i, store), 1, 4, N, k)
    report.check(f"pi_1(hi_2^{{{N},{k},4}}(.;(1)+(1))) at n=7 is non-zero", True, lambda: lifted(7) != 0)
    return report


def suite_symmetry(k_min: int = 7, k_max: int = 9, **_) -> SuiteReport:
    """Index symmetry of the predicted L_n^{k-1,k,4}, and integrality of k L_n"""
    report = SuiteReport("symmetry")
    for k in range(k_min, k_max + 1):
        N = k - 1
        store = make_store(N, k, 4)
        values = {n: generalized_transform(n, 4, store) for n in _window(store, 4)}
        for n, value in values.items():
            mirror = N - 1 + 4 - n
            report.check(f"L_{n}^{{{N},{k},4}} = L_{mirror}", values.get(mirror), lambda: value)
            report.check(f"{k} L_{n}^{{{N},{k},4}} is an integer", 1, lambda: (k * value).denominator)
    return report


SUITES: Dict[str, Callable[..., SuiteReport]] = {
    "hypergeometric": suite_hypergeometric,
    "relations": suite_relations,
    "published": suite_published,
    "kernels": suite_kernels,
    "closed-forms": suite_closed_forms,
    "quartic": suite_quartic,
    "cy-collapse": suite_cy_collapse,
    "hi": suite_hi,
    "symmetry": suite_symmetry,
    # older names of the hypergeometric and published suites
    "po": suite_hypergeometric,
    "paper-numbers": suite_published,
}


def run_suite(name: str, **params) -> SuiteReport:
    try:
        suite = SUITES[name]
    except KeyError:
        raise ValidationError(f"unknown verification suite {name!r}; choose from {', '.join(SUITES)}") from None
    return suite(**{key: value for key, value in params.items() if value is not None})
