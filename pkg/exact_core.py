"""
Exact arithmetic core
Rationals, sparse polynomials over QQ, truncated local series and the
iterated residue that produces the Poly_d polynomials of the recursion.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

from sympy import QQ
from sympy.polys.polyerrors import ExactQuotientFailed
from sympy.polys.rings import PolyElement, PolyRing, ring

from errors import ResidueError, SeriesInversionError, ValidationError

logger = logging.getLogger(__name__)

ExactRational = Fraction
MultiPoly = PolyElement

# A denominator is a set of (monic linear form, multiplicity) pairs
Denominator = FrozenSet[Tuple[PolyElement, int]]


def to_fraction(value) -> Fraction:
    """Convert a QQ domain element (or int) to a Fraction"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(int(value.numerator), int(value.denominator))


def to_domain(value: Fraction):
    """Convert a Fraction to a QQ domain element"""
    value = Fraction(value)
    return QQ(value.numerator, value.denominator)


def parse_rational(text: str) -> Fraction:
    """Parse "p/q" or an integer string"""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValidationError(f"not an exact rational: {text!r}") from e


def format_rational(value: Fraction) -> str:
    """Always "p/q", integers included"""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class ResidueRing:
    """Polynomial ring x, y, z_1..z_{d-1}, w_1..w_{d-1}, eps over QQ.

    x, y, z_* carry Poly_d; the Cartan coordinates w_* are integrated out and
    eps is the local parameter used when expanding around a pole.
    """
    degree: int
    ring: PolyRing
    x: PolyElement
    y: PolyElement
    z: Tuple[PolyElement, ...]
    w: Tuple[PolyElement, ...]
    eps: PolyElement


@lru_cache(maxsize=None)
def residue_ring(d: int) -> ResidueRing:
    names = ["x", "y"]
    names += [f"z{j}" for j in range(1, d)]
    names += [f"w{j}" for j in range(1, d)]
    names.append("eps")
    R, *gens = ring(",".join(names), QQ)
    x, y = gens[0], gens[1]
    z = tuple(gens[2:2 + d - 1])
    w = tuple(gens[2 + d - 1:2 + 2 * (d - 1)])
    return ResidueRing(degree=d, ring=R, x=x, y=y, z=z, w=w, eps=gens[-1])


def poly_mul(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    if a.ring != b.ring:
        raise ValidationError("poly_mul needs both factors in the same ring")
    return a * b


def is_homogeneous(p: MultiPoly, degree: int) -> bool:
    return all(sum(monom) == degree for monom in p.itermonoms())


def total_degree(p: MultiPoly) -> int:
    """Total degree, -1 for the zero polynomial"""
    return max((sum(monom) for monom in p.itermonoms()), default=-1)


def coefficient_map(p: MultiPoly) -> Dict[Tuple[int, ...], Fraction]:
    """Exponent vector -> Fraction, zero coefficients never appear"""
    return {monom: to_fraction(coeff) for monom, coeff in p.iterterms()}


def _normalize_linear(form: PolyElement) -> Tuple[object, PolyElement]:
    """Split a linear form into (leading coefficient, monic form)"""
    if not form:
        raise ResidueError("zero linear factor in denominator")
    if not form.is_linear:
        raise ResidueError(f"denominator factor {form} is not linear")
    lc = form.LC
    return lc, form.quo_ground(lc)


class RationalSum:
    """Finite sum of terms numerator / prod(linear form ** multiplicity).

    Denominators stay factored into monic linear forms so poles can be read off
    directly; terms sharing a denominator are merged.
    """

    def __init__(self, ring_: PolyRing, terms: Optional[Dict[Denominator, PolyElement]] = None):
        self.ring = ring_
        self.terms: Dict[Denominator, PolyElement] = {}
        for den, num in (terms or {}).items():
            self._accumulate(den, num)

    @classmethod
    def from_poly(cls, p: PolyElement) -> "RationalSum":
        return cls(p.ring, {frozenset(): p})

    @classmethod
    def term(cls, numerator: PolyElement, factors: Iterable[Tuple[PolyElement, int]]) -> "RationalSum":
        """Build one term, normalizing every factor to a monic linear form"""
        num = numerator
        den: Dict[PolyElement, int] = {}
        for form, mult in factors:
            if mult == 0:
                continue
            if form.is_ground:
                c = form.LC
                if not c:
                    raise ResidueError("division by zero constant")
                num = num.quo_ground(c ** mult)
                continue
            lc, monic = _normalize_linear(form)
            num = num.quo_ground(lc ** mult)
            den[monic] = den.get(monic, 0) + mult
        result = cls(numerator.ring)
        if num:
            result._accumulate(frozenset(den.items()), num)
        return result

    def _accumulate(self, den: Denominator, num: PolyElement) -> None:
        if not num:
            return
        total = self.terms.get(den)
        total = num if total is None else total + num
        if total:
            self.terms[den] = total
        else:
            self.terms.pop(den, None)

    def copy(self) -> "RationalSum":
        return RationalSum(self.ring, dict(self.terms))

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "RationalSum") -> "RationalSum":
        result = self.copy()
        for den, num in other.terms.items():
            result._accumulate(den, num)
        return result

    def __neg__(self) -> "RationalSum":
        return RationalSum(self.ring, {den: -num for den, num in self.terms.items()})

    def __sub__(self, other: "RationalSum") -> "RationalSum":
        return self + (-other)

    def __mul__(self, other) -> "RationalSum":
        if isinstance(other, RationalSum):
            result = RationalSum(self.ring)
            for den_a, num_a in self.terms.items():
                for den_b, num_b in other.terms.items():
                    merged: Dict[PolyElement, int] = dict(den_a)
                    for form, mult in den_b:
                        merged[form] = merged.get(form, 0) + mult
                    result._accumulate(frozenset(merged.items()), num_a * num_b)
            return result
        if isinstance(other, PolyElement):
            return RationalSum(self.ring, {den: num * other for den, num in self.terms.items()})
        scalar = to_domain(other)
        return RationalSum(self.ring, {den: num.mul_ground(scalar) for den, num in self.terms.items()})

    __rmul__ = __mul__

    def cancel(self) -> "RationalSum":
        """Divide out linear factors that also divide the numerator"""
        result = RationalSum(self.ring)
        for den, num in self.terms.items():
            remaining: Dict[PolyElement, int] = {}
            for form, mult in den:
                while mult > 0:
                    try:
                        num = num.exquo(form)
                    except ExactQuotientFailed:
                        break
                    mult -= 1
                if mult:
                    remaining[form] = mult
            result._accumulate(frozenset(remaining.items()), num)
        return result

    def inverse(self) -> "RationalSum":
        """Invert a single term whose numerator is a constant or a linear form"""
        if len(self.terms) != 1:
            raise SeriesInversionError("only a single rational term can be inverted")
        (den, num), = self.terms.items()
        if not num:
            raise SeriesInversionError("cannot invert zero")
        new_num = self.ring.one
        for form, mult in den:
            new_num *= form ** mult
        if num.is_ground:
            return RationalSum.term(new_num.quo_ground(num.LC), [])
        if num.is_linear:
            return RationalSum.term(new_num, [(num, 1)])
        raise SeriesInversionError(f"leading coefficient {num} is not invertible")

    def to_polynomial(self) -> PolyElement:
        """Combine over the common denominator and divide exactly"""
        common: Dict[PolyElement, int] = {}
        for den in self.terms:
            for form, mult in den:
                common[form] = max(common.get(form, 0), mult)
        total = self.ring.zero
        for den, num in self.terms.items():
            own = dict(den)
            part = num
            for form, mult in common.items():
                extra = mult - own.get(form, 0)
                if extra:
                    part *= form ** extra
            total += part
        divisor = self.ring.one
        for form, mult in common.items():
            divisor *= form ** mult
        try:
            return total.exquo(divisor)
        except ExactQuotientFailed as e:
            raise ResidueError(
                f"non-polynomial residual after all residues: {len(common)} linear factors remain"
            ) from e

    def __repr__(self):
        return f"RationalSum({len(self.terms)} terms)"


class RationalSeries:
    """Truncated power series in one local variable with RationalSum coefficients.

    Coefficients above `order` are dropped and the order is carried through
    products and inversions.
    """

    def __init__(self, ring_: PolyRing, coefficients: Sequence[RationalSum], order: int):
        self.ring = ring_
        self.order = order
        coeffs = list(coefficients[:order + 1])
        while len(coeffs) < order + 1:
            coeffs.append(RationalSum(ring_))
        self.coefficients: List[RationalSum] = coeffs

    @classmethod
    def from_polynomial(cls, p: PolyElement, variable: PolyElement, order: int) -> "RationalSeries":
        coeffs = [RationalSum.from_poly(p.coeff_wrt(variable, i)) for i in range(order + 1)]
        return cls(p.ring, coeffs, order)

    @classmethod
    def linear(cls, constant: RationalSum, slope, order: int) -> "RationalSeries":
        """constant + slope * t"""
        ring_ = constant.ring
        coeffs = [constant]
        if order >= 1:
            coeffs.append(RationalSum.from_poly(ring_.ground_new(slope)))
        return cls(ring_, coeffs, order)

    def __mul__(self, other: "RationalSeries") -> "RationalSeries":
        order = min(self.order, other.order)
        coeffs = [RationalSum(self.ring) for _ in range(order + 1)]
        for i, a in enumerate(self.coefficients[:order + 1]):
            if a.is_zero():
                continue
            for j in range(order + 1 - i):
                b = other.coefficients[j]
                if not b.is_zero():
                    coeffs[i + j] = coeffs[i + j] + a * b
        return RationalSeries(self.ring, coeffs, order)

    def __pow__(self, exponent: int) -> "RationalSeries":
        result = RationalSeries(self.ring, [RationalSum.from_poly(self.ring.one)], self.order)
        for _ in range(exponent):
            result = result * self
        return result

    def coefficient(self, i: int) -> RationalSum:
        if i > self.order:
            raise ValidationError(f"coefficient {i} beyond truncation order {self.order}")
        return self.coefficients[i]


def series_invert(s: RationalSeries, order: int) -> RationalSeries:
    """1/s truncated at `order`; the constant coefficient must be invertible"""
    order = min(order, s.order)
    inv0 = s.coefficients[0].inverse()
    result = [inv0]
    for n in range(1, order + 1):
        acc = RationalSum(s.ring)
        for i in range(1, n + 1):
            a = s.coefficients[i]
            if not a.is_zero():
                acc = acc + a * result[n - i]
        result.append((-acc) * inv0)
    return RationalSeries(s.ring, result, order)


def _pole_location(form: PolyElement, var: PolyElement) -> PolyElement:
    alpha = form.coeff(var)
    rest = form - var.mul_ground(alpha)
    return rest.quo_ground(-alpha)


def _residue_at(num: PolyElement, den: Denominator, var: PolyElement, pole: PolyElement,
                eps: PolyElement) -> RationalSum:
    """Residue of num/den in `var` at var = pole, by expansion in eps"""
    R = num.ring
    passive: List[Tuple[PolyElement, int]] = []
    active: List[Tuple[PolyElement, int, object]] = []
    order = 0
    scale = R.one
    for form, mult in den:
        alpha = form.coeff(var)
        if not alpha:
            passive.append((form, mult))
            continue
        value = form.compose(var, pole)
        if not value:
            order += mult
            scale = scale.quo_ground(alpha ** mult)
        else:
            active.append((value, mult, alpha))
    if order == 0:
        return RationalSum(R)
    top = order - 1
    shifted = num.compose(var, pole + eps)
    series = RationalSeries.from_polynomial(shifted, eps, top)
    for value, mult, alpha in active:
        local = RationalSeries.linear(RationalSum.from_poly(value), alpha, top)
        series = series * (series_invert(local, top) ** mult)
    passive_part = RationalSum.term(scale, passive)
    return series.coefficient(top) * passive_part


def iterated_residue(integrand: RationalSum, variables: Sequence[PolyElement],
                     owners: Optional[Mapping[PolyElement, PolyElement]] = None,
                     eps: Optional[PolyElement] = None) -> MultiPoly:
    """Integrate out `variables` in order, summing residues over finite poles.

    `owners` maps a linear factor (any normalization) to the variable it
    belongs to. While that variable is still to be integrated, the factor is
    never used as a pole of another variable. Returns the polynomial left after
    the last integration; a surviving denominator raises ResidueError.
    """
    R = integrand.ring
    if eps is None:
        eps = R.gens[-1]
    owned: Dict[PolyElement, PolyElement] = {}
    for form, var in (owners or {}).items():
        owned[_normalize_linear(form)[1]] = var

    current = integrand.cancel()
    pending = list(variables)
    while pending:
        var = pending.pop(0)
        later = set(pending)
        result = RationalSum(R)
        for den, num in current.terms.items():
            poles: Dict[PolyElement, bool] = {}
            for form, _ in den:
                if not form.coeff(var):
                    continue
                pole = _pole_location(form, var)
                blocked = owned.get(form) in later
                poles[pole] = poles.get(pole, False) or not blocked
            for pole, included in poles.items():
                if included:
                    result = result + _residue_at(num, den, var, pole, eps)
        current = result.cancel()
        logger.debug(f"integrated {var}: {len(current.terms)} terms remain")
    return current.to_polynomial()
