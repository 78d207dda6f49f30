from fractions import Fraction

import pytest
from sympy import QQ

from errors import ResidueError, ValidationError
from exact_core import (
    RationalSeries,
    RationalSum,
    coefficient_map,
    format_rational,
    is_homogeneous,
    iterated_residue,
    parse_rational,
    poly_mul,
    residue_ring,
    series_invert,
    total_degree,
)
from recursion_engine import poly_d


def test_format_rational_always_has_a_denominator():
    assert format_rational(Fraction(3)) == "3/1"
    assert format_rational(Fraction(-6, 4)) == "-3/2"


def test_parse_rational():
    assert parse_rational("6/4") == Fraction(3, 2)
    assert parse_rational(" 7 ") == Fraction(7)
    with pytest.raises(ValidationError):
        parse_rational("seven")
    with pytest.raises(ValidationError):
        parse_rational("1/0")


def test_common_factor_cancels_to_a_polynomial():
    R = residue_ring(2)
    form = R.x + R.y
    assert RationalSum.term(form * R.z[0], [(form, 1)]).to_polynomial() == R.z[0]


def test_surviving_denominator_is_an_error():
    R = residue_ring(2)
    with pytest.raises(ResidueError):
        RationalSum.term(R.ring.one, [(R.x, 1)]).to_polynomial()


def test_geometric_series_inverse():
    R = residue_ring(2)
    one = RationalSum.from_poly(R.ring.one)
    series = series_invert(RationalSeries.linear(one, -1, 4), 4)
    for i in range(5):
        assert series.coefficient(i).to_polynomial() == R.ring.one


def test_simple_pole_residue():
    R = residue_ring(2)
    w, z = R.w[0], R.z[0]
    integrand = RationalSum.term(w ** 2, [(w - z, 1)])
    assert iterated_residue(integrand, [w]) == z ** 2


def test_double_pole_residue():
    R = residue_ring(2)
    w, z = R.w[0], R.z[0]
    integrand = RationalSum.term(w ** 3, [(w - z, 2)])
    assert iterated_residue(integrand, [w]) == 3 * z ** 2


def test_poly_2():
    R = residue_ring(2)
    assert poly_d(2) == (R.x + R.y).mul_ground(QQ(1, 2)) + R.z[0]


def test_poly_3():
    R = residue_ring(3)
    x, y = R.x, R.y
    z1, z2 = R.z
    expected = (
        ((2 * x + y) * (x + 2 * y)).mul_ground(QQ(1, 9))
        + (z1 * (x + 2 * y)).mul_ground(QQ(1, 3))
        + (z2 * (2 * x + y)).mul_ground(QQ(1, 3))
        + z1 * z2
        + (z1 ** 2 + z2 ** 2).mul_ground(QQ(1, 2))
    )
    assert poly_d(3) == expected


def _mirror(monom, d):
    # x <-> y, z_j <-> z_{d-j}
    z = monom[2:2 + d - 1]
    return (monom[1], monom[0]) + tuple(reversed(z)) + monom[2 + d - 1:]


@pytest.mark.parametrize("d", [2, 3, 4])
def test_poly_d_is_symmetric_and_homogeneous(d):
    p = poly_d(d)
    assert is_homogeneous(p, d - 1)
    terms = coefficient_map(p)
    assert {_mirror(monom, d): c for monom, c in terms.items()} == terms


@pytest.mark.parametrize("d", [2, 3])
def test_poly_d_multilinear_part(d):
    R = residue_ring(d)
    expected = R.ring.one
    for j in range(1, d):
        a_j = ((d - j) * R.x + j * R.y).mul_ground(QQ(1, d))
        expected *= a_j + R.z[j - 1]
    z_slice = slice(2, 2 + d - 1)
    actual = {
        monom: c for monom, c in coefficient_map(poly_d(d)).items()
        if all(e <= 1 for e in monom[z_slice])
    }
    assert actual == coefficient_map(expected)


def test_poly_mul_and_degree():
    R = residue_ring(2)
    p = poly_mul(R.x + R.y, R.z[0])
    assert p == R.x * R.z[0] + R.y * R.z[0]
    assert total_degree(p) == 2
    assert total_degree(R.ring.zero) == -1
    with pytest.raises(ValidationError):
        poly_mul(R.x, residue_ring(3).x)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_poly_d_degree(d):
    assert total_degree(poly_d(d)) == d - 1
