from fractions import Fraction
from math import factorial

import pytest

from errors import TableMissError, ValidationError, VerificationError
from exact_core import coefficient_map
from recursion_engine import (
    HypersurfaceParams,
    OrderedPartitionMonomial,
    beauville_init,
    cy_hypergeom_oracle,
    delta_vector,
    phi,
    poly_d,
    quantum_relation_check,
    require_relation,
    true_constants_near_fano,
    virtual_constants,
)


@pytest.mark.parametrize("k, expected", [
    (2, [2, 2]),
    (3, [6, 15, 6]),
    (4, [24, 104, 104, 24]),
    (5, [120, 770, 1345, 770, 120]),
])
def test_beauville_initial_row(k, expected):
    assert beauville_init(k) == [Fraction(v) for v in expected]


@pytest.mark.parametrize("N, k", [(3, 5), (5, 1)])
def test_params_reject_out_of_range(N, k):
    with pytest.raises(ValidationError):
        HypersurfaceParams(N, k)


def test_selection_rule():
    params = HypersurfaceParams(5, 5)
    # quintic lines: three insertions of the hyperplane class at degree 1
    assert params.selection_holds(1, [1, 1, 1])
    assert params.selection_holds(0, [3, 1, 0]) is False
    assert params.selection_holds(0, [1, 1, 1]) is True


def test_delta_vector_of_single_z():
    # z_1 in Poly_2: one split at 1
    mon = OrderedPartitionMonomial.from_monom(2, (0, 0, 1, 0, 0))
    assert mon.m == 1
    assert delta_vector(mon, 7, 5) == (0, 2)


def test_delta_vector_of_x():
    mon = OrderedPartitionMonomial.from_monom(2, (1, 0, 0, 0, 0))
    assert delta_vector(mon, 7, 5) == (-1,)


def test_quintic_degree_two(quintic_table):
    L = quintic_table.lookup(5)
    assert L(2, 0) == 113400
    assert L(2, 1) == 1435650
    assert L(2, 2) == 3296525


def test_quintic_level_six_degree_two(quintic_table):
    assert quintic_table.row(6, 2).values == [198000, 1487500, 1487500, 198000]


def test_quintic_degree_three_top(quintic_table):
    assert quintic_table.get(5, 3, 0) == Fraction(factorial(15), factorial(3) ** 5) == 168168000


@pytest.mark.parametrize("k, d", [
    pytest.param(k, d, marks=pytest.mark.slow) if d > 3 or k > 6 else (k, d)
    for k in (5, 6, 7, 8)
    for d in (1, 2, 3, 4, 5)
])
def test_hypergeometric_oracle(k, d):
    table = virtual_constants(k, k, d)
    assert (table.get(k, d, 0), table.get(k, d, 1)) == cy_hypergeom_oracle(k, d)


def test_oracle_degree_one():
    assert cy_hypergeom_oracle(5, 1) == (120, 770)


@pytest.mark.parametrize("N, k", [(5, 5), (6, 7), (7, 5)])
def test_index_symmetry(N, k):
    table = virtual_constants(N, k, 3)
    for d in range(1, 4):
        for n, value in table.entries(N, d):
            assert table.get(N, d, N - 1 + (k - N) * d - n) == value


def test_stable_range_has_no_higher_degrees():
    table = virtual_constants(30, 3, 2)
    assert table.row(30, 2).values == []
    assert table.get(30, 2, 5) == 0


def test_levels_below_the_request_are_missing(quintic_table):
    with pytest.raises(TableMissError):
        quintic_table.get(4, 1, 0)
    with pytest.raises(TableMissError):
        quintic_table.get(5, 4, 0)


def test_degree_above_validated_range_needs_opt_in():
    with pytest.raises(ValidationError):
        virtual_constants(6, 3, 6)


def test_near_fano_shift():
    table = true_constants_near_fano(5, 4, 1)
    assert table.get(6, 1, 1) == 104
    assert table.get(5, 1, 0) == 0
    assert table.get(5, 1, 1) == 80


def test_true_constants_need_positive_chern():
    with pytest.raises(ValidationError):
        true_constants_near_fano(5, 5, 1)


@pytest.mark.parametrize("N, k, d_max", [
    (5, 4, 3), (6, 5, 3), (7, 5, 3), (9, 4, 3),
    pytest.param(7, 6, 3, marks=pytest.mark.slow),
])
def test_quantum_ring_relation(N, k, d_max):
    report = quantum_relation_check(N, k, d_max)
    assert report.passed, report.violation


@pytest.mark.slow
@pytest.mark.parametrize("N, k", [(9, 4), (10, 3), (7, 5)])
def test_quantum_ring_relation_degree_five(N, k):
    report = quantum_relation_check(N, k, 5)
    assert report.passed, report.violation


def test_descent_is_the_phi_sum(quintic_table):
    terms = [
        (OrderedPartitionMonomial.from_monom(2, monom), coeff)
        for monom, coeff in coefficient_map(poly_d(2)).items()
    ]
    for n in range(0, 5):
        expected = sum((coeff * phi(mon, n, 5, 5, quintic_table) for mon, coeff in terms), Fraction(0))
        assert quintic_table.get(5, 2, n) == expected


def test_table_shape(quintic_table):
    assert quintic_table.levels() == [10, 9, 8, 7, 6, 5]
    assert quintic_table.window(5, 1) == (0, 4)
    assert quintic_table.has_level(5) and not quintic_table.has_level(4)


def test_true_constants_stay_in_the_degree_window():
    params = HypersurfaceParams(7, 5)
    table = true_constants_near_fano(7, 5, 2)
    for d in (1, 2):
        lo, hi = params.flasel_window(d)
        assert all(lo <= n <= hi for n, value in table.entries(7, d) if value)
    lo, hi = HypersurfaceParams(5, 4).flasel_window(1)
    assert (lo, hi) == (1, 2)


def test_require_relation():
    require_relation(5, 4, 2)


def test_require_relation_reports_a_broken_table(monkeypatch):
    import recursion_engine

    real = recursion_engine.true_constants_near_fano

    def tampered(N, k, d_max, allow_unvalidated=False):
        table = real(N, k, d_max, allow_unvalidated)
        row = table.row(N, 1)
        row.values[0] += 1
        return table

    monkeypatch.setattr(recursion_engine, "true_constants_near_fano", tampered)
    with pytest.raises(VerificationError):
        require_relation(5, 4, 1)
