import math
from fractions import Fraction
from itertools import product

import pytest

from tablecount.errors import EnumerationBudgetError, ValidationError
from tablecount.counting import (
    Margins,
    WeightMatrix,
    bekessy_estimate,
    exact_count_01,
    exact_count_bruteforce,
    exact_count_dp,
    fisher_yates_count,
    iter_tables,
    margins_from_csv_text,
    margins_from_json_text,
    weighted_count_bruteforce,
    weights_from_csv_text,
    weights_from_json_text,
)


def positive_compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for head in range(1, total - parts + 2):
        for rest in positive_compositions(total - head, parts - 1):
            yield (head,) + rest


def test_margins_validation():
    with pytest.raises(ValidationError):
        Margins([2, 1], [1, 1])
    with pytest.raises(ValidationError):
        Margins([2, 0], [1, 1])
    with pytest.raises(ValidationError):
        Margins([], [1])
    m = Margins([2, 2], [1, 1, 2])
    assert m.total == 4
    assert m.rho == 2
    assert m.divisor() == 2 * 2 * 1 * 1 * 2


def test_bruteforce_small_values():
    assert exact_count_bruteforce(Margins([1, 1], [1, 1])) == 2
    assert exact_count_bruteforce(Margins([2, 2], [2, 2])) == 3
    assert exact_count_bruteforce(Margins([2, 2, 2], [2, 2, 2])) == 21


def test_dp_small_values():
    assert exact_count_dp(Margins([1, 1, 1], [1, 1, 1])) == 6
    assert exact_count_dp(Margins([2, 2], [1, 1, 1, 1])) == 6


def test_dp_equals_bruteforce_on_grid():
    # every margin pair with m, n <= 3 and N <= 6 (the wider grid runs in acceptance)
    for total in range(2, 7):
        row_options = [c for parts in range(1, 4) for c in positive_compositions(total, parts)]
        for rows in row_options:
            for cols in row_options:
                m = Margins(rows, cols)
                assert exact_count_dp(m) == exact_count_bruteforce(m)


def test_count_01_small_values():
    assert exact_count_01(Margins([1, 1], [1, 1])) == 2
    assert exact_count_01(Margins([2, 2], [2, 2])) == 1
    assert exact_count_01(Margins([2, 2, 2], [2, 2, 2])) == 6


def test_count_01_against_direct_enumeration():
    for rows, cols in [((2, 1), (1, 1, 1)), ((2, 2), (2, 1, 1)), ((3, 1), (1, 1, 1, 1))]:
        m = Margins(rows, cols)
        direct = 0
        for bits in product((0, 1), repeat=len(rows) * len(cols)):
            grid = [bits[i * len(cols):(i + 1) * len(cols)] for i in range(len(rows))]
            if all(sum(g) == r for g, r in zip(grid, rows)) and all(
                sum(g[j] for g in grid) == c for j, c in enumerate(cols)
            ):
                direct += 1
        assert exact_count_01(m) == direct


def test_count_01_infeasible_is_zero():
    assert exact_count_01(Margins([3, 1], [2, 2])) == 0


def test_iter_tables_yields_each_table_once():
    m = Margins([2, 2], [2, 2])
    tables = list(iter_tables(m))
    assert len(tables) == 3
    assert len(set(tables)) == 3
    for t in tables:
        assert all(sum(row) == 2 for row in t)
        assert all(t[0][j] + t[1][j] == 2 for j in range(2))


def test_enumeration_budget_fires():
    m = Margins([4] * 4, [4] * 4)
    with pytest.raises(EnumerationBudgetError):
        exact_count_bruteforce(m, node_budget=10)


def test_counts_invariant_under_margin_permutations():
    m = Margins([3, 1, 2], [2, 2, 2])
    p = Margins([1, 2, 3], [2, 2, 2])
    assert exact_count_bruteforce(m) == exact_count_bruteforce(p)
    assert exact_count_dp(m) == exact_count_dp(p)
    assert exact_count_01(m) == exact_count_01(p)
    assert fisher_yates_count(m) == fisher_yates_count(p)


def test_fisher_yates_values():
    assert fisher_yates_count(Margins([1, 1], [1, 1])) == 2
    assert fisher_yates_count(Margins([2, 2], [2, 2])) == Fraction(3, 2)


def test_fisher_yates_equals_weighted_bruteforce():
    for rows, cols in [((2, 2), (2, 2)), ((3, 1), (2, 2)), ((2, 2, 1), (3, 1, 1))]:
        m = Margins(rows, cols)
        total = Fraction(0)
        for table in iter_tables(m):
            w = Fraction(1)
            for row in table:
                for d in row:
                    w /= math.factorial(d)
            total += w
        assert fisher_yates_count(m) == total


def test_bekessy_unit_margins_is_factorial():
    for n in range(1, 8):
        m = Margins([1] * n, [1] * n)
        assert bekessy_estimate(m) == float(math.factorial(n))


def test_bekessy_2x2_value():
    m = Margins([2, 2], [2, 2])
    assert bekessy_estimate(m) == pytest.approx(1.5 * math.exp(0.5))
    assert abs(bekessy_estimate(m) / 3 - 1) == pytest.approx(0.1756, abs=5e-4)


def test_bekessy_error_shrinks_with_n():
    errors = []
    for total in (4, 8, 12):
        k = total // 2
        m = Margins([2] * k, [2] * k)
        exact = exact_count_dp(m)
        errors.append(abs(bekessy_estimate(m) / exact - 1))
    assert errors[0] > errors[1] > errors[2]


def test_weighted_bruteforce_all_ones_matches_counts():
    m = Margins([2, 2], [2, 2])
    ones = WeightMatrix([[1, 1], [1, 1]])
    assert weighted_count_bruteforce(m, ones, include_factorials=False) == 3
    assert weighted_count_bruteforce(m, ones, include_factorials=True) == Fraction(3, 2)


def test_weight_matrix_validation():
    with pytest.raises(ValidationError):
        WeightMatrix([[1, -1]])
    with pytest.raises(ValidationError):
        WeightMatrix([[1, 2], [3]])
    w = WeightMatrix([[1, 2], [2, 4]])
    assert w.numerical_rank() == 1
    assert WeightMatrix([[1, 0], [0, 1]]).numerical_rank() == 2


def test_margins_io():
    m = margins_from_json_text('{"rows": [2, 2], "cols": [1, 3]}')
    assert m == Margins([2, 2], [1, 3])
    m2 = margins_from_csv_text("2,2\n1,3\n")
    assert m2 == Margins([2, 2], [1, 3])


def test_weights_io():
    w = weights_from_json_text('{"weights": [[1, "1/2"], [2.5, 3]]}')
    assert w.entries[0][1] == Fraction(1, 2)
    assert w.entries[1][0] == 2.5
    w2 = weights_from_csv_text("1,1/2\n2.5,3\n")
    assert w2 == w
