from fractions import Fraction

import pytest

from adic_measures import diagram as D
from adic_measures.errors import InvalidLevelList, SpecError
from adic_measures.oracle import enumerate_paths

from fixtures import N2, ST, allones


def test_stationary_validates():
    assert D.validate(ST, 10).ok


def test_dimension_mismatch_reported():
    spec = D.explicit([[[1, 0], [0, 1]], [[1, 1, 1], [1, 1, 1]]], (1, 1))
    kinds = {v.kind for v in D.validate(spec, 3).violations}
    assert "DimensionMismatch" in kinds


def test_allones_family_validates():
    assert D.validate(allones("n+1"), 5).ok


def test_zero_rows_and_columns_reported():
    spec = D.explicit([[[1, 0], [0, 0]]], (1, 1))
    kinds = sorted(v.kind for v in D.validate(spec, 2).violations)
    assert kinds == ["ZeroColumn", "ZeroRow"]


def test_matrix_at_stationary_and_periodic():
    assert D.matrix_at(ST, 7) == ((2, 1), (1, 2))
    A, B, C = [[1]], [[2]], [[3]]
    spec = D.periodic([A], [B, C], (1,))
    assert [spec.matrix(n)[0][0] for n in range(1, 6)] == [1, 2, 3, 2, 3]


def test_rank2_family_entries():
    assert N2.matrix(3) == ((9, 1), (1, 9))


def test_heights_ers_product_of_row_sums():
    assert D.heights(ST, 4) == (27, 27)
    assert D.heights(ST, 1) == (1, 1)


def test_heights_allones_3x3():
    spec = D.stationary([[1] * 3] * 3, (1, 1, 1))
    assert D.heights(spec, 3) == (9, 9, 9)


@pytest.mark.parametrize("spec", [ST, N2, allones("n+1")])
def test_heights_match_enumerated_paths(spec):
    table = enumerate_paths(spec, 5)
    for n in range(1, 6):
        assert D.heights(spec, n) == table.counts(n)


def test_stochastic_matrix():
    q = D.stochastic_at(ST, 2)
    assert q == ((Fraction(2, 3), Fraction(1, 3)), (Fraction(1, 3), Fraction(2, 3)))
    odo = D.stationary([[5]], (1,))
    assert D.stochastic_at(odo, 3) == ((1,),)
    spec = allones(3)
    assert all(x == Fraction(1, 3) for row in D.stochastic_at(spec, 2) for x in row)


def test_stochastic_rows_sum_to_one():
    for n in range(1, 6):
        assert all(sum(row) == 1 for row in D.stochastic_at(allones("n+1"), n))


def test_telescope_squares():
    t = D.telescope(ST, [1, 3, 5])
    assert t.matrix(1) == t.matrix(2) == ((5, 4), (4, 5))
    assert t.heights(3) == ST.heights(5)


def test_telescope_identity():
    t = D.telescope(N2, list(range(1, 7)))
    assert all(t.matrix(n) == N2.matrix(n) for n in range(1, 6))


def test_telescope_odd_levels_product():
    # Odd-level telescoping of [[2, 2^n], [2^(n-1)+1, 2^(n-1)+1]]: F_3 F_2 by hand.
    spec = D.family_spec("rank2-ers", a=2, c="2**n", d="2**n/2+1", b="2**n/2+1")
    f2, f3 = [[2, 4], [3, 3]], [[2, 8], [5, 5]]
    by_hand = tuple(tuple(sum(f3[i][k] * f2[k][j] for k in range(2)) for j in range(2)) for i in range(2))
    assert D.telescope(spec, [1, 2, 4]).matrix(2) == by_hand == ((28, 32), (25, 35))


@pytest.mark.parametrize("levels", [[2, 3], [1, 1, 2], [1]])
def test_telescope_rejects_bad_levels(levels):
    with pytest.raises(InvalidLevelList):
        D.telescope(ST, levels)


def test_ers_ecs_checks():
    s = D.stationary([[9, 1], [1, 9]], (1, 1))
    assert D.ers_check(s, 4).sums == (10, 10, 10)
    bad = D.stationary([[2, 1], [1, 3]], (1, 1))
    assert not D.ers_check(bad, 4).ok and D.ers_check(bad, 4).first_violation == 1
    spec = D.family_spec("allones", sizes="n+1")
    assert D.ers_check(spec, 5).sums == (2, 3, 4, 5)
    assert D.ecs_check(spec, 5).sums == (3, 4, 5, 6)


def test_json_round_trip():
    doc = D.spec_to_json(N2)
    again = D.spec_from_json(doc)
    assert all(again.matrix(n) == N2.matrix(n) for n in range(1, 8))


@pytest.mark.parametrize("doc", [
    [], {"root": [1]}, {"root": [0], "body": {"kind": "stationary", "matrix": [[1]]}},
    {"root": [1], "body": {"kind": "mystery"}},
    {"body": {"kind": "family", "name": "rank2-ers", "params": {"a": "k**2", "b": 1, "c": 1, "d": 1}}},
    {"body": {"kind": "family", "name": "nope", "params": {}}},
])
def test_malformed_specs(doc):
    with pytest.raises(SpecError):
        D.spec_from_json(doc)
