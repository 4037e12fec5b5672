from fractions import Fraction

import pytest

from adic_measures import diagram as D
from adic_measures.errors import EmptyComplement, IncompatibleSubMeasure, NotVertexSub, SpecError
from adic_measures.measure import uniform_ecs_measure
from adic_measures.oracle import brute_measure_mass, enumerate_paths, in_sub, random_measure
from adic_measures.subdiagram import (
    canonical_sub_measure,
    check_sub_measure,
    complement,
    edge_sub,
    lemma_level,
    sub_from_json,
    sub_heights,
    subspace_measure,
    thinness,
    validate_sub,
    vertex_sub,
)

from fixtures import ST, all_but_first, allones, first_vertex, section5, stationary_edge_sub


def prod(xs):
    out = Fraction(1)
    for x in xs:
        out *= x
    return out


def kinds(report):
    return {v.kind for v in report.violations}


def test_section5_first_vertex_is_valid():
    assert validate_sub(first_vertex(section5("n+1")), 8).ok


def test_disconnected_block():
    sub = vertex_sub(ST, [[0], [0], [1], [1]])
    ok = vertex_sub(allones(3), [[0], [1], [2]])
    assert validate_sub(ok, 3).ok
    spec = D.explicit([[[1, 0], [0, 1]], [[1, 0], [0, 1]]], (1, 1))
    bad = vertex_sub(spec, [[0], [1], [1]])
    assert "DisconnectedBlock" in kinds(validate_sub(bad, 3))
    assert validate_sub(sub, 4).ok  # every pair of vertices is joined in ST


def test_empty_and_out_of_range_support():
    assert "EmptySupport" in kinds(validate_sub(vertex_sub(ST, [[0], []]), 2))
    assert "VertexOutOfRange" in kinds(validate_sub(vertex_sub(ST, [[0], [5]]), 2))


def test_edge_sub_support_and_domination():
    assert "SupportViolation" in kinds(validate_sub(edge_sub(ST, [[2, 0], [1, 2]]), 3))
    assert "NotDominated" in kinds(validate_sub(edge_sub(ST, [[3, 1], [1, 2]]), 3))
    report = validate_sub(stationary_edge_sub(), 4)
    assert report.ok and report.proper_levels == (1, 2, 3)


def test_full_sub_heights_equal_parent():
    sub = vertex_sub(ST, "all")
    assert all(sub.hbar(n) == ST.heights(n) for n in range(1, 7))


def test_section5_first_vertex_heights():
    spec = section5("2**n")
    sub = first_vertex(spec)
    for n in range(1, 8):
        assert sub_heights(sub, n) == (prod(2 ** i for i in range(n)),)


def test_edge_sub_heights():
    sub = stationary_edge_sub()
    assert [sub.hbar(n) for n in range(1, 5)] == [(1, 1), (2, 2), (4, 4), (8, 8)]


def test_sub_heights_match_enumerated_paths():
    for sub in (first_vertex(section5("n+1")), stationary_edge_sub(), all_but_first(allones("n+1"))):
        table = enumerate_paths(sub.parent, 5)
        keep = in_sub(sub)
        for n in range(1, 6):
            got = [sum(1 for p in table.at(n, v) if keep(p)) for v in range(sub.parent.size(n))]
            assert tuple(got) == sub.hbar(n)


def test_full_sub_measure_is_one():
    report = subspace_measure(vertex_sub(ST, "all"), None, 8)
    assert set(report.mu_Y) == {1} and set(report.terms) == {0}
    assert report.limit == 1 and report.verdict.value == "positive"


def test_allones_measure_is_ratio_product():
    spec = allones("n+1")
    sub = vertex_sub(spec, {"kind": "named", "name": "first", "count": 1})
    report = subspace_measure(sub, None, 8)
    for n in range(1, 9):
        assert report.mu_Y[n - 1] == prod(Fraction(1, spec.size(i)) for i in range(1, n + 1))
    assert report.verdict.to_json()["value"] == "zero"


def test_section5_positive_measure():
    sub = first_vertex(section5("2**n"))
    report = subspace_measure(sub, None, 4)
    assert report.mu_Y == (Fraction(1, 2), Fraction(1, 3), Fraction(4, 15), Fraction(32, 135))
    assert report.verdict.kind == "exact" and report.verdict.value == "positive"


def test_section5_zero_measure():
    report = subspace_measure(first_vertex(section5("n+1")), None, 10)
    assert report.verdict.kind == "exact" and report.verdict.value == "zero"
    assert report.limit == 0


def test_subspace_measure_matches_brute_force():
    spec = section5("n+1")
    sub = first_vertex(spec)
    mu = random_measure(spec, 5, 3)
    table = enumerate_paths(spec, 5)
    report = subspace_measure(sub, mu, 5)
    for n in range(1, 6):
        assert report.mu_Y[n - 1] == brute_measure_mass(table, mu, n, in_sub(sub))
    assert report.verdict.kind == "bracketed"


def test_oracle_first_two_levels():
    spec = section5("n+1")
    table = enumerate_paths(spec, 2)
    mu = uniform_ecs_measure(spec, 2)
    got = brute_measure_mass(table, mu, 2, in_sub(first_vertex(spec)))
    assert got == subspace_measure(first_vertex(spec), None, 2).mu_Y[1] == Fraction(1 * 2, 2 * 3)


def test_thinness_stationary_pair():
    report = thinness(stationary_edge_sub(), 10)
    assert report.max_ratio == tuple(Fraction(2, 3) ** (n - 1) for n in range(1, 11))
    assert report.verdict.to_json() == {"kind": "exact", "value": "thin"}


def test_thinness_full_sub():
    report = thinness(vertex_sub(ST, "all"), 6)
    assert set(report.max_ratio) == {1}
    assert report.verdict.to_json() == {"kind": "exact", "value": "not-thin"}


def test_thinness_finite_rank_in_allones():
    sub = vertex_sub(allones("n+1"), {"kind": "named", "name": "first", "count": 1})
    assert thinness(sub, 10).verdict.value == "thin"


def test_complement_section5():
    sub = first_vertex(section5("n+1"))
    comp = complement(sub, 6)
    assert comp.support.to_json() == {"kind": "named", "name": "all-but-first"}
    assert validate_sub(comp, 6).ok


def test_complement_errors():
    with pytest.raises(EmptyComplement):
        complement(vertex_sub(ST, "all"), 4)
    with pytest.raises(NotVertexSub):
        complement(stationary_edge_sub(), 4)


def test_complement_in_allones_is_valid():
    comp = complement(vertex_sub(allones(4), [[0, 1], [2], [1, 3], [0]]), 4)
    assert validate_sub(comp, 4).ok


def test_canonical_sub_measure_is_a_sub_measure():
    for sub in (stationary_edge_sub(), first_vertex(section5("n+1"))):
        check_sub_measure(sub, canonical_sub_measure(sub, 6))


def test_sub_measure_checks():
    sub = first_vertex(section5("n+1"))
    bad = uniform_ecs_measure(sub.parent, 4)
    with pytest.raises(IncompatibleSubMeasure):
        check_sub_measure(sub, bad)


def test_lemma_level_stationary():
    sub = stationary_edge_sub()
    assert lemma_level(sub, 1, 2, 32) == 5
    assert lemma_level(sub, 1, 4, 32) == 7


def test_sub_json_errors(tmp_path):
    with pytest.raises(SpecError):
        sub_from_json({"kind": "vertex"}, ST)
    with pytest.raises(SpecError):
        sub_from_json({"kind": "edge", "matrices": {"kind": "stationary", "matrix": [[1, 1], [1, 1]]}, "root": [-1, 1]}, ST)
    with pytest.raises(SpecError):
        sub_from_json({"kind": "blob"}, ST)
