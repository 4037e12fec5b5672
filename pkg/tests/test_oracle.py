"""The brute-force oracle checked on its own, then used as ground truth."""

from fractions import Fraction

import pytest

from adic_measures.errors import BudgetExceeded, DepthMismatch
from adic_measures.measure import uniform_ecs_measure
from adic_measures.oracle import (
    brute_measure_mass,
    counts_between,
    counts_by_enumeration,
    enumerate_paths,
    in_sub,
    random_edge_sub,
    random_measure,
    random_spec,
    random_vertex_sub,
    range_in,
)
from adic_measures.subdiagram import validate_sub

from fixtures import ODOMETER, ST, first_vertex, path_count_measure, section5, stationary_edge_sub


def test_odometer_path_count_is_product():
    table = enumerate_paths(ODOMETER, 3)
    assert table.counts(3) == (2 * 3 * 3,)


def test_stationary_path_counts_by_hand():
    table = enumerate_paths(ST, 3)
    assert [table.counts(n) for n in (1, 2, 3)] == [(1, 1), (3, 3), (9, 9)]


def test_paths_are_distinct_and_well_formed():
    spec = random_spec(5)
    table = enumerate_paths(spec, 5)
    for n in range(1, 6):
        for v, paths in enumerate(table.paths[n - 1]):
            assert len(set(paths)) == len(paths)
            for path in paths:
                assert len(path) == n and path[-1][2] == v
                for (_, _, v0, _), (lvl, w, _, _) in zip(path, path[1:]):
                    assert v0 == w


def test_budget_is_enforced():
    with pytest.raises(BudgetExceeded):
        enumerate_paths(ST, 12, budget=100)


def test_depth_mismatch():
    table = enumerate_paths(ST, 3)
    with pytest.raises(DepthMismatch):
        brute_measure_mass(table, uniform_ecs_measure(ST, 5), 4)


@pytest.mark.parametrize("seed", range(10))
def test_counts_by_walk_and_enumeration_agree(seed):
    spec = random_spec(seed, levels=5)
    table = enumerate_paths(spec, 5)
    for m in range(1, 5):
        for N in range(m + 1, 6):
            assert counts_between(spec, m, N) == counts_by_enumeration(table, m, N)


@pytest.mark.parametrize("seed", range(10))
def test_random_measure_has_mass_one_by_brute_force(seed):
    spec = random_spec(seed)
    table = enumerate_paths(spec, 6)
    mu = random_measure(spec, 6, seed)
    for n in range(1, 7):
        assert brute_measure_mass(table, mu, n) == 1


def test_random_sub_measure_has_mass_one_on_sub_paths():
    for seed in range(10):
        spec = random_spec(seed)
        for sub in (random_vertex_sub(spec, 6, seed), random_edge_sub(spec, 6, seed)):
            assert validate_sub(sub, 6).ok
            table = enumerate_paths(spec, 6)
            pbar = random_measure(spec, 6, seed, sub)
            for n in range(1, 7):
                assert brute_measure_mass(table, pbar, n, in_sub(sub)) == 1


def test_in_sub_for_edge_sub_keeps_low_edge_indices():
    sub = stationary_edge_sub()
    table = enumerate_paths(ST, 4)
    kept = [sum(1 for p in table.at(4, v) if in_sub(sub)(p)) for v in (0, 1)]
    assert kept == [8, 8]  # root (1,1) then 2 kept edges per vertex, three times


def test_range_filter():
    table = enumerate_paths(ST, 3)
    keep = range_in(lambda n: {0})
    assert sum(1 for v in (0, 1) for p in table.at(3, v) if keep(p)) == 9


def test_section5_first_vertex_mass_frozen():
    # mu(Y^(4)) for the first-vertex odometer of the a_i = 2^i family, counted path by path.
    spec = section5("2**n")
    mu = path_count_measure(spec, 4)
    table = enumerate_paths(spec, 4)
    got = brute_measure_mass(table, mu, 4, in_sub(first_vertex(spec)))
    assert got == Fraction(32, 135)
