from fractions import Fraction

import pytest

from adic_measures import diagram as D
from adic_measures.errors import IncompatibleMeasure, NotECS, NotStationary, Reducible
from adic_measures.measure import (
    check_compatible,
    count_ergodic,
    ecs_constants,
    level_mass,
    measure_from_top,
    pf_measure,
    propagate_down,
    rank2_ers_classify,
    simplex_contract,
    stationary_pf,
    step_diameter_ratio,
    uniform_ecs_measure,
    z_determinant,
)
from adic_measures.oracle import brute_measure_mass, enumerate_paths, random_measure

from fixtures import ALTERNATING, N1, N2, ODOMETER, RANK2_FIXTURES, ST, allones, path_count_measure, section5


def prod(xs):
    out = Fraction(1)
    for x in xs:
        out *= x
    return out


def test_propagate_down_examples():
    third = Fraction(1, 18)
    assert propagate_down(ST, (third, third), 2) == (Fraction(1, 6), Fraction(1, 6))
    assert propagate_down(ST, (0, 0), 1) == (0, 0)
    spec = allones("n+1")
    c = Fraction(1, 7)
    assert propagate_down(spec, (c,) * spec.size(3), 2) == (spec.size(3) * c,) * spec.size(2)


def test_propagate_preserves_mass():
    mu = measure_from_top(ST, (Fraction(1, 54), Fraction(1, 27)), 4)
    masses = {level_mass(ST, mu.at(n), n) for n in range(1, 5)}
    assert len(masses) == 1


def test_check_compatible():
    mu = uniform_ecs_measure(ST, 5)
    check_compatible(ST, mu)
    with pytest.raises(IncompatibleMeasure):
        check_compatible(ST, mu, mass=Fraction(2))
    broken = type(mu)(mu.vectors[:-1] + ((Fraction(1), Fraction(0)),))
    with pytest.raises(IncompatibleMeasure):
        check_compatible(ST, broken)


def test_allones_canonical_measure():
    spec = allones("n+1")
    mu = uniform_ecs_measure(spec, 6)
    for n in range(1, 7):
        assert mu.at(n) == (1 / prod(Fraction(k + 1) for k in range(1, n + 1)),) * spec.size(n)


def test_odometer_canonical_measure():
    mu = uniform_ecs_measure(ODOMETER, 5)
    assert [mu.at(n)[0] for n in range(1, 6)] == [Fraction(1, 2 * 3 ** (n - 1)) for n in range(1, 6)]


def test_section5_canonical_matches_path_count():
    spec = section5("n+1")
    assert uniform_ecs_measure(spec, 5) == path_count_measure(spec, 5)
    mu = uniform_ecs_measure(spec, 5)
    sizes = [spec.size(k) for k in range(1, 6)]
    assert mu.at(5)[0] == 1 / prod(Fraction(s) for s in sizes)


def test_canonical_measure_mass_by_brute_force():
    spec = allones("n+1")
    table = enumerate_paths(spec, 5)
    mu = uniform_ecs_measure(spec, 5)
    assert all(brute_measure_mass(table, mu, n) == 1 for n in range(1, 6))


def test_not_ecs_rejected():
    with pytest.raises(NotECS):
        ecs_constants(D.stationary([[2, 1], [0, 2]], (1, 1)), 3)


def test_simplex_rank_one_is_a_point():
    state = simplex_contract(D.stationary([[1, 1], [1, 1]], (1, 1)), 6)
    assert state.diameter == 0


def test_simplex_n_squared_ratio_from_level_two():
    state = simplex_contract(N2, 10, base_level=2)
    expected = prod(Fraction(k * k - 1, k * k + 1) for k in range(2, 10))
    assert state.diameter_ratio == expected == Fraction(36578304, 108958525)


def test_simplex_n_family_collapses():
    state = simplex_contract(N1, 40, base_level=2)
    assert state.diameter_ratio == Fraction(2, 39 * 40)


def test_simplex_extreme_point_is_pushed_unit_vector():
    top = (Fraction(1, ST.heights(5)[0]), Fraction(0))
    mu = measure_from_top(ST, top, 5)
    state = simplex_contract(ST, 5)
    assert state.extreme_points[0][1] == mu.at(1)


def test_z_determinant_examples():
    assert z_determinant(D.stationary([[9, 1], [1, 9]], (1, 1)), 1) == Fraction(4, 5)
    assert z_determinant(D.stationary([[1, 1], [1, 1]], (1, 1)), 3) == 0


@pytest.mark.parametrize("a,b,c,d", [(3, 2, 1, 2), (1, 4, 4, 1), (5, 5, 2, 2), (7, 1, 1, 7)])
def test_z_determinant_formula(a, b, c, d):
    spec = D.stationary([[a, c], [d, b]], (1, 1))
    assert z_determinant(spec, 1) == Fraction(a - d, a + c)


def test_count_examples():
    assert count_ergodic(N2, 40).verdict.to_json() == {"kind": "exact", "value": 2}
    assert count_ergodic(N1, 40).verdict.to_json() == {"kind": "exact", "value": 1}
    assert count_ergodic(ODOMETER, 10).verdict.to_json() == {"kind": "exact", "value": 1}


def test_count_singular_prefix_noted():
    report = count_ergodic(N2, 30)
    assert report.singular_levels == (1,)
    assert any("singular" in note for note in report.notes)


@pytest.mark.parametrize("name", sorted(RANK2_FIXTURES))
def test_modes_agree_on_rank2_fixtures(name):
    spec = RANK2_FIXTURES[name]
    a = count_ergodic(spec, 30, "determinant").verdict
    b = count_ergodic(spec, 30, "diameter").verdict
    assert (a.kind, a.value) == (b.kind, b.value)


def test_rank2_classification_rows():
    report = rank2_ers_classify(N2, 30)
    assert report.verdict.value == 2
    assert report.odometers == ((0,) * 30, (1,) * 30)
    flat = rank2_ers_classify(D.stationary([[1, 1], [1, 1]], (1, 1)), 20)
    assert flat.verdict.value == 1


def test_alternating_example_unique_measure():
    report = rank2_ers_classify(ALTERNATING, 30)
    assert report.verdict.to_json() == {"kind": "exact", "value": 1}
    assert not report.row("split-max").classification.convergent
    assert not report.row("split-min").classification.convergent
    assert report.row("min-series").classification.convergent


def test_pf_stationary():
    result = stationary_pf(ST, tol=1e-9)
    assert abs(result.eigenvalue - 3) < 1e-9
    lam, x = result.rationalize()
    assert lam == 3 and x == (Fraction(1, 2), Fraction(1, 2))
    assert pf_measure(ST, result, 6) == uniform_ecs_measure(ST, 6)


def test_pf_trivial_and_periodic():
    one = stationary_pf(D.stationary([[1]], (1,)))
    assert abs(one.eigenvalue - 1) < 1e-12
    swap = stationary_pf(D.stationary([[0, 1], [1, 0]], (1, 1)))
    assert abs(swap.eigenvalue - 1) < 1e-9
    lopsided = stationary_pf(D.stationary([[0, 2], [1, 0]], (1, 1)))
    assert lopsided.damped and abs(lopsided.eigenvalue - 2 ** 0.5) < 1e-9


def test_pf_errors():
    with pytest.raises(Reducible):
        stationary_pf(D.stationary([[1, 0], [1, 1]], (1, 1)))
    with pytest.raises(NotStationary):
        stationary_pf(N2)


def test_random_measure_is_compatible():
    spec = allones("n+1")
    mu = random_measure(spec, 6, 11)
    check_compatible(spec, mu)


def test_step_ratio_uses_mass_coordinates():
    assert step_diameter_ratio(ST, 4) == Fraction(1, 3)
