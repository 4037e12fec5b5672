"""The ten acceptance criteria.

Each test is named ``test_criterion_NN_*``; ``conftest.py`` folds the
outcomes into one PASS/FAIL line per criterion at the end of the run.
"""

import random
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import pytest

from adic_measures import diagram as D
from adic_measures.extension import criteria, rank2_odometer_check, thin_implies_infinite_check, vertex_criteria
from adic_measures.measure import (
    count_ergodic,
    level_mass,
    pf_measure,
    propagate_down,
    rank2_ers_classify,
    stationary_pf,
    step_diameter_ratio,
    uniform_ecs_measure,
    z_determinant,
)
from adic_measures.oracle import (
    counts_between,
    enumerate_paths,
    random_edge_sub,
    random_measure,
    random_spec,
    random_vertex_sub,
)
from adic_measures.subdiagram import lemma_level, subspace_measure, thinness, vertex_sub

from fixtures import (
    ALTERNATING,
    N1,
    N2,
    NON_EXTENSION,
    RANK2_FIXTURES,
    ST,
    all_but_first,
    allones,
    first_vertex,
    section5,
    stationary_edge_sub,
)

DATA = Path(__file__).parent / "data"


def prod(xs):
    out = Fraction(1)
    for x in xs:
        out *= x
    return out


def random_regime(count, max_levels):
    """Random spec, vertex or edge subdiagram, parent measure and subdiagram measure."""
    rng = random.Random(2024)
    for i in range(count):
        levels = rng.randint(2, max_levels)
        spec = random_spec(10_000 + i, levels=levels, max_vertices=3, max_entry=3)
        if i % 2:
            sub = random_edge_sub(spec, levels, i)
        else:
            sub = random_vertex_sub(spec, levels, i)
        yield spec, sub, levels, random_measure(spec, levels, i), random_measure(spec, levels, i + 1, sub)


# ---------------------------------------------------------------- 1


def test_criterion_01_heights_and_mass():
    for seed in range(200):
        spec = random_spec(seed, levels=5, max_vertices=4, max_entry=3)
        table = enumerate_paths(spec, 5)
        mu = random_measure(spec, 5, seed)
        for n in range(1, 6):
            assert spec.heights(n) == table.counts(n)
            assert level_mass(spec, mu.at(n), n) == 1
        for n in range(1, 5):
            p = propagate_down(spec, mu.at(n + 1), n)
            assert level_mass(spec, p, n) == level_mass(spec, mu.at(n + 1), n + 1)


# ---------------------------------------------------------------- 2


def test_criterion_02_subspace_identity():
    for spec, sub, depth, mu, _ in random_regime(120, 16):
        report = subspace_measure(sub, mu, depth)
        for N in range(1, depth + 1):
            # term_n = sum ftilde_{v,w} p^(n+1)_v hbar^(n)_w, recomputed here with plain loops
            total = Fraction(0)
            for n in range(1, N):
                f, fb, hb, p = spec.matrix(n), sub.fbar(n), sub.hbar(n), mu.at(n + 1)
                total += sum((f[v][w] - fb[v][w]) * p[v] * hb[w] for v in range(len(f)) for w in range(len(f[0])))
            y_N = sum(h * x for h, x in zip(sub.hbar(N), mu.at(N)))
            assert report.mu_Y[0] - total == y_N == report.mu_Y[N - 1]


# ---------------------------------------------------------------- 3


def test_criterion_03_extension_increments():
    for spec, sub, depth, _, pbar in random_regime(120, 16):
        report = criteria(sub, pbar, depth)
        for n in range(1, depth):
            f, fb, h, p1 = spec.matrix(n), sub.fbar(n), spec.heights(n), pbar.at(n + 1)
            term = sum((f[v][w] - fb[v][w]) * h[w] * p1[v]
                       for v in range(len(f)) if v in sub.W(n + 1) for w in range(len(f[0])))
            assert report.masses[n] - report.masses[n - 1] == term


# ---------------------------------------------------------------- 4


ALLONES_SUPPORTS = {
    "singleton": ("first-vertex", lambda i, size: 1),
    "all-but-first": ("all-but-first", lambda i, size: size - 1),
}


@pytest.mark.parametrize("sizes", ["n+1", "2**n"])
@pytest.mark.parametrize("support", sorted(ALLONES_SUPPORTS))
def test_criterion_04_allones(sizes, support):
    depth = 10
    spec = allones(sizes)
    name, count = ALLONES_SUPPORTS[support]
    sub = vertex_sub(spec, name)
    ratio = [Fraction(count(i, spec.size(i)), spec.size(i)) for i in range(1, depth + 1)]
    measure = subspace_measure(sub, None, depth)
    ext = vertex_criteria(sub, None, depth)
    for n in range(1, depth + 1):
        assert measure.mu_Y[n - 1] == prod(ratio[:n])
        assert ext.masses[n - 1] == prod(1 / r for r in ratio[: n - 1])
    assert measure.verdict.kind == ext.verdict.kind == "exact"
    assert (measure.verdict.value == "positive") == (ext.verdict.value == "finite")


# ---------------------------------------------------------------- 5


def test_criterion_05_rank2_classification():
    assert rank2_ers_classify(N2, 40).verdict.to_json() == {"kind": "exact", "value": 2}
    assert rank2_ers_classify(N1, 40).verdict.to_json() == {"kind": "exact", "value": 1}
    alt = rank2_ers_classify(ALTERNATING, 40)
    assert alt.verdict.to_json() == {"kind": "exact", "value": 1}
    odo = rank2_odometer_check(ALTERNATING, "1,0", 40)
    assert odo.verdict.to_json() == {"kind": "exact", "value": "finite"}
    for n in range(2, 40):
        a = max(max(row) for row in ALTERNATING.matrix(n))  # a = 2^m, the large entry
        assert odo.rows[0].terms[n - 1] == Fraction(2, a + 2)
    for track in ("0", "1", "0,1", "1,0"):
        assert rank2_odometer_check(NON_EXTENSION, track, 40).verdict.to_json() == \
            {"kind": "exact", "value": "infinite"}


# ---------------------------------------------------------------- 6


def test_criterion_06_rank_k_consistency():
    rng = random.Random(6)
    for _ in range(20):
        r = rng.randint(2, 40)
        a, d = rng.randint(0, r), rng.randint(0, r)
        if (a, d) == (0, 0) or (a, d) == (r, r):
            a = 1
        spec = D.stationary([[a, r - a], [d, r - d]], (1, 1))
        level = rng.randint(1, 20)
        assert abs(z_determinant(spec, level)) == step_diameter_ratio(spec, level)
    for name, spec in RANK2_FIXTURES.items():
        det = count_ergodic(spec, 40, "determinant").verdict
        dia = count_ergodic(spec, 40, "diameter").verdict
        assert (det.kind, det.value) == (dia.kind, dia.value), name


# ---------------------------------------------------------------- 7


def test_criterion_07_perron_frobenius():
    result = stationary_pf(ST, tol=1e-9)
    assert abs(result.eigenvalue - 3) < 1e-9
    mu = pf_measure(ST, result, 12)
    assert all(mu.at(n) == (Fraction(1, 2) / 3 ** (n - 1),) * 2 for n in range(1, 13))
    assert mu == uniform_ecs_measure(ST, 12)
    report = criteria(stationary_edge_sub(), None, 12)
    assert report.masses == tuple(Fraction(3, 2) ** (n - 1) for n in range(1, 13))
    witness = thin_implies_infinite_check(stationary_edge_sub(), None, 12, Fraction(10))
    assert witness.level == 7 and witness.masses[6] == Fraction(729, 64)


# ---------------------------------------------------------------- 8


def test_criterion_08a_fast_odometer_positive():
    report = subspace_measure(first_vertex(section5("2**n")), None, 4)
    assert report.mu_Y[-1] == Fraction(32, 135)
    assert report.verdict.kind == "exact" and report.verdict.value == "positive"


def test_criterion_08b_slow_odometer_zero_and_infinite():
    sub = first_vertex(section5("n+1"))
    report = subspace_measure(sub, None, 17)
    assert report.verdict.kind == "exact" and report.verdict.value == "zero"
    ext = vertex_criteria(sub, None, 17)
    assert ext.verdict.to_json() == {"kind": "exact", "value": "infinite"}
    partial = report.partial_sums
    assert all(b > a for a, b in zip(partial, partial[1:])) and all(s < Fraction(1, 2) for s in partial)


def test_criterion_08c_partial_sum_within_tolerance():
    # S_16 = mu(Y^(1)) - mu(Y^(17)) = 1/2 - 1/18 = 4/9, so |S_16 - 1/2| = 1/18 > 0.05.
    report = subspace_measure(first_vertex(section5("n+1")), None, 17)
    s16 = report.partial_sums[15]
    assert s16 == Fraction(4, 9)
    assert abs(s16 - Fraction(1, 2)) <= Fraction(5, 100)


# ---------------------------------------------------------------- 9


def lemma_fixtures():
    return {
        "stationary-edge": stationary_edge_sub(),
        "allones-singleton": first_vertex(allones("n+1")),
        "allones-all-but-first": all_but_first(allones("n+1")),
        "section5-slow-odometer": first_vertex(section5("n+1")),
        "section5-fast-odometer": first_vertex(section5("2**n")),
    }


def test_criterion_09_lemma_levels():
    checked = 0
    for name, sub in lemma_fixtures().items():
        if thinness(sub, 10).verdict.value != "thin":
            continue
        checked += 1
        for K in (2, 4):
            N = lemma_level(sub, 1, K, 32)
            assert N is not None and N <= 32, (name, K)
            counts = counts_between(sub.parent, 1, N)
            hb = sub.hbar(N)
            assert all(counts[w][v] >= K * hb[v] for w in sub.W(1) for v in sub.W(N)), (name, K)
    assert checked >= 3


# ---------------------------------------------------------------- 10


CLI_RUNS = [
    ("heights", "stationary.json", "--depth", "12"),
    ("measure", "count", "n_squared.json", "--depth", "40"),
    ("subdiagram", "measure", "section5_first_vertex.json", "--depth", "8"),
    ("extension", "criteria", "stationary_edge_sub.json", "--depth", "20"),
    ("extension", "odometer-check", "n_squared.json", "--track", "0", "--depth", "30"),
]


def test_criterion_10_determinism():
    for argv in CLI_RUNS:
        argv = [str(DATA / a) if a.endswith(".json") else a for a in argv]
        outs = [subprocess.run([sys.executable, "-m", "adic_measures", *argv], capture_output=True, check=True).stdout
                for _ in range(2)]
        assert outs[0] == outs[1] and outs[0]
