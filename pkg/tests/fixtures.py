"""Diagrams and subdiagrams shared by the test modules."""

from fractions import Fraction

from adic_measures import diagram as D
from adic_measures.measure import MeasureFamily
from adic_measures.oracle import enumerate_paths
from adic_measures.subdiagram import edge_sub, vertex_sub

ST = D.stationary([[2, 1], [1, 2]], (1, 1))
N2 = D.family_spec("rank2-ers", a="n**2", b="n**2", c=1, d=1)
N1 = D.family_spec("rank2-ers", a="n", b="n", c=1, d=1)
ODOMETER = D.stationary([[3]], (2,))

# Alternating rank-2 example: branch 0 is the even level, branch 1 the odd one.
ALTERNATING = D.family_spec(
    "rank2-ers",
    a={"period": 2, "branches": ["2**m/2+1", "2"], "overrides": {1: 2}},
    c={"period": 2, "branches": ["2**m/2+1", "2**m"], "overrides": {1: 1}},
    d={"period": 2, "branches": ["2**m", "2**m/2+1"], "overrides": {1: 1}},
    b={"period": 2, "branches": ["2", "2**m/2+1"], "overrides": {1: 2}},
)
NON_EXTENSION = D.family_spec("rank2-ers", a=2, c="2**n", d="2**n/2+1", b="2**n/2+1")

RANK2_FIXTURES = {"n-squared": N2, "n": N1, "alternating": ALTERNATING, "stationary": ST}


def section5(a):
    return D.family_spec("section5", a=a)


def allones(sizes):
    return D.family_spec("allones", sizes=sizes)


def first_vertex(spec):
    return vertex_sub(spec, "first-vertex")


def all_but_first(spec):
    return vertex_sub(spec, "all-but-first")


def stationary_edge_sub():
    return edge_sub(ST, [[1, 1], [1, 1]])


def lastcol_edge_sub():
    parent = D.family_spec("ecs-lastcol2", sizes="2**n")
    return edge_sub(parent, {"kind": "family", "name": "allones", "params": {"sizes": "2**n"}}, (1, 1))


def path_count_measure(spec, depth):
    """``p^(n)_v = 1 / #paths to level n``: the canonical ECS measure, read off enumerated paths."""
    table = enumerate_paths(spec, depth)
    return MeasureFamily(tuple(
        (Fraction(1, sum(table.counts(n))),) * spec.size(n) for n in range(1, depth + 1)
    ))


__all__ = [name for name in dir() if name.isupper() or not name.startswith("_")]
