"""Invariant measures: compatible families, simplices and ergodic counts.

A measure is stored through its cylinder values ``p^(n)_v`` for levels
``1..N``; compatibility means ``p^(n) = F_n^T p^(n+1)``.  The simplex of
candidate level-``n`` vectors is ``{x >= 0 : sum_v h^(n)_v x_v = 1}``.
Distances between such vectors are measured in mass coordinates
``y_v = h_v x_v``, where the map ``F_n^T`` becomes ``y -> y Q_n`` with the
stochastic matrix ``Q_n``.  For equal row sums this is the ordinary L1
distance up to a constant factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Any, Sequence

import numpy as np

from .closedform import Seq
from .diagram import (
    DiagramSpec,
    FamilyBody,
    Stationary,
    ecs_check,
    ers_check,
    stochastic_at,
)
from .errors import (
    IncompatibleMeasure,
    NoConvergence,
    NotECS,
    NotERS,
    NotRank2,
    NotStationary,
    Reducible,
    SpecError,
)
from .linalg import det, dot, l1, matmul, rank, vecmat
from .series import (
    Classification,
    Verdict,
    classify_seq_sum,
    combine,
    heuristic_sum,
)


@dataclass(frozen=True)
class MeasureFamily:
    """Cylinder values ``vectors[n-1] = p^(n)`` for ``n = 1..depth``."""

    vectors: tuple[tuple[Fraction, ...], ...]

    @property
    def depth(self) -> int:
        return len(self.vectors)

    def at(self, n: int) -> tuple[Fraction, ...]:
        if not 1 <= n <= self.depth:
            raise IncompatibleMeasure(f"measure known on levels 1..{self.depth}, level {n} requested")
        return self.vectors[n - 1]

    def to_json(self) -> list[list[Fraction]]:
        return [list(v) for v in self.vectors]


def propagate_down(spec: DiagramSpec, p: Sequence[Fraction], n: int) -> tuple[Fraction, ...]:
    """``F_n^T p``: cylinder values at level ``n`` from those at level ``n+1``."""
    f = spec.matrix(n)
    if len(p) != len(f):
        raise IncompatibleMeasure(f"vector of length {len(p)} does not match |V_{n + 1}| = {len(f)}")
    if any(x < 0 for x in p):
        raise IncompatibleMeasure("cylinder values must be non-negative")
    return tuple(Fraction(x) for x in vecmat(p, f))


def level_mass(spec: DiagramSpec, p: Sequence[Fraction], n: int) -> Fraction:
    return Fraction(dot(spec.heights(n), p))


def measure_from_top(spec: DiagramSpec, top: Sequence[Fraction], depth: int) -> MeasureFamily:
    """Propagate a level-``depth`` vector down to level 1."""
    vecs = [tuple(Fraction(x) for x in top)]
    for n in range(depth - 1, 0, -1):
        vecs.append(propagate_down(spec, vecs[-1], n))
    return MeasureFamily(tuple(reversed(vecs)))


def check_compatible(spec: DiagramSpec, mu: MeasureFamily, mass: Fraction | None = Fraction(1)) -> None:
    for n in range(1, mu.depth):
        if propagate_down(spec, mu.at(n + 1), n) != tuple(mu.at(n)):
            raise IncompatibleMeasure(f"p^({n}) != F_{n}^T p^({n + 1})")
    if mass is not None and level_mass(spec, mu.at(1), 1) != mass:
        raise IncompatibleMeasure(f"level mass is {level_mass(spec, mu.at(1), 1)}, expected {mass}")


def ecs_constants(spec: DiagramSpec, depth: int) -> list[int]:
    """``c_0, c_1, ..., c_{depth-1}`` with ``c_0`` the total root weight."""
    check = ecs_check(spec, depth)
    if not check.ok:
        raise NotECS(f"column sums differ at level {check.first_violation}")
    return [sum(spec.root)] + list(check.sums)


def uniform_ecs_measure(spec: DiagramSpec, depth: int) -> MeasureFamily:
    """``p^(n)_v = 1/(c_0 ... c_{n-1})``, the canonical measure of an ECS diagram.

    With a constant root ``(r_0, ..., r_0)`` the first constant is
    ``c_0 = r_0 |V_1|``; in general it is the total root weight, which
    keeps the level mass equal to one.
    """
    c = ecs_constants(spec, depth)
    vecs = []
    denom = 1
    for n in range(1, depth + 1):
        denom *= c[n - 1]
        vecs.append((Fraction(1, denom),) * spec.size(n))
    return MeasureFamily(tuple(vecs))


# ----------------------------------------------------------------- simplex


@dataclass(frozen=True)
class SimplexState:
    """Images at ``base_level`` of the extreme points of the level-``depth`` simplex."""

    base_level: int
    depth: int
    extreme_points: tuple[tuple[int, tuple[Fraction, ...]], ...]
    diameter: Fraction  # max pairwise distance in mass coordinates
    base_diameter: Fraction

    @property
    def diameter_ratio(self) -> Fraction:
        return self.diameter / self.base_diameter if self.base_diameter else Fraction(0)

    def to_json(self) -> dict:
        return {
            "base_level": self.base_level,
            "depth": self.depth,
            "extreme_points": [{"vertex": v, "p": list(x)} for v, x in self.extreme_points],
            "diameter": self.diameter,
            "base_diameter": self.base_diameter,
            "diameter_ratio": self.diameter_ratio,
        }


def _mass_diameter(spec: DiagramSpec, level: int, points: Sequence[Sequence[Fraction]]) -> Fraction:
    h = spec.heights(level)
    best = Fraction(0)
    for x, y in combinations(points, 2):
        d = sum(hv * abs(a - b) for hv, a, b in zip(h, x, y))
        best = max(best, Fraction(d))
    return best


def simplex_contract(spec: DiagramSpec, to_depth: int, base_level: int = 1) -> SimplexState:
    """Extreme points ``G_b o ... o G_{N-1}(e_i)`` with ``e_i = unit_i / h^(N)_i``."""
    if to_depth <= base_level:
        raise ValueError("to_depth must exceed base_level")
    prod = spec.matrix(base_level)
    for k in range(base_level + 1, to_depth):
        prod = matmul(spec.matrix(k), prod)
    top = spec.heights(to_depth)
    points = tuple((i, tuple(Fraction(x, top[i]) for x in row)) for i, row in enumerate(prod))
    base_vertices = [
        tuple(Fraction(1, hv) if j == i else Fraction(0) for j in range(len(spec.heights(base_level))))
        for i, hv in enumerate(spec.heights(base_level))
    ]
    return SimplexState(
        base_level,
        to_depth,
        points,
        _mass_diameter(spec, base_level, [p for _, p in points]),
        _mass_diameter(spec, base_level, base_vertices),
    )


def step_diameter_ratio(spec: DiagramSpec, n: int) -> Fraction:
    """``diam G_n(Delta^(n+1)) / diam Delta^(n)`` in mass coordinates.

    This is the contraction coefficient ``1/2 max_{v,v'} sum_w |q_vw - q_v'w|``
    of the stochastic matrix ``Q_n``.
    """
    q = stochastic_at(spec, n)
    if spec.size(n) < 2:
        return Fraction(0)
    best = Fraction(0)
    for a, b in combinations(q, 2):
        best = max(best, l1(a, b))
    return best / 2


# ------------------------------------------------------------ determinants


def _row_sum(spec: DiagramSpec, n: int) -> int:
    f = spec.matrix(n)
    sums = {sum(r) for r in f}
    if len(sums) != 1:
        raise NotERS(f"row sums of F_{n} differ: {sorted(sums)}")
    return sums.pop()


def _z_matrix(f, r):
    k = len(f)
    return [[Fraction(f[v][w], r) for w in range(k - 1)] + [Fraction(1)] for v in range(k)]


def z_determinant(spec: DiagramSpec, n: int) -> Fraction:
    """Determinant of ``(f_{.,1}/r_n, ..., f_{.,k-1}/r_n, 1)``; for 2x2 it is ``(a-d)/r``."""
    f = spec.matrix(n)
    if len(f) != len(f[0]):
        raise NotERS(f"F_{n} is not square")
    return det(_z_matrix(f, _row_sum(spec, n)))


def _seq_det(m: list[list[Seq]]) -> Seq:
    if len(m) == 1:
        return m[0][0]
    total = Seq.const(0)
    for j in range(len(m)):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _seq_det(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def symbolic_z(spec: DiagramSpec) -> tuple[Seq, int] | None:
    """Closed form of ``z^(n)`` for the tail, with the level it is valid from."""
    tail = spec.tail
    if tail is None or tail.matrix is None or tail.row_sum is None:
        return None
    k = len(tail.matrix)
    r = tail.row_sum
    m = [[tail.matrix[v][w] / r for w in range(k - 1)] + [Seq.const(1)] for v in range(k)]
    return _seq_det(m), tail.start


def symbolic_step_ratio(spec: DiagramSpec) -> tuple[Seq, int] | None:
    """Closed form of the contraction coefficient for ERS tails of fixed size."""
    tail = spec.tail
    if tail is None or tail.matrix is None or tail.row_sum is None:
        return None
    k = len(tail.matrix)
    if k < 2:
        return Seq.const(0), tail.start
    best = None
    for i, j in combinations(range(k), 2):
        dist = Seq.const(0)
        for w in range(k):
            dist = dist + (tail.matrix[i][w] - tail.matrix[j][w]).eventual_abs()
        best = dist if best is None else best.eventual_max(dist)
    return best / (tail.row_sum * 2), tail.start


def _check_closed_form(seq: Seq, start: int, depth: int, actual) -> bool:
    return all(seq(n) == actual(n) for n in range(start, depth))


@dataclass(frozen=True)
class ErgodicCountReport:
    mode: str
    depth: int
    vertices: int
    terms: tuple[Fraction, ...]  # |z^(n)| or step ratios, n = 1..depth-1
    ranks: tuple[int, ...]
    partial_product: Fraction
    simplex_diameter: Fraction | None
    series: Classification
    verdict: Verdict
    singular_levels: tuple[int, ...] = ()
    closed_form: list[str] | None = None
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "depth": self.depth,
            "vertices": self.vertices,
            "terms": list(self.terms),
            "ranks": list(self.ranks),
            "partial_product": self.partial_product,
            "simplex_diameter": self.simplex_diameter,
            "series": self.series.to_json(),
            "verdict": self.verdict.to_json(),
            "singular_levels": list(self.singular_levels),
            "closed_form": self.closed_form,
            "notes": list(self.notes),
        }


def _fixed_size(spec: DiagramSpec, depth: int) -> int | None:
    sizes = {spec.size(n) for n in range(1, depth + 1)}
    return sizes.pop() if len(sizes) == 1 else None


def count_ergodic(spec: DiagramSpec, depth: int, mode: str = "auto") -> ErgodicCountReport:
    """Count finite ergodic measures of a finite-rank diagram.

    ``determinant`` needs square ERS matrices and classifies
    ``sum (1 - |z^(n)|)``; ``diameter`` classifies ``sum (1 - delta_n)`` for
    the per-step contraction ratios ``delta_n``.  A convergent series gives
    ``k`` measures in determinant mode; a divergent one collapses the
    simplex to a point in either mode.
    """
    if depth < 2:
        raise ValueError("depth must be at least 2")
    k = _fixed_size(spec, depth)
    if mode == "auto":
        mode = "determinant" if k is not None and ers_check(spec, depth).ok else "diameter"
    notes: list[str] = []
    if mode == "determinant":
        if k is None:
            raise NotERS("determinant mode needs the same number of vertices at every level")
        if not ers_check(spec, depth).ok:
            raise NotERS(f"row sums differ at level {ers_check(spec, depth).first_violation}")
        values = [z_determinant(spec, n) for n in range(1, depth)]
        terms = tuple(abs(z) for z in values)
        closed = symbolic_z(spec)
        actual = lambda n: values[n - 1]
    elif mode == "diameter":
        terms = tuple(step_diameter_ratio(spec, n) for n in range(1, depth))
        closed = symbolic_step_ratio(spec) if k is not None and ers_check(spec, depth).ok else None
        actual = lambda n: terms[n - 1]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    ranks = tuple(rank(spec.matrix(n)) for n in range(1, depth))
    width = k if k is not None else max(spec.size(n) for n in range(1, depth + 1))
    singular = tuple(n for n, r in enumerate(ranks, start=1) if r < min(len(spec.matrix(n)), len(spec.matrix(n)[0])))
    product = Fraction(1)
    for t in terms:
        product *= t

    exact: Classification | None = None
    closed_text = None
    if closed is not None:
        seq, start = closed
        if start < depth and _check_closed_form(seq, start, depth, actual):
            exact = classify_seq_sum(1 - seq.eventual_abs())
            closed_text = seq.describe()
        else:
            notes.append("closed form unavailable within depth or rejected by the exact check")
    heur = heuristic_sum([1 - t for t in terms])
    series, extra = combine(exact, heur)
    notes += extra

    if width == 1:
        verdict = Verdict("exact", 1)
    elif series.convergent is None:
        verdict = Verdict("inconclusive")
    elif series.convergent:
        if mode == "determinant" or width == 2:
            kind = "exact" if series.exact else "heuristic"
            verdict = Verdict(kind, width)
        else:
            verdict = Verdict("inconclusive", notes=("non-collapsing contraction ratios do not bound the count from below",))
    else:
        kind = "exact" if series.exact else "heuristic"
        if width == 2 or mode == "diameter":
            verdict = Verdict(kind, 1)
        else:
            verdict = Verdict("upper-bound" if series.exact else "heuristic", width - 1)
    if singular and verdict.kind == "exact" and series.convergent:
        notes.append(
            "levels %s are singular; the verdict concerns the tail past them, which carries the same measures"
            % list(singular)
        )
    diameter = None
    if width <= 4 and depth <= 80:
        diameter = simplex_contract(spec, depth).diameter
    return ErgodicCountReport(
        mode, depth, width, terms, ranks, product, diameter, series, verdict, singular, closed_text, tuple(notes)
    )


# ----------------------------------------------------------------- rank two


@dataclass(frozen=True)
class SeriesRow:
    name: str
    terms: tuple[Fraction, ...]
    partial_sum: Fraction
    classification: Classification
    closed_form: list[str] | None = None

    def to_json(self) -> dict:
        return {
            "criterion": self.name,
            "terms": list(self.terms),
            "partial_sum": self.partial_sum,
            "class": self.classification.to_json(),
            "closed_form": self.closed_form,
        }


@dataclass(frozen=True)
class Rank2Report:
    depth: int
    rows: tuple[SeriesRow, ...]
    verdict: Verdict
    no_odometer: bool | None
    odometers: tuple[tuple[int, ...], ...] | None
    notes: tuple[str, ...] = ()

    def row(self, name: str) -> SeriesRow:
        return next(r for r in self.rows if r.name == name)

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "rows": [r.to_json() for r in self.rows],
            "verdict": self.verdict.to_json(),
            "no_odometer": self.no_odometer,
            "odometers": [list(t) for t in self.odometers] if self.odometers else None,
            "notes": list(self.notes),
        }


def _rank2_entries(spec: DiagramSpec, depth: int):
    out = []
    for n in range(1, depth):
        f = spec.matrix(n)
        if len(f) != 2 or len(f[0]) != 2:
            raise NotRank2(f"F_{n} is {len(f)}x{len(f[0])}")
        (a, c), (d, b) = f
        if a + c != d + b:
            raise NotERS(f"row sums of F_{n} differ")
        out.append((a, b, c, d, a + c))
    return out


def series_row(name: str, terms: Sequence[Fraction], closed: Seq | None, start: int | None,
               notes: list[str]) -> SeriesRow:
    """Classify one series, preferring the closed form when it checks out."""
    exact = None
    text = None
    if closed is not None and start is not None and start <= len(terms):
        if all(closed(n) == terms[n - 1] for n in range(start, len(terms) + 1)):
            exact = classify_seq_sum(closed)
            text = closed.describe()
        else:
            notes.append(f"{name}: closed form rejected by the exact check")
    cls, extra = combine(exact, heuristic_sum(list(terms)))
    notes += extra
    return SeriesRow(name, tuple(terms), sum(terms, Fraction(0)), cls, text)


def odometer_tracks(spec: DiagramSpec, depth: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """The two vertex tracks of the constructive recipe: cross where ``a_k < d_k``."""
    first = [0]
    for n in range(1, depth):
        (a, _), (d, _) = spec.matrix(n)
        first.append(1 - first[-1] if a < d else first[-1])
    return tuple(first), tuple(1 - v for v in first)


def rank2_ers_classify(spec: DiagramSpec, depth: int) -> Rank2Report:
    """Two ergodic measures iff ``sum (1 - |a-d|/r) < oo``, split as in the two series."""
    entries = _rank2_entries(spec, depth)
    notes: list[str] = []
    tail = spec.tail
    sym = None
    if tail is not None and tail.matrix is not None and len(tail.matrix) == 2 and tail.row_sum is not None:
        (sa, sc), (sd, sb) = tail.matrix
        r = tail.row_sum
        hi, lo = sa.eventual_max(sd), sa.eventual_min(sd)
        smallest = sa.eventual_min(sb).eventual_min(sc.eventual_min(sd))
        sym = {
            "main": 1 - (sa - sd).eventual_abs() / r,
            "split-max": 1 - hi / r,
            "split-min": lo / r,
            "min-series": smallest / r,
        }
    start = tail.start if sym else None
    raw = {
        "main": [1 - Fraction(abs(a - d), r) for a, b, c, d, r in entries],
        "split-max": [1 - Fraction(max(a, d), r) for a, b, c, d, r in entries],
        "split-min": [Fraction(min(a, d), r) for a, b, c, d, r in entries],
        "min-series": [Fraction(min(a, b, c, d), r) for a, b, c, d, r in entries],
    }
    rows = tuple(series_row(name, raw[name], sym[name] if sym else None, start, notes) for name in raw)
    main = rows[0].classification
    if main.convergent is None:
        verdict = Verdict("inconclusive")
    else:
        verdict = Verdict("exact" if main.exact else "heuristic", 2 if main.convergent else 1)
    split = [rows[1].classification, rows[2].classification]
    if main.exact and all(c.exact for c in split):
        if main.convergent != (split[0].convergent and split[1].convergent):
            notes.append("split series disagree with the main series")
    min_cls = rows[3].classification
    no_odometer = (not min_cls.convergent) if min_cls.exact else None
    odometers = odometer_tracks(spec, depth) if verdict.value == 2 else None
    return Rank2Report(depth, rows, verdict, no_odometer, odometers, tuple(notes))


# -------------------------------------------------------- Perron-Frobenius


@dataclass(frozen=True)
class PFResult:
    eigenvalue: float
    vector: tuple[float, ...]
    iterations: int
    damped: bool
    tol: float
    residual: float

    def rationalize(self, max_denominator: int = 10**6) -> tuple[Fraction, tuple[Fraction, ...]]:
        lam = Fraction(self.eigenvalue).limit_denominator(max_denominator)
        return lam, tuple(Fraction(x).limit_denominator(max_denominator) for x in self.vector)

    def to_json(self) -> dict:
        return {
            "eigenvalue": repr(self.eigenvalue),
            "vector": [repr(x) for x in self.vector],
            "iterations": self.iterations,
            "damped": self.damped,
            "tol": repr(self.tol),
            "residual": repr(self.residual),
        }


def is_irreducible(matrix: Sequence[Sequence[int]]) -> bool:
    k = len(matrix)
    for s in range(k):
        seen, todo = {s}, [s]
        while todo:
            u = todo.pop()
            for v in range(k):
                if matrix[u][v] and v not in seen:
                    seen.add(v)
                    todo.append(v)
        if len(seen) < k:
            return False
    return True


def is_primitive(matrix: Sequence[Sequence[int]]) -> bool:
    """Some power is strictly positive (Wielandt: power ``(k-1)^2 + 1`` suffices)."""
    k = len(matrix)
    pattern = [[1 if x else 0 for x in row] for row in matrix]
    power = pattern
    for _ in range((k - 1) ** 2):
        power = [[1 if any(power[i][t] and pattern[t][j] for t in range(k)) else 0 for j in range(k)] for i in range(k)]
    return all(all(row) for row in power)


def _power(a: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray, int] | None:
    x = np.ones(a.shape[0]) / a.shape[0]
    prev = None
    for it in range(1, max_iter + 1):
        y = a @ x
        lam = float(x @ y / (x @ x))
        x = y / np.abs(y).sum()
        if prev is not None and abs(lam - prev) < tol:
            return lam, x, it
        prev = lam
    return None


def stationary_pf(spec: DiagramSpec, tol: float = 1e-12, max_iter: int = 10_000) -> PFResult:
    """Perron-Frobenius data of ``A = F^T``, normalised so that ``sum root_v x_v = 1``.

    The induced measure is ``p^(n)_v = x_v / lambda^(n-1)``.
    """
    if not isinstance(spec.body, Stationary):
        raise NotStationary("stationary_pf needs a stationary body")
    f = spec.body.matrix_
    if len(f) != len(f[0]):
        raise NotStationary("stationary matrix must be square")
    if not is_irreducible(f):
        raise Reducible("the directed graph of positive entries is not strongly connected")
    a = np.array(f, dtype=float).T
    damped = False
    found = _power(a, tol, max_iter)
    if found is None:
        damped = True
        found = _power(a + np.eye(a.shape[0]), tol, max_iter)
        if found is None:
            raise NoConvergence(f"no convergence in {max_iter} iterations")
        lam, x, its = found
        lam -= 1.0
    else:
        lam, x, its = found
    x = x / float(np.dot(np.array(spec.root, dtype=float), x))
    lam = float(np.dot(a @ x, x) / np.dot(x, x))
    residual = float(np.max(np.abs(a @ x - lam * x)))
    return PFResult(lam, tuple(float(v) for v in x), its, damped, tol, residual)


def pf_measure(spec: DiagramSpec, result: PFResult, depth: int, max_denominator: int = 10**6) -> MeasureFamily:
    """Rationalised ``p^(n)_v = x_v / lambda^(n-1)`` for ``n = 1..depth``."""
    lam, x = result.rationalize(max_denominator)
    return MeasureFamily(tuple(tuple(v / lam ** (n - 1) for v in x) for n in range(1, depth + 1)))


def is_family(spec: DiagramSpec) -> bool:
    return isinstance(spec.body, FamilyBody)
