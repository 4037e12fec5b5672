"""Bratteli diagrams given by a root vector and a rule for the incidence matrices.

Levels are numbered from 1.  ``matrix_at(spec, n)`` is the matrix ``F_n``
with ``|V_{n+1}|`` rows and ``|V_n|`` columns, and the root vector plays
the part of ``F_0 = h^(1)``.  Vertices are 0-based everywhere.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from pathlib import Path
from typing import Any, Union

from .closedform import RatExp, Seq
from .errors import (
    DimensionMismatch,
    InvalidLevelList,
    LevelOutOfRange,
    NonIntegerFamilyEntry,
    SpecError,
)
from .families import Family, Tail, make_family
from .linalg import Matrix, matmul, matvec

# ------------------------------------------------------------------ bodies


def _as_matrix(raw: Any, what: str) -> Matrix:
    if not isinstance(raw, (list, tuple)) or not raw:
        raise SpecError(f"{what}: expected a non-empty list of rows")
    rows = []
    for row in raw:
        if not isinstance(row, (list, tuple)) or not row:
            raise SpecError(f"{what}: every row must be a non-empty list")
        for x in row:
            if isinstance(x, bool) or not isinstance(x, int) or x < 0:
                raise SpecError(f"{what}: entries must be non-negative integers, got {x!r}")
        rows.append(tuple(row))
    if len({len(r) for r in rows}) != 1:
        raise SpecError(f"{what}: ragged rows")
    return tuple(rows)


def _const_tail(matrices: list[Matrix], start: int, offset: int) -> Tail:
    """Tail of a cyclic list of constant matrices; branch ``j`` is level ``n % L == j``."""
    period = len(matrices)
    order = [matrices[(j - offset) % period] for j in range(period)]
    sizes = Seq(RatExp.const(len(m[0])) for m in order)

    def sums(rows: bool) -> Seq | None:
        out = []
        for m in order:
            vals = {sum(r) for r in m} if rows else {sum(c) for c in zip(*m)}
            if len(vals) != 1:
                return None
            out.append(RatExp.const(vals.pop()))
        return Seq(out)

    matrix = None
    shapes = {(len(m), len(m[0])) for m in order}
    if len(shapes) == 1 and len(order[0]) == len(order[0][0]):
        k = len(order[0])
        matrix = tuple(
            tuple(Seq(RatExp.const(m[v][w]) for m in order) for w in range(k)) for v in range(k)
        )
    return Tail(start, sizes, sums(True), sums(False), matrix)


@dataclass(frozen=True)
class Explicit:
    matrices: tuple[Matrix, ...]
    kind = "explicit"

    def matrix(self, n: int) -> Matrix:
        if not 1 <= n <= len(self.matrices):
            raise LevelOutOfRange(f"explicit body has {len(self.matrices)} matrices, level {n} requested")
        return self.matrices[n - 1]

    def tail(self) -> Tail | None:
        return None

    def to_json(self) -> dict:
        return {"kind": "explicit", "matrices": [list(map(list, m)) for m in self.matrices]}


@dataclass(frozen=True)
class Stationary:
    matrix_: Matrix
    kind = "stationary"

    def matrix(self, n: int) -> Matrix:
        if n < 1:
            raise LevelOutOfRange(f"level {n}")
        return self.matrix_

    def tail(self) -> Tail | None:
        if len(self.matrix_) != len(self.matrix_[0]):
            return None
        return _const_tail([self.matrix_], 1, 0)

    def to_json(self) -> dict:
        return {"kind": "stationary", "matrix": list(map(list, self.matrix_))}


@dataclass(frozen=True)
class Periodic:
    """``prefix[n]`` for ``n <= len(prefix)``, then the cycle repeats (1-based)."""

    prefix: tuple[Matrix, ...]
    cycle: tuple[Matrix, ...]
    kind = "periodic"

    def matrix(self, n: int) -> Matrix:
        if n < 1:
            raise LevelOutOfRange(f"level {n}")
        if n <= len(self.prefix):
            return self.prefix[n - 1]
        return self.cycle[(n - len(self.prefix) - 1) % len(self.cycle)]

    def tail(self) -> Tail | None:
        return _const_tail(list(self.cycle), len(self.prefix) + 1, len(self.prefix) + 1)

    def to_json(self) -> dict:
        return {
            "kind": "periodic",
            "prefix": [list(map(list, m)) for m in self.prefix],
            "cycle": [list(map(list, m)) for m in self.cycle],
        }


@dataclass(frozen=True)
class FamilyBody:
    name: str
    params_json: str
    family: Family = field(compare=False, hash=False, repr=False)
    kind = "family"

    @classmethod
    def build(cls, name: str, params: dict) -> "FamilyBody":
        return cls(name, json.dumps(params, sort_keys=True), make_family(name, params))

    def matrix(self, n: int) -> Matrix:
        if n < 1:
            raise LevelOutOfRange(f"level {n}")
        rows = self.family.entries(n)
        out = []
        for v, row in enumerate(rows):
            clean = []
            for w, x in enumerate(row):
                if x.denominator != 1 or x < 0:
                    raise NonIntegerFamilyEntry(
                        f"{self.name}: entry ({v},{w}) at level {n} is {x}",
                        [Violation("NonIntegerFamilyEntry", n, v, w, str(x))],
                    )
                clean.append(int(x))
            out.append(tuple(clean))
        return tuple(out)

    def tail(self) -> Tail | None:
        return self.family.tail()

    def to_json(self) -> dict:
        return {"kind": "family", "name": self.name, "params": json.loads(self.params_json)}


Body = Union[Explicit, Stationary, Periodic, FamilyBody]


# ------------------------------------------------------------------- spec


@dataclass(frozen=True)
class Violation:
    kind: str
    level: int
    vertex: int | None = None
    other: int | None = None
    detail: str = ""

    def to_json(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind, "level": self.level}
        if self.vertex is not None:
            out["vertex"] = self.vertex
        if self.other is not None:
            out["other"] = self.other
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass(frozen=True)
class ValidationReport:
    depth: int
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"ok": self.ok, "depth": self.depth, "violations": [v.to_json() for v in self.violations]}


@dataclass(frozen=True)
class DiagramSpec:
    root: tuple[int, ...]
    body: Body
    _memo: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if not self.root or any(isinstance(x, bool) or not isinstance(x, int) or x < 1 for x in self.root):
            raise SpecError("root must be a non-empty vector of positive integers")

    def matrix(self, n: int) -> Matrix:
        key = ("F", n)
        hit = self._memo.get(key)
        if hit is None:
            hit = self.body.matrix(n)
            self._memo[key] = hit
        return hit

    def size(self, n: int) -> int:
        if n == 1:
            return len(self.root)
        return len(self.matrix(n - 1))

    def heights(self, n: int) -> tuple[int, ...]:
        if n < 1:
            raise LevelOutOfRange(f"level {n}")
        with self._lock:
            table = self._memo.setdefault("h", [self.root])
            while len(table) < n:
                k = len(table)
                f = self.matrix(k)
                if len(f[0]) != len(table[-1]):
                    raise DimensionMismatch(
                        f"F_{k} has {len(f[0])} columns but level {k} has {len(table[-1])} vertices",
                        [Violation("DimensionMismatch", k)],
                    )
                table.append(matvec(f, table[-1]))
            return table[n - 1]

    @property
    def tail(self) -> Tail | None:
        return self.body.tail()


def matrix_at(spec: DiagramSpec, n: int) -> Matrix:
    """The incidence matrix ``F_n`` (rows: level ``n+1``, columns: level ``n``)."""
    return spec.matrix(n)


def heights(spec: DiagramSpec, n: int) -> tuple[int, ...]:
    """Tower heights ``h^(n)``: ``h^(1)`` is the root and ``h^(k+1) = F_k h^(k)``."""
    return spec.heights(n)


def stochastic_at(spec: DiagramSpec, n: int) -> tuple[tuple[Fraction, ...], ...]:
    """``q_{v,w} = f_{v,w} h^(n)_w / h^(n+1)_v``; every row sums to one."""
    f = spec.matrix(n)
    h, h_next = spec.heights(n), spec.heights(n + 1)
    return tuple(tuple(Fraction(x * hw, hv) for x, hw in zip(row, h)) for row, hv in zip(f, h_next))


def validate(spec: DiagramSpec, depth: int) -> ValidationReport:
    """Check vertex levels ``1..depth``, i.e. the matrices ``F_1..F_{depth-1}``."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    found: list[Violation] = []
    cols_expected = len(spec.root)
    for n in range(1, depth):
        try:
            f = spec.body.matrix(n)
        except NonIntegerFamilyEntry as exc:
            found.extend(exc.violations)
            break
        except (LevelOutOfRange, SpecError) as exc:
            found.append(Violation(type(exc).__name__, n, detail=str(exc)))
            break
        if len(f[0]) != cols_expected:
            found.append(Violation("DimensionMismatch", n, detail=f"expected {cols_expected} columns, got {len(f[0])}"))
            break
        if isinstance(spec.body, FamilyBody):
            try:
                rows_expected = spec.body.family.size(n + 1)
            except SpecError as exc:
                found.append(Violation("SpecError", n + 1, detail=str(exc)))
                break
            if len(f) != rows_expected:
                found.append(Violation("DimensionMismatch", n, detail=f"expected {rows_expected} rows, got {len(f)}"))
                break
        for v, row in enumerate(f):
            if not any(row):
                found.append(Violation("ZeroRow", n, v))
        for w in range(len(f[0])):
            if not any(row[w] for row in f):
                found.append(Violation("ZeroColumn", n, w))
        cols_expected = len(f)
    return ValidationReport(depth, tuple(found))


def telescope(spec: DiagramSpec, levels: list[int] | tuple[int, ...]) -> DiagramSpec:
    """Keep only the listed levels; skipped matrices are multiplied together."""
    levels = list(levels)
    if not levels or levels[0] != 1 or any(b <= a for a, b in zip(levels, levels[1:])):
        raise InvalidLevelList(f"levels must start at 1 and increase strictly: {levels}")
    out = []
    for lo, hi in zip(levels, levels[1:]):
        prod = spec.matrix(lo)
        for k in range(lo + 1, hi):
            prod = matmul(spec.matrix(k), prod)
        out.append(prod)
    if not out:
        raise InvalidLevelList("need at least two levels")
    return DiagramSpec(spec.root, Explicit(tuple(out)))


@dataclass(frozen=True)
class SumCheck:
    """Common row (or column) sums of ``F_1..F_{depth-1}``, or the first failure."""

    sums: tuple[int, ...] | None
    first_violation: int | None = None

    @property
    def ok(self) -> bool:
        return self.sums is not None

    def to_json(self) -> dict:
        return {"ok": self.ok, "sums": list(self.sums) if self.sums is not None else None,
                "first_violation": self.first_violation}


def _sum_check(spec: DiagramSpec, depth: int, rows: bool) -> SumCheck:
    out = []
    for n in range(1, depth):
        f = spec.matrix(n)
        vals = {sum(r) for r in f} if rows else {sum(c) for c in zip(*f)}
        if len(vals) != 1:
            return SumCheck(None, n)
        out.append(vals.pop())
    return SumCheck(tuple(out))


def ers_check(spec: DiagramSpec, depth: int) -> SumCheck:
    return _sum_check(spec, depth, True)


def ecs_check(spec: DiagramSpec, depth: int) -> SumCheck:
    return _sum_check(spec, depth, False)


def root_constant(spec: DiagramSpec) -> int | None:
    return spec.root[0] if len(set(spec.root)) == 1 else None


# --------------------------------------------------------------- json io


def body_from_json(doc: Any) -> Body:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise SpecError("body must be an object with a 'kind'")
    kind = doc["kind"]
    if kind == "explicit":
        mats = doc.get("matrices")
        if not isinstance(mats, list) or not mats:
            raise SpecError("explicit body needs a non-empty 'matrices' list")
        return Explicit(tuple(_as_matrix(m, f"matrices[{i}]") for i, m in enumerate(mats)))
    if kind == "stationary":
        return Stationary(_as_matrix(doc.get("matrix"), "matrix"))
    if kind == "periodic":
        prefix = doc.get("prefix", [])
        cycle = doc.get("cycle")
        if not isinstance(prefix, list) or not isinstance(cycle, list) or not cycle:
            raise SpecError("periodic body needs a list 'prefix' and a non-empty list 'cycle'")
        return Periodic(
            tuple(_as_matrix(m, f"prefix[{i}]") for i, m in enumerate(prefix)),
            tuple(_as_matrix(m, f"cycle[{i}]") for i, m in enumerate(cycle)),
        )
    if kind == "family":
        name = doc.get("name")
        params = doc.get("params", {})
        if not isinstance(name, str) or not isinstance(params, dict):
            raise SpecError("family body needs a string 'name' and an object 'params'")
        return FamilyBody.build(name, params)
    raise SpecError(f"unknown body kind {kind!r}")


def spec_from_json(doc: Any) -> DiagramSpec:
    if not isinstance(doc, dict) or "body" not in doc:
        raise SpecError("diagram spec must be an object with a 'body'")
    body = body_from_json(doc["body"])
    root = doc.get("root")
    if root is None:
        if not isinstance(body, FamilyBody):
            raise SpecError("'root' is required unless the body is a family")
        root = body.family.default_root()
    if not isinstance(root, list) and not isinstance(root, tuple):
        raise SpecError("'root' must be a list of positive integers")
    return DiagramSpec(tuple(root), body)


def spec_to_json(spec: DiagramSpec) -> dict:
    return {"root": list(spec.root), "body": spec.body.to_json()}


def load_spec(path: str | Path) -> DiagramSpec:
    with open(path, encoding="utf-8") as fh:
        return spec_from_json(json.load(fh))


def family_spec(name: str, root: tuple[int, ...] | None = None, **params: Any) -> DiagramSpec:
    """Convenience constructor, e.g. ``family_spec("rank2-ers", a="n**2", b="n**2", c=1, d=1)``."""
    body = FamilyBody.build(name, params)
    return DiagramSpec(tuple(root) if root else body.family.default_root(), body)


def stationary(matrix, root=None) -> DiagramSpec:
    m = _as_matrix(matrix, "matrix")
    return DiagramSpec(tuple(root) if root else (1,) * len(m[0]), Stationary(m))


def explicit(matrices, root) -> DiagramSpec:
    return DiagramSpec(tuple(root), Explicit(tuple(_as_matrix(m, "matrix") for m in matrices)))


def periodic(prefix, cycle, root) -> DiagramSpec:
    return DiagramSpec(
        tuple(root),
        Periodic(tuple(_as_matrix(m, "prefix") for m in prefix), tuple(_as_matrix(m, "cycle") for m in cycle)),
    )


def tail_period(tail: Tail) -> int:
    """Common period of every sequence in a tail."""
    seqs = [tail.sizes, tail.row_sum, tail.col_sum]
    if tail.matrix:
        seqs += [s for row in tail.matrix for s in row]
    return lcm(*[s.period for s in seqs if s is not None])
