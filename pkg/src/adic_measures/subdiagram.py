"""Vertex and edge subdiagrams, the filtration ``Y^(n)`` and thinness.

Both kinds are compiled to full-size masked matrices ``Fbar_n`` (zero
outside ``W_{n+1} x W_n`` for a vertex subdiagram), so that the series
terms and extension increments share one implementation:
``Ftilde_n = F_n - Fbar_n`` collects the edges that leave the subdiagram.
Subdiagram heights ``hbar`` and subdiagram measures ``pbar`` are stored
as full-length vectors with zeros outside ``W_n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Sequence

import json
from math import lcm

from .closedform import Hyper, RatExp, Seq
from .diagram import (
    Body,
    DiagramSpec,
    FamilyBody,
    Periodic,
    Stationary,
    Violation,
    body_from_json,
    load_spec,
    spec_from_json,
    tail_period,
)
from .errors import (
    EmptyComplement,
    IdentityViolation,
    IncompatibleSubMeasure,
    LevelOutOfRange,
    NotECS,
    NotVertexSub,
    SpecError,
    ValidationError,
)
from .families import Param, Tail
from .linalg import dot, matmul, matvec, vecmat
from .measure import MeasureFamily, check_compatible, is_primitive, uniform_ecs_measure
from .series import LimitClass, Verdict, anchored, classify_hyper_limit, heuristic_limit

# ----------------------------------------------------------------- supports


class Support:
    """Rule producing the vertex set ``W_n`` at each level."""

    start = 1  # first level from which the rule is regular

    def at(self, n: int, size: int) -> frozenset[int]:
        raise NotImplementedError

    def selector(self) -> tuple | None:
        """Family selector understood by ``Family.restrict``."""
        return None

    def constant_set(self, size: int) -> frozenset[int] | None:
        """``W_n`` for ``n >= start`` when every level has ``size`` vertices."""
        return None

    def to_json(self) -> Any:
        raise NotImplementedError


@dataclass(frozen=True)
class ExplicitSupport(Support):
    levels: tuple[frozenset[int], ...]

    def at(self, n, size):
        if not 1 <= n <= len(self.levels):
            raise LevelOutOfRange(f"explicit support lists {len(self.levels)} levels, level {n} requested")
        return self.levels[n - 1]

    def to_json(self):
        return {"kind": "explicit", "levels": [sorted(w) for w in self.levels]}


@dataclass(frozen=True)
class PeriodicSupport(Support):
    """Same indexing as a periodic body: prefix first, then the cycle repeats."""

    prefix: tuple[frozenset[int], ...]
    cycle: tuple[frozenset[int], ...]

    @property
    def start(self):
        return len(self.prefix) + 1

    def at(self, n, size):
        if n <= len(self.prefix):
            return self.prefix[n - 1]
        return self.cycle[(n - len(self.prefix) - 1) % len(self.cycle)]

    def constant_set(self, size):
        return self.cycle[0] if len(self.cycle) == 1 else None

    def to_json(self):
        return {"kind": "periodic", "prefix": [sorted(w) for w in self.prefix],
                "cycle": [sorted(w) for w in self.cycle]}


NAMED = ("all", "first-vertex", "all-but-first", "first", "diagonal-track")


@dataclass(frozen=True)
class NamedSupport(Support):
    """``all``, ``first-vertex``, ``all-but-first``, ``first`` (count) or ``diagonal-track`` (vertex)."""

    name: str
    arg: Any = None

    def __post_init__(self):
        if self.name not in NAMED:
            raise SpecError(f"unknown selector {self.name!r}; known: {list(NAMED)}")
        if self.name == "first":
            object.__setattr__(self, "_count", Param(self.arg))
        if self.name == "diagonal-track" and (not isinstance(self.arg, int) or self.arg < 0):
            raise SpecError("diagonal-track needs a non-negative vertex index")

    def at(self, n, size):
        if self.name == "all":
            return frozenset(range(size))
        if self.name == "first-vertex":
            return frozenset({0})
        if self.name == "all-but-first":
            return frozenset(range(1, size))
        if self.name == "first":
            return frozenset(range(self._count.int_at(n, "count")))
        return frozenset({self.arg})

    @property
    def start(self):
        return self._count.settled + 1 if self.name == "first" else 1

    def selector(self):
        if self.name == "first-vertex":
            return ("first", Param(1))
        if self.name == "all-but-first":
            return ("all-but-first",)
        if self.name == "first":
            return ("first", self._count)
        return None

    def constant_set(self, size):
        if self.name == "first":
            seq = self._count.seq
            if seq.period != 1 or seq.branches[0].asymptotic() is None:
                return None
            try:
                k = seq(1)
            except ZeroDivisionError:
                return None
            if not seq.same_as(Seq.const(k)) or k.denominator != 1:
                return None
            return frozenset(range(int(k)))
        return self.at(1, size)

    def to_json(self):
        out: dict[str, Any] = {"kind": "named", "name": self.name}
        if self.name == "first":
            out["count"] = self.arg
        if self.name == "diagonal-track":
            out["vertex"] = self.arg
        return out


@dataclass(frozen=True)
class ComplementSupport(Support):
    inner: Support

    @property
    def start(self):
        return self.inner.start

    def at(self, n, size):
        return frozenset(range(size)) - self.inner.at(n, size)

    def constant_set(self, size):
        inner = self.inner.constant_set(size)
        return None if inner is None else frozenset(range(size)) - inner

    def to_json(self):
        return {"kind": "complement", "of": self.inner.to_json()}


def _vertex_set(raw: Any, what: str) -> frozenset[int]:
    if not isinstance(raw, list) or any(isinstance(x, bool) or not isinstance(x, int) or x < 0 for x in raw):
        raise SpecError(f"{what}: expected a list of non-negative vertex indices")
    return frozenset(raw)


def support_from_json(doc: Any) -> Support:
    if isinstance(doc, str):
        return NamedSupport(doc)
    if not isinstance(doc, dict):
        raise SpecError("supports must be an object or a selector name")
    kind = doc.get("kind", "named")
    if kind == "explicit":
        levels = doc.get("levels")
        if not isinstance(levels, list) or not levels:
            raise SpecError("explicit supports need a non-empty 'levels' list")
        return ExplicitSupport(tuple(_vertex_set(w, f"levels[{i}]") for i, w in enumerate(levels)))
    if kind == "periodic":
        prefix, cycle = doc.get("prefix", []), doc.get("cycle")
        if not isinstance(prefix, list) or not isinstance(cycle, list) or not cycle:
            raise SpecError("periodic supports need a list 'prefix' and a non-empty 'cycle'")
        return PeriodicSupport(
            tuple(_vertex_set(w, f"prefix[{i}]") for i, w in enumerate(prefix)),
            tuple(_vertex_set(w, f"cycle[{i}]") for i, w in enumerate(cycle)),
        )
    if kind == "named":
        name = doc.get("name")
        if name == "first":
            return NamedSupport(name, doc.get("count"))
        if name == "diagonal-track":
            return NamedSupport(name, doc.get("vertex"))
        return NamedSupport(name)
    if kind == "complement":
        return complement_support(support_from_json(doc.get("of")))
    raise SpecError(f"unknown supports kind {kind!r}")


def complement_support(inner: Support) -> Support:
    if isinstance(inner, NamedSupport) and inner.name == "first-vertex":
        return NamedSupport("all-but-first")
    if isinstance(inner, NamedSupport) and inner.name == "all-but-first":
        return NamedSupport("first-vertex")
    if isinstance(inner, ComplementSupport):
        return inner.inner
    return ComplementSupport(inner)


# ------------------------------------------------------------ subdiagrams


class _Sub:
    kind = ""
    parent: DiagramSpec

    def __init__(self):
        self._memo: dict = {}

    def W(self, n: int) -> frozenset[int]:
        raise NotImplementedError

    def vertices(self, n: int) -> list[int]:
        return sorted(self.W(n))

    def fbar(self, n: int):
        raise NotImplementedError

    def root_bar(self) -> tuple[int, ...]:
        raise NotImplementedError

    def ftilde(self, n: int):
        key = ("Ft", n)
        if key not in self._memo:
            f, fb = self.parent.matrix(n), self.fbar(n)
            self._memo[key] = tuple(tuple(a - b for a, b in zip(r, rb)) for r, rb in zip(f, fb))
        return self._memo[key]

    def hbar(self, n: int) -> tuple[int, ...]:
        """Full-length subdiagram heights (zero outside ``W_n``)."""
        table = self._memo.setdefault("h", [self.root_bar()])
        while len(table) < n:
            table.append(matvec(self.fbar(len(table)), table[-1]))
        return table[n - 1]

    def tail(self) -> Tail | None:
        raise NotImplementedError

    def is_full(self) -> bool:
        return False

    def is_stationary(self) -> bool:
        return False


class VertexSubdiagram(_Sub):
    kind = "vertex"

    def __init__(self, parent: DiagramSpec, support: Support):
        super().__init__()
        self.parent = parent
        self.support = support

    def W(self, n):
        return self.support.at(n, self.parent.size(n))

    def fbar(self, n):
        key = ("Fb", n)
        if key not in self._memo:
            f = self.parent.matrix(n)
            rows, cols = self.W(n + 1), self.W(n)
            self._memo[key] = tuple(
                tuple(x if (v in rows and w in cols) else 0 for w, x in enumerate(r)) for v, r in enumerate(f)
            )
        return self._memo[key]

    def root_bar(self):
        w1 = self.W(1)
        return tuple(x if v in w1 else 0 for v, x in enumerate(self.parent.root))

    def block(self, n):
        rows, cols = self.vertices(n + 1), self.vertices(n)
        f = self.parent.matrix(n)
        return tuple(tuple(f[v][w] for w in cols) for v in rows)

    def is_full(self):
        return isinstance(self.support, NamedSupport) and self.support.name == "all"

    def is_stationary(self):
        return isinstance(self.parent.body, Stationary) and self.support.constant_set(self.parent.size(1)) is not None

    def tail(self) -> Tail | None:
        ptail = self.parent.tail
        if ptail is None:
            return None
        if self.is_full():
            return ptail
        sel = self.support.selector()
        start = max(ptail.start, self.support.start)
        if isinstance(self.parent.body, FamilyBody) and sel is not None:
            t = self.parent.body.family.restrict(sel)
            if t is not None:
                return Tail(max(t.start, start), t.sizes, t.row_sum, t.col_sum, t.matrix)
        return _block_tail(self)

    def to_json(self):
        return {"kind": "vertex", "supports": self.support.to_json()}


class EdgeSubdiagram(_Sub):
    kind = "edge"

    def __init__(self, parent: DiagramSpec, body: Body, root: Sequence[int] | None = None):
        super().__init__()
        self.parent = parent
        self.body = body
        self.root = tuple(root) if root is not None else None

    def W(self, n):
        return frozenset(range(self.parent.size(n)))

    def fbar(self, n):
        key = ("Fb", n)
        if key not in self._memo:
            self._memo[key] = self.body.matrix(n)
        return self._memo[key]

    def root_bar(self):
        return self.root if self.root is not None else self.parent.root

    def is_full(self):
        return self.body == self.parent.body and self.root_bar() == self.parent.root

    def is_stationary(self):
        return isinstance(self.parent.body, Stationary) and isinstance(self.body, Stationary)

    def tail(self) -> Tail | None:
        return self.body.tail()

    def to_json(self):
        out = {"kind": "edge", "matrices": self.body.to_json()}
        if self.root is not None:
            out["root"] = list(self.root)
        return out


Subdiagram = VertexSubdiagram | EdgeSubdiagram


def support_pattern(support: Support, size: int) -> tuple[int, list[frozenset[int]]] | None:
    """``(s, sets)`` with ``W_n = sets[(n - s) % len(sets)]`` for ``n >= s``."""
    if isinstance(support, PeriodicSupport):
        return support.start, list(support.cycle)
    if isinstance(support, ComplementSupport):
        inner = support_pattern(support.inner, size)
        if inner is None:
            return None
        return inner[0], [frozenset(range(size)) - w for w in inner[1]]
    w = support.constant_set(size)
    return (support.start, [w]) if w is not None else None


def _branches(sub: VertexSubdiagram):
    """Per residue class of the level: aligned tail matrix, ``W_n`` and ``W_{n+1}``."""
    ptail = sub.parent.tail
    if ptail is None or ptail.matrix is None:
        return None
    k = len(ptail.matrix)
    pattern = support_pattern(sub.support, k)
    if pattern is None:
        return None
    s, sets = pattern
    if any(not w or max(w) >= k for w in sets):
        return None
    period = lcm(tail_period(ptail), len(sets))
    mats = [[e.align(period).branches for e in row] for row in ptail.matrix]
    out = []
    for j in range(period):
        m = [[mats[v][w][j] for w in range(k)] for v in range(k)]
        out.append((m, sets[(j - s) % len(sets)], sets[(j + 1 - s) % len(sets)]))
    return max(ptail.start, s), period, k, out


def _common(values: list) -> Any:
    return values[0] if all(x.same_as(values[0]) for x in values) else None


def _block_tail(sub: VertexSubdiagram) -> Tail | None:
    info = _branches(sub)
    if info is None:
        return None
    start, period, k, branches = info
    sizes, rows, cols = [], [], []
    for m, wn, wn1 in branches:
        sizes.append(RatExp.const(len(wn)))
        rs = [sum((m[v][w] for w in wn), RatExp.const(0)) for v in sorted(wn1)]
        cs = [sum((m[v][w] for v in wn1), RatExp.const(0)) for w in sorted(wn)]
        rows.append(_common(rs))
        cols.append(_common(cs))
    matrix = None
    if all(len(wn) == len(branches[0][1]) and wn == wn1 for _, wn, wn1 in branches):
        idx = sorted(branches[0][1])
        matrix = tuple(tuple(Seq([b[0][v][w] for b in branches]) for w in idx) for v in idx)
    return Tail(
        start,
        Seq(sizes),
        Seq(rows) if all(r is not None for r in rows) else None,
        Seq(cols) if all(c is not None for c in cols) else None,
        matrix,
    )


def offblock_seq(sub: Subdiagram) -> tuple[Seq, int] | None:
    """``min_{v in W_{n+1}} max_{w notin W_n} f_{v,w}`` in closed form, with its start level."""
    if sub.kind != "vertex":
        return None
    body = sub.parent.body
    sel = sub.support.selector()
    if isinstance(body, FamilyBody) and sel is not None:
        seq = body.family.offblock_max_entry(sel)
        if seq is not None:
            return seq, max(sub.parent.tail.start, sub.support.start)
    info = _branches(sub)
    if info is None:
        return None
    start, period, k, branches = info
    out = []
    for m, wn, wn1 in branches:
        outside = [w for w in range(k) if w not in wn]
        if not outside:
            out.append(RatExp.const(0))
            continue
        best_rows = []
        for v in sorted(wn1):
            top = m[v][outside[0]]
            for w in outside[1:]:
                if (m[v][w] - top).eventual_sign() > 0:
                    top = m[v][w]
            best_rows.append(top)
        low = best_rows[0]
        for x in best_rows[1:]:
            if (x - low).eventual_sign() < 0:
                low = x
        out.append(low)
    return Seq(out), start


def vertex_sub(parent: DiagramSpec, supports: Any) -> VertexSubdiagram:
    """``supports`` is a selector name, a JSON object or a list of per-level vertex lists."""
    if isinstance(supports, Support):
        return VertexSubdiagram(parent, supports)
    if isinstance(supports, (list, tuple)) and not isinstance(supports, str):
        return VertexSubdiagram(parent, ExplicitSupport(tuple(frozenset(w) for w in supports)))
    return VertexSubdiagram(parent, support_from_json(supports))


def edge_sub(parent: DiagramSpec, matrices: Any, root: Sequence[int] | None = None) -> EdgeSubdiagram:
    """``matrices`` is a body JSON object, a single matrix (stationary) or a list of matrices."""
    if isinstance(matrices, dict):
        body = body_from_json(matrices)
    elif matrices and isinstance(matrices[0][0], (list, tuple)):
        body = body_from_json({"kind": "explicit", "matrices": matrices})
    else:
        body = body_from_json({"kind": "stationary", "matrix": matrices})
    return EdgeSubdiagram(parent, body, root)


def sub_from_json(doc: Any, parent: DiagramSpec | None = None, base_dir: str | Path | None = None) -> Subdiagram:
    """``{"kind": "vertex", "supports": ...}`` or ``{"kind": "edge", "matrices": ...}``.

    The parent is ``doc["parent"]`` (a path or an inline spec) unless given.
    """
    if not isinstance(doc, dict) or doc.get("kind") not in ("vertex", "edge"):
        raise SpecError("subdiagram must be an object with kind 'vertex' or 'edge'")
    if parent is None:
        raw = doc.get("parent")
        if isinstance(raw, str):
            path = Path(raw)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            parent = load_spec(path)
        elif isinstance(raw, dict):
            parent = spec_from_json(raw)
        else:
            raise SpecError("subdiagram needs a 'parent' path or inline spec")
    if doc["kind"] == "vertex":
        if "supports" not in doc:
            raise SpecError("vertex subdiagram needs 'supports'")
        return VertexSubdiagram(parent, support_from_json(doc["supports"]))
    if "matrices" not in doc:
        raise SpecError("edge subdiagram needs 'matrices'")
    root = doc.get("root")
    if root is not None and (not isinstance(root, list) or any(not isinstance(x, int) or x < 0 for x in root)):
        raise SpecError("edge subdiagram 'root' must be a list of non-negative integers")
    return EdgeSubdiagram(parent, body_from_json(doc["matrices"]), root)


def load_sub(path: str | Path, parent: DiagramSpec | None = None) -> Subdiagram:
    with open(path, encoding="utf-8") as fh:
        return sub_from_json(json.load(fh), parent, Path(path).parent)


# -------------------------------------------------------------- validation


@dataclass(frozen=True)
class SubValidationReport:
    depth: int
    violations: tuple[Violation, ...]
    proper_levels: tuple[int, ...] = ()  # edge subdiagrams: levels with Fbar_n != F_n

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"ok": self.ok, "depth": self.depth, "violations": [v.to_json() for v in self.violations],
                "proper_levels": list(self.proper_levels)}


def validate_sub(sub: Subdiagram, depth: int) -> SubValidationReport:
    """Check levels ``1..depth`` and the blocks ``Fbar_1..Fbar_{depth-1}``."""
    found: list[Violation] = []
    proper: list[int] = []
    try:
        if sub.kind == "vertex":
            for n in range(1, depth + 1):
                w, size = sub.W(n), sub.parent.size(n)
                if not w:
                    found.append(Violation("EmptySupport", n))
                for v in sorted(x for x in w if x >= size):
                    found.append(Violation("VertexOutOfRange", n, v, detail=f"level has {size} vertices"))
            if found:
                return SubValidationReport(depth, tuple(found))
            for n in range(1, depth):
                fb = sub.fbar(n)
                rows, cols = sub.W(n + 1), sub.W(n)
                for v in sorted(rows):
                    if not any(fb[v]):
                        found.append(Violation("DisconnectedBlock", n, v, detail="no edge from W_n"))
                for w in sorted(cols):
                    if not any(r[w] for r in fb):
                        found.append(Violation("DisconnectedBlock", n, w, detail="no edge into W_{n+1}"))
        else:
            rb, root = sub.root_bar(), sub.parent.root
            if len(rb) != len(root):
                found.append(Violation("DimensionMismatch", 0, detail="root length differs from the parent"))
            else:
                for v, (x, y) in enumerate(zip(rb, root)):
                    if x > y:
                        found.append(Violation("NotDominated", 0, v))
                    elif y > 0 and x == 0:
                        found.append(Violation("SupportViolation", 0, v))
            for n in range(1, depth):
                f, fb = sub.parent.matrix(n), sub.fbar(n)
                if len(f) != len(fb) or len(f[0]) != len(fb[0]):
                    found.append(Violation("DimensionMismatch", n))
                    break
                for v, (r, rb_) in enumerate(zip(f, fb)):
                    for w, (x, y) in enumerate(zip(r, rb_)):
                        if y > x:
                            found.append(Violation("NotDominated", n, v, w))
                        elif x > 0 and y == 0:
                            found.append(Violation("SupportViolation", n, v, w))
                if f != fb:
                    proper.append(n)
    except (LevelOutOfRange, SpecError) as exc:
        found.append(Violation(type(exc).__name__, 0, detail=str(exc)))
    return SubValidationReport(depth, tuple(found), tuple(proper))


def require_valid(sub: Subdiagram, depth: int) -> None:
    report = validate_sub(sub, depth)
    if not report.ok:
        first = report.violations[0]
        raise ValidationError(f"{first.kind} at level {first.level}", report.violations)


def sub_heights(sub: Subdiagram, n: int) -> tuple[int, ...]:
    """``hbar^(n)`` over the sorted ``W_n`` (vertex) or over ``V_n`` (edge)."""
    h = sub.hbar(n)
    return tuple(h[w] for w in sub.vertices(n))


def complement(sub: Subdiagram, depth: int) -> VertexSubdiagram:
    """Subdiagram on ``W'_n = V_n - W_n``; raises when some ``W'_n`` is empty."""
    if sub.kind != "vertex":
        raise NotVertexSub("complement needs a vertex subdiagram")
    out = VertexSubdiagram(sub.parent, complement_support(sub.support))
    for n in range(1, depth + 1):
        if not out.W(n):
            raise EmptyComplement(f"W_{n} is the whole level")
    return out


# ------------------------------------------------------ subdiagram measures


def check_sub_measure(sub: Subdiagram, pbar: MeasureFamily, mass: Fraction | None = Fraction(1)) -> None:
    """``pbar^(n) = Fbar_n^T pbar^(n+1)``, zero outside ``W_n``, subdiagram mass one."""
    for n in range(1, pbar.depth + 1):
        p = pbar.at(n)
        if len(p) != sub.parent.size(n):
            raise IncompatibleSubMeasure(f"level {n}: vector has length {len(p)}, level has {sub.parent.size(n)}")
        if any(x < 0 for x in p):
            raise IncompatibleSubMeasure(f"level {n}: negative cylinder value")
        w = sub.W(n)
        if any(x for v, x in enumerate(p) if v not in w):
            raise IncompatibleSubMeasure(f"level {n}: mass outside W_{n}")
    for n in range(1, pbar.depth):
        if tuple(vecmat(pbar.at(n + 1), sub.fbar(n))) != tuple(pbar.at(n)):
            raise IncompatibleSubMeasure(f"pbar^({n}) != Fbar_{n}^T pbar^({n + 1})")
    if mass is not None and dot(sub.hbar(1), pbar.at(1)) != mass:
        raise IncompatibleSubMeasure(f"subdiagram mass is {dot(sub.hbar(1), pbar.at(1))}, expected {mass}")


def sub_measure_from_top(sub: Subdiagram, top: Sequence[Fraction], depth: int) -> MeasureFamily:
    vecs = [tuple(Fraction(x) for x in top)]
    for n in range(depth - 1, 0, -1):
        vecs.append(tuple(Fraction(x) for x in vecmat(vecs[-1], sub.fbar(n))))
    return MeasureFamily(tuple(reversed(vecs)))


def sub_column_sums(sub: Subdiagram, depth: int) -> list[int] | None:
    """``cbar_0 = sum_{W_1} rootbar`` followed by the common block column sums."""
    out = [sum(sub.root_bar())]
    for n in range(1, depth):
        fb = sub.fbar(n)
        vals = {sum(r[w] for r in fb) for w in sub.W(n)}
        if len(vals) != 1:
            return None
        out.append(vals.pop())
    return out


def canonical_sub_measure(sub: Subdiagram, depth: int) -> MeasureFamily:
    """``pbar^(n)_w = 1/(cbar_0 ... cbar_{n-1})`` on ``W_n``; needs equal block column sums."""
    c = sub_column_sums(sub, depth)
    if c is None:
        raise NotECS("the subdiagram blocks do not have equal column sums")
    vecs, denom = [], 1
    for n in range(1, depth + 1):
        denom *= c[n - 1]
        w = sub.W(n)
        vecs.append(tuple(Fraction(1, denom) if v in w else Fraction(0) for v in range(sub.parent.size(n))))
    return MeasureFamily(tuple(vecs))


# ------------------------------------------------------------ closed forms


def _level_constant(values: Iterable) -> Fraction | None:
    vals = set(values)
    return Fraction(vals.pop()) if len(vals) == 1 else None


def parent_height_form(spec: DiagramSpec, depth: int) -> Hyper | None:
    """``h^(n)`` when it is constant across each level and the tail has equal row sums."""
    tail = spec.tail
    if tail is None or tail.row_sum is None:
        return None
    return anchored(tail.row_sum, tail.start, lambda n: _level_constant(spec.heights(n)), depth)


def parent_canonical_form(spec: DiagramSpec, depth: int) -> Hyper | None:
    """The canonical cylinder value ``1/(c_0 ... c_{n-1})`` as an anchored product."""
    tail = spec.tail
    if tail is None or tail.col_sum is None:
        return None
    try:
        mu = uniform_ecs_measure(spec, depth)
    except NotECS:
        return None
    return anchored(1 / tail.col_sum, tail.start, lambda n: _level_constant(mu.at(n)), depth)


def sub_height_form(sub: Subdiagram, depth: int) -> Hyper | None:
    tail = sub.tail()
    if tail is None or tail.row_sum is None:
        return None
    return anchored(tail.row_sum, tail.start,
                    lambda n: _level_constant(sub.hbar(n)[w] for w in sub.W(n)), depth)


def sub_canonical_form(sub: Subdiagram, depth: int) -> Hyper | None:
    tail = sub.tail()
    if tail is None or tail.col_sum is None:
        return None
    try:
        pbar = canonical_sub_measure(sub, depth)
    except NotECS:
        return None
    return anchored(1 / tail.col_sum, tail.start,
                    lambda n: _level_constant(pbar.at(n)[w] for w in sub.W(n)), depth)


def sub_sizes(sub: Subdiagram) -> Seq | None:
    if sub.kind == "edge":
        tail = sub.parent.tail
        return tail.sizes if tail is not None else None
    tail = sub.tail()
    return tail.sizes if tail is not None else None


def height_total_form(sub: Subdiagram, depth: int) -> Hyper | None:
    """``sum_{w in W_n} h^(n)_w``: ``|W_n| h`` for level-constant heights, else the family hook."""
    actual = lambda n: Fraction(sum(sub.parent.heights(n)[w] for w in sub.W(n)))
    h = parent_height_form(sub.parent, depth)
    sizes = sub_sizes(sub)
    if h is not None and sizes is not None:
        form = h * sizes
        return anchored(form.factor, form.start, actual, depth)
    body = sub.parent.body
    if sub.kind == "vertex" and isinstance(body, FamilyBody):
        sel = sub.support.selector()
        factor = body.family.height_total_factor(sel) if sel is not None else None
        tail = sub.parent.tail
        if factor is not None and tail is not None:
            return anchored(factor, max(tail.start, sub.support.start), actual, depth)
    return None


def reverify(form: Hyper | None, values: Sequence[Fraction], depth: int, offset: int = 1) -> Hyper | None:
    """Re-anchor a product against ``values[n - offset]`` for ``n`` up to ``depth``."""
    if form is None:
        return None
    return anchored(form.factor, form.start, lambda n: values[n - offset], depth)


# --------------------------------------------------------- subspace measure


@dataclass(frozen=True)
class SubspaceMeasureReport:
    depth: int
    mu_Y: tuple[Fraction, ...]  # mu(Y^(n)), n = 1..depth
    terms: tuple[Fraction, ...]  # S-terms, n = 1..depth-1
    partial_sums: tuple[Fraction, ...]
    limit_class: LimitClass
    verdict: Verdict
    limit: Fraction | None
    canonical: bool
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "mu_Y": list(self.mu_Y),
            "terms": list(self.terms),
            "partial_sums": list(self.partial_sums),
            "limit_class": self.limit_class.to_json(),
            "verdict": self.verdict.to_json(),
            "limit": self.limit,
            "measure": "canonical" if self.canonical else "given",
            "notes": list(self.notes),
        }


def s_terms(sub: Subdiagram, mu: MeasureFamily, depth: int) -> list[Fraction]:
    """``sum_v sum_w ftilde_{v,w} p^(n+1)_v hbar^(n)_w`` for ``n = 1..depth-1``."""
    out = []
    for n in range(1, depth):
        weighted = matvec(sub.ftilde(n), sub.hbar(n))
        out.append(Fraction(dot(mu.at(n + 1), weighted)))
    return out


def subspace_measure(sub: Subdiagram, mu: MeasureFamily | None, depth: int) -> SubspaceMeasureReport:
    """``mu(Y^(n)) = sum_w hbar_w p_w`` and the series whose sum is ``mu(Y^(1)) - mu(X_sub)``.

    ``mu=None`` selects the canonical measure of an ECS parent; only then can
    the limit be classified exactly.
    """
    notes: list[str] = []
    canonical = mu is None
    if canonical:
        mu = uniform_ecs_measure(sub.parent, depth)
    elif mu.depth < depth:
        raise IncompatibleSubMeasure(f"measure known to level {mu.depth}, depth {depth} requested")
    check_compatible(sub.parent, mu, mass=None)
    ys = [Fraction(dot(sub.hbar(n), mu.at(n))) for n in range(1, depth + 1)]
    terms = s_terms(sub, mu, depth)
    for n, t in enumerate(terms, start=1):
        if ys[n] != ys[n - 1] - t:
            raise IdentityViolation(f"mu(Y^({n + 1})) != mu(Y^({n})) - term_{n}")
    partial, acc = [], Fraction(0)
    for t in terms:
        acc += t
        partial.append(acc)

    limit: Fraction | None = None
    if sub.is_full():
        cls = LimitClass("exact", "positive", "full-subdiagram")
        limit = ys[0]
    else:
        cls = None
        if canonical:
            h, p, sizes = sub_height_form(sub, depth), parent_canonical_form(sub.parent, depth), sub_sizes(sub)
            form = reverify(h * p * sizes, ys, depth) if h and p and sizes else None
            if form is not None:
                cls = classify_hyper_limit(form)
            elif h and p and sizes:
                notes.append("closed form rejected by the exact check")
        if cls is None or not cls.exact:
            cls = heuristic_limit(ys)
        if cls.value == "zero" and cls.exact:
            limit = Fraction(0)
    if cls.exact:
        verdict = Verdict("exact", cls.value, upper=ys[-1])
    else:
        verdict = Verdict("bracketed", cls.value, lower=Fraction(0), upper=ys[-1])
    return SubspaceMeasureReport(depth, tuple(ys), tuple(terms), tuple(partial), cls, verdict, limit,
                                 canonical, tuple(notes))


# ---------------------------------------------------------------- thinness


def simplicity_proxy(spec: DiagramSpec, depth: int) -> dict:
    """For each start level ``n <= depth/2`` look for a strictly positive product before ``depth``."""
    for n in range(1, max(2, depth // 2 + 1)):
        prod = spec.matrix(n)
        ok = all(all(r) for r in prod)
        k = n + 1
        while not ok and k < depth:
            prod = matmul(spec.matrix(k), prod)
            prod = tuple(tuple(1 if x else 0 for x in r) for r in prod)
            ok = all(all(r) for r in prod)
            k += 1
        if not ok:
            return {"positive_products": False, "first_failure": n, "depth": depth}
    return {"positive_products": True, "first_failure": None, "depth": depth}


@dataclass(frozen=True)
class ThinnessReport:
    depth: int
    max_ratio: tuple[Fraction, ...]
    min_ratio: tuple[Fraction, ...]
    limit_class: LimitClass
    verdict: Verdict
    assumptions: dict
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "max_ratio": list(self.max_ratio),
            "min_ratio": list(self.min_ratio),
            "limit_class": self.limit_class.to_json(),
            "verdict": self.verdict.to_json(),
            "assumptions": self.assumptions,
            "notes": list(self.notes),
        }


def stationary_thin(sub: Subdiagram) -> bool:
    """A proper stationary subdiagram of a primitive stationary diagram is thin."""
    if not sub.is_stationary() or sub.is_full():
        return False
    f = sub.parent.body.matrix_
    if len(f) != len(f[0]) or not is_primitive(f):
        return False
    if sub.kind == "vertex":
        w = sub.support.constant_set(len(f))
        return w is not None and len(w) < len(f)
    return sub.body.matrix_ != f


def thinness(sub: Subdiagram, depth: int) -> ThinnessReport:
    """Max and min of ``hbar_w / h_w`` over ``W_n`` and whether the max tends to zero."""
    hi, lo = [], []
    for n in range(1, depth + 1):
        h, hb = sub.parent.heights(n), sub.hbar(n)
        ratios = [Fraction(hb[w], h[w]) for w in sub.W(n)]
        hi.append(max(ratios))
        lo.append(min(ratios))
    notes: list[str] = []
    assumptions = {
        "simple": simplicity_proxy(sub.parent, depth),
        "ergodic_measure": "assumed, not checked",
    }
    cls = None
    if sub.is_full():
        cls = LimitClass("exact", "positive", "full-subdiagram")
    else:
        hbar, total, sizes = sub_height_form(sub, depth), height_total_form(sub, depth), sub_sizes(sub)
        if hbar and total and sizes:
            form = reverify(hbar * sizes / total, hi, depth)
            if form is not None:
                cls = classify_hyper_limit(form)
            else:
                notes.append("closed form does not match the max ratio")
        if stationary_thin(sub):
            if cls is not None and cls.exact and cls.value != "zero":
                notes.append("closed form disagrees with the stationary-subdiagram rule")
            elif cls is None or not cls.exact:
                cls = LimitClass("exact", "zero", "stationary-subdiagram")
        if cls is None or not cls.exact:
            cls = heuristic_limit(hi)
    value = {"zero": "thin", "positive": "not-thin"}.get(cls.value)
    verdict = Verdict(cls.kind if value else "inconclusive", value)
    return ThinnessReport(depth, tuple(hi), tuple(lo), cls, verdict, assumptions, tuple(notes))


def lemma_level(sub: Subdiagram, m: int, K: int, max_level: int) -> int | None:
    """Least ``N`` in ``(m, max_level]`` with ``|E(w,v)| >= K hbar^(N)_v`` for ``w in W_m``, ``v in W_N``."""
    prod = None
    for n in range(m + 1, max_level + 1):
        f = sub.parent.matrix(n - 1)
        prod = f if prod is None else matmul(f, prod)
        hb = sub.hbar(n)
        if all(prod[v][w] >= K * hb[v] for v in sub.W(n) for w in sub.W(m)):
            return n
    return None
