"""Brute-force ground truth for small diagrams.

Everything here works path by path: finite paths are listed explicitly
and masses are summed cylinder by cylinder, without the height or
transpose recursions used by the main modules.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

from .diagram import DiagramSpec, explicit
from .errors import BudgetExceeded, DepthMismatch
from .measure import MeasureFamily
from .subdiagram import EdgeSubdiagram, ExplicitSupport, Subdiagram, VertexSubdiagram

Step = tuple[int, int | None, int, int]  # (level, source, target, edge index); the root step has source None
Path = tuple[Step, ...]

DEFAULT_BUDGET = 200_000


@dataclass(frozen=True)
class PathTable:
    spec: DiagramSpec
    depth: int
    paths: tuple[tuple[tuple[Path, ...], ...], ...]  # paths[n-1][v]

    def at(self, n: int, v: int) -> tuple[Path, ...]:
        return self.paths[n - 1][v]

    def counts(self, n: int) -> tuple[int, ...]:
        return tuple(len(p) for p in self.paths[n - 1])

    def to_json(self) -> dict:
        return {"depth": self.depth, "counts": [list(self.counts(n)) for n in range(1, self.depth + 1)]}


def estimate_paths(spec: DiagramSpec, depth: int) -> int:
    return sum(sum(spec.heights(n)) for n in range(1, depth + 1))


def enumerate_paths(spec: DiagramSpec, depth: int, budget: int = DEFAULT_BUDGET) -> PathTable:
    """Every finite path from the root to levels ``1..depth``, in lexicographic order."""
    estimated = estimate_paths(spec, depth)
    if estimated > budget:
        raise BudgetExceeded(estimated, budget)
    level = [tuple(((0, None, v, e),) for e in range(k)) for v, k in enumerate(spec.root)]
    table = [tuple(level)]
    for n in range(1, depth):
        f = spec.matrix(n)
        nxt = []
        for v, row in enumerate(f):
            out = []
            for w, k in enumerate(row):
                for path in table[-1][w]:
                    for e in range(k):
                        out.append(path + ((n, w, v, e),))
            nxt.append(tuple(out))
        table.append(tuple(nxt))
    return PathTable(spec, depth, tuple(table))


# ------------------------------------------------------------ filters


def in_sub(sub: Subdiagram) -> Callable[[Path], bool]:
    """Every edge of the path belongs to the subdiagram.

    An edge subdiagram keeps, between ``w`` and ``v``, the edges with the
    ``fbar_{v,w}`` smallest indices.
    """
    def keep(path: Path) -> bool:
        for level, w, v, e in path:
            if level == 0:
                if e >= sub.root_bar()[v]:
                    return False
            elif e >= sub.fbar(level)[v][w]:
                return False
        return True
    return keep


def range_in(vertices: Callable[[int], Any]) -> Callable[[Path], bool]:
    """The path ends in ``vertices(n)`` where ``n`` is its length."""
    return lambda path: path[-1][2] in vertices(len(path))


def brute_measure_mass(table: PathTable, mu: MeasureFamily, n: int,
                       keep: Callable[[Path], bool] | None = None) -> Fraction:
    """Sum of ``p^(n)`` over the kept level-``n`` cylinders."""
    if n > table.depth or n > mu.depth or n < 1:
        raise DepthMismatch(f"level {n} outside table depth {table.depth} / measure depth {mu.depth}")
    p = mu.at(n)
    total = Fraction(0)
    for v, paths in enumerate(table.paths[n - 1]):
        for path in paths:
            if keep is None or keep(path):
                total += p[v]
    return total


# ------------------------------------------------------------- counting


def counts_between(spec: DiagramSpec, m: int, N: int) -> tuple[tuple[int, ...], ...]:
    """``|E(w, v)|`` for ``w in V_m`` (rows) and ``v in V_N`` (columns), by walking edge by edge."""
    if not m < N:
        raise ValueError("need m < N")
    out = []
    for w in range(spec.size(m)):
        reach = {w: 1}
        for k in range(m, N):
            f = spec.matrix(k)
            nxt: dict[int, int] = {}
            for v, row in enumerate(f):
                for u, c in reach.items():
                    if row[u]:
                        nxt[v] = nxt.get(v, 0) + c * row[u]
            reach = nxt
        out.append(tuple(reach.get(v, 0) for v in range(spec.size(N))))
    return tuple(out)


def counts_by_enumeration(table: PathTable, m: int, N: int) -> tuple[tuple[int, ...], ...]:
    """The same counts read off enumerated root paths: distinct segments from level ``m`` to ``N``."""
    segs: dict[tuple[int, int], set] = {}
    for v, paths in enumerate(table.paths[N - 1]):
        for path in paths:
            w = path[m - 1][2]
            segs.setdefault((w, v), set()).add(path[m:])
    return tuple(
        tuple(len(segs.get((w, v), ())) for v in range(table.spec.size(N)))
        for w in range(table.spec.size(m))
    )


# ------------------------------------------------------ random objects


def _transpose_apply(vec, f):
    out = [Fraction(0)] * len(f[0])
    for v, row in enumerate(f):
        for w, x in enumerate(row):
            out[w] += x * vec[v]
    return tuple(out)


def random_measure(spec: DiagramSpec, depth: int, seed: int, sub: Subdiagram | None = None,
                   bound: int = 9) -> MeasureFamily:
    """Random point of the level-``depth`` simplex pushed down to level 1.

    With ``sub`` the vector lives on ``W_depth`` and is pushed down
    through the subdiagram matrices, giving a subdiagram measure of mass one.
    """
    rng = random.Random(seed)
    size = spec.size(depth)
    allowed = sorted(sub.W(depth)) if sub is not None else list(range(size))
    x = [0] * size
    for v in allowed:
        x[v] = rng.randint(0, bound)
    if not any(x):
        x[rng.choice(allowed)] = 1
    mats = (lambda n: sub.fbar(n)) if sub is not None else spec.matrix
    vecs = [tuple(Fraction(t) for t in x)]
    for n in range(depth - 1, 0, -1):
        vecs.append(_transpose_apply(vecs[-1], mats(n)))
    vecs.reverse()
    first = sub.root_bar() if sub is not None else spec.root
    mass = sum(a * b for a, b in zip(first, vecs[0]))
    return MeasureFamily(tuple(tuple(t / mass for t in vec) for vec in vecs))


def random_spec(seed: int, levels: int = 6, max_vertices: int = 4, max_entry: int = 3) -> DiagramSpec:
    """Explicit diagram with ``levels`` vertex levels and no zero rows or columns."""
    rng = random.Random(seed)
    sizes = [rng.randint(1, max_vertices) for _ in range(levels)]
    root = tuple(rng.randint(1, max_entry) for _ in range(sizes[0]))
    mats = []
    for n in range(levels - 1):
        rows, cols = sizes[n + 1], sizes[n]
        f = [[rng.choice([0, 0] + list(range(1, max_entry + 1))) for _ in range(cols)] for _ in range(rows)]
        for v in range(rows):
            if not any(f[v]):
                f[v][rng.randrange(cols)] = rng.randint(1, max_entry)
        for w in range(cols):
            if not any(f[v][w] for v in range(rows)):
                f[rng.randrange(rows)][w] = rng.randint(1, max_entry)
        mats.append(f)
    return explicit(mats, root)


def random_vertex_sub(spec: DiagramSpec, depth: int, seed: int) -> VertexSubdiagram:
    """Random vertex subdiagram whose blocks have no zero rows or columns."""
    rng = random.Random(seed)
    first = list(range(spec.size(1)))
    w = set(rng.sample(first, rng.randint(1, len(first))))
    levels = [frozenset(w)]
    for n in range(1, depth):
        f = spec.matrix(n)
        reachable = [v for v in range(len(f)) if any(f[v][u] for u in w)]
        nxt = set(rng.sample(reachable, rng.randint(1, len(reachable))))
        for u in w:
            if not any(f[v][u] for v in nxt):
                nxt.add(rng.choice([v for v in range(len(f)) if f[v][u]]))
        w = nxt
        levels.append(frozenset(w))
    return VertexSubdiagram(spec, ExplicitSupport(tuple(levels)))


def random_edge_sub(spec: DiagramSpec, depth: int, seed: int) -> EdgeSubdiagram:
    """Random dominated matrices that keep at least one edge wherever the parent has one."""
    from .diagram import Explicit

    rng = random.Random(seed)
    mats = []
    for n in range(1, depth):
        f = spec.matrix(n)
        mats.append(tuple(tuple(rng.randint(1, x) if x else 0 for x in row) for row in f))
    root = tuple(rng.randint(1, x) for x in spec.root)
    return EdgeSubdiagram(spec, Explicit(tuple(mats)), root)
