"""Extending a subdiagram measure by tail equivalence: mass trajectory and criteria.

For a finite measure ``pbar`` on the subdiagram, the extension has
level masses ``m_n = sum_{w in W_n} h^(n)_w pbar^(n)_w`` (all of ``V_n``
for edge subdiagrams).  They never decrease, and

    m_{n+1} - m_n = sum_v sum_w ftilde^(n)_{v,w} h^(n)_w pbar^(n+1)_v

exactly.  The extension is finite iff ``m_n`` stays bounded.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .closedform import Hyper, Seq
from .diagram import DiagramSpec, ers_check, root_constant
from .errors import IdentityViolation, NotECS, NotEdgeSub, NotERS, NotRank2, NotVertexSub, SpecError
from .linalg import dot, matvec, vecmat
from .measure import MeasureFamily
from .series import (
    Classification,
    Verdict,
    classify_hyper_limit,
    classify_hyper_sum,
    classify_seq_sum,
    combine,
    heuristic_sum,
)
from .subdiagram import (
    PeriodicSupport,
    Subdiagram,
    VertexSubdiagram,
    canonical_sub_measure,
    check_sub_measure,
    height_total_form,
    offblock_seq,
    parent_height_form,
    reverify,
    stationary_thin,
    sub_canonical_form,
    sub_column_sums,
    sub_height_form,
    sub_sizes,
    thinness,
)


@dataclass(frozen=True)
class CriterionRow:
    name: str
    role: str  # equivalent | necessary | sufficient
    terms: tuple[Fraction, ...]
    partial_sum: Fraction
    classification: Classification
    closed_form: list[str] | None = None

    def to_json(self) -> dict:
        return {
            "criterion": self.name,
            "role": self.role,
            "terms": list(self.terms),
            "partial_sum": self.partial_sum,
            "class": self.classification.to_json(),
            "closed_form": self.closed_form,
        }

    def csv_rows(self) -> list[tuple[int, Fraction, Fraction]]:
        out, acc = [], Fraction(0)
        for n, t in enumerate(self.terms, start=1):
            acc += t
            out.append((n, t, acc))
        return out


@dataclass(frozen=True)
class CriteriaTable:
    rows: tuple[CriterionRow, ...]
    verdict: Verdict
    notes: tuple[str, ...] = ()
    cross_check: "CriteriaTable | None" = None

    def row(self, name: str) -> CriterionRow:
        return next(r for r in self.rows if r.name == name)

    def to_json(self) -> dict:
        out = {
            "rows": [r.to_json() for r in self.rows],
            "verdict": self.verdict.to_json(),
            "notes": list(self.notes),
        }
        if self.cross_check is not None:
            out["cross_check"] = self.cross_check.to_json()
        return out


# ------------------------------------------------------------ verdicts


def compose_verdict(rows: Sequence[CriterionRow]) -> tuple[Verdict, list[str]]:
    """Combine criterion rows into one finiteness verdict.

    Only these implications are used::

        role         class                  conclusion
        equivalent   convergent             finite
        equivalent   divergent              infinite
        necessary    divergent              infinite
        necessary    convergent             (nothing)
        sufficient   convergent             finite
        sufficient   divergent              (nothing)

    Exact rows are consulted first; an exact equivalent row decides on its
    own.  Exact conclusions that contradict each other yield an
    inconclusive verdict with a note.  Without any exact conclusion the
    same table is applied to heuristic rows and the verdict is heuristic.
    """
    notes: list[str] = []

    def conclusions(kind: str) -> dict[str, list[str]]:
        found: dict[str, list[str]] = {"finite": [], "infinite": []}
        for r in rows:
            c = r.classification
            if c.kind != kind or c.convergent is None:
                continue
            if r.role == "equivalent":
                found["finite" if c.convergent else "infinite"].append(r.name)
            elif r.role == "necessary" and not c.convergent:
                found["infinite"].append(r.name)
            elif r.role == "sufficient" and c.convergent:
                found["finite"].append(r.name)
        return found

    for kind in ("exact", "heuristic"):
        found = conclusions(kind)
        if found["finite"] and found["infinite"]:
            notes.append(f"{kind} criteria contradict each other: finite from {found['finite']}, "
                         f"infinite from {found['infinite']}")
            if kind == "exact":
                return Verdict("inconclusive", notes=tuple(notes)), notes
            continue
        if found["finite"]:
            return Verdict(kind, "finite"), notes
        if found["infinite"]:
            return Verdict(kind, "infinite"), notes
    return Verdict("inconclusive"), notes


# -------------------------------------------------------------- rows


def _partial(terms: Sequence[Fraction]) -> Fraction:
    return sum(terms, Fraction(0))


def seq_row(name: str, role: str, terms: Sequence[Fraction], closed: tuple[Seq, int] | None,
            notes: list[str]) -> CriterionRow:
    """A row whose terms may have a closed form ``Seq`` valid from some level."""
    exact, text = None, None
    if closed is not None:
        seq, start = closed
        if start <= len(terms):
            if all(seq(n) == terms[n - 1] for n in range(start, len(terms) + 1)):
                exact, text = classify_seq_sum(seq), seq.describe()
            else:
                notes.append(f"{name}: closed form rejected by the exact check")
    cls, extra = combine(exact, heuristic_sum(list(terms)))
    notes += [f"{name}: {x}" for x in extra]
    return CriterionRow(name, role, tuple(terms), _partial(terms), cls, text)


def hyper_row(name: str, role: str, terms: Sequence[Fraction], closed: Hyper | None,
              notes: list[str], zero: bool = False) -> CriterionRow:
    """A row whose terms are an anchored product (``zero``: terms vanish from its start)."""
    exact, text = None, None
    n_terms = len(terms)
    if zero and closed is not None:
        start = closed.start
        if start <= n_terms and all(t == 0 for t in terms[start - 1:]):
            exact = Classification("exact", True, "eventually-zero")
    elif closed is not None:
        form = reverify(closed, terms, n_terms)
        if form is not None:
            exact = classify_hyper_sum(form)
            text = form.factor.describe()
        else:
            notes.append(f"{name}: closed form rejected by the exact check")
    cls, extra = combine(exact, heuristic_sum(list(terms)))
    notes += [f"{name}: {x}" for x in extra]
    return CriterionRow(name, role, tuple(terms), _partial(terms), cls, text)


def mass_row(name: str, terms: Sequence[Fraction], masses: Sequence[Fraction], closed: Hyper | None,
             notes: list[str]) -> CriterionRow:
    """Equivalent row: the increments converge iff the masses ``m_n`` stay bounded."""
    exact, text = None, None
    form = reverify(closed, masses, len(masses))
    if form is not None:
        lim = classify_hyper_limit(form)
        if lim.exact and lim.value in ("positive", "infinite"):
            exact = Classification("exact", lim.value == "positive", "bounded-mass")
            text = form.factor.describe()
    elif closed is not None:
        notes.append(f"{name}: closed form for the masses rejected by the exact check")
    cls, extra = combine(exact, heuristic_sum(list(terms)))
    notes += [f"{name}: {x}" for x in extra]
    return CriterionRow(name, "equivalent", tuple(terms), _partial(terms), cls, text)


# ------------------------------------------------------------ trajectory


@dataclass(frozen=True)
class ExtensionReport:
    depth: int
    masses: tuple[Fraction, ...]  # m_n, n = 1..depth
    increments: tuple[Fraction, ...]  # n = 1..depth-1
    criteria: CriteriaTable | None
    canonical: bool

    @property
    def verdict(self) -> Verdict:
        return self.criteria.verdict if self.criteria else Verdict("inconclusive")

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "masses": list(self.masses),
            "increments": list(self.increments),
            "measure": "canonical" if self.canonical else "given",
            "criteria": self.criteria.to_json() if self.criteria else None,
            "verdict": self.verdict.to_json(),
        }


def _resolve(sub: Subdiagram, pbar: MeasureFamily | None, depth: int) -> tuple[MeasureFamily, bool]:
    if pbar is None:
        pbar = canonical_sub_measure(sub, depth)
        return pbar, True
    if pbar.depth < depth:
        raise SpecError(f"pbar known to level {pbar.depth}, depth {depth} requested")
    pbar = MeasureFamily(pbar.vectors[:depth])
    check_sub_measure(sub, pbar)
    return pbar, False


def _masses(sub: Subdiagram, pbar: MeasureFamily, depth: int):
    masses = [Fraction(dot(sub.parent.heights(n), pbar.at(n))) for n in range(1, depth + 1)]
    incs = []
    for n in range(1, depth):
        weighted = matvec(sub.ftilde(n), sub.parent.heights(n))
        incs.append(Fraction(dot(pbar.at(n + 1), weighted)))
    for n, t in enumerate(incs, start=1):
        if masses[n] - masses[n - 1] != t:
            raise IdentityViolation(f"m_{n + 1} - m_{n} differs from the increment at level {n}")
    return masses, incs


def extension_partial(sub: Subdiagram, pbar: MeasureFamily | None, depth: int) -> ExtensionReport:
    """Mass trajectory only; ``pbar=None`` uses the canonical subdiagram measure."""
    pbar, canonical = _resolve(sub, pbar, depth)
    masses, incs = _masses(sub, pbar, depth)
    return ExtensionReport(depth, tuple(masses), tuple(incs), None, canonical)


def _mass_form(sub: Subdiagram, canonical: bool, depth: int) -> Hyper | None:
    if not canonical:
        return None
    total, pbar = height_total_form(sub, depth), sub_canonical_form(sub, depth)
    return total * pbar if total is not None and pbar is not None else None


def _ers_tail(sub: Subdiagram, depth: int):
    """``(r, rbar, start)`` when parent heights are level-constant and both tails have equal row sums."""
    ptail, stail = sub.parent.tail, sub.tail()
    if ptail is None or stail is None or ptail.row_sum is None or stail.row_sum is None:
        return None
    if parent_height_form(sub.parent, depth) is None:
        return None
    return ptail.row_sum, stail.row_sum, max(ptail.start, stail.start)


def _thin_stationary_row(sub: Subdiagram) -> CriterionRow | None:
    if not stationary_thin(sub):
        return None
    cls = Classification("exact", False, "thin-stationary-subdiagram")
    return CriterionRow("thin-stationary", "necessary", (), Fraction(0), cls)


def vertex_criteria(sub: Subdiagram, pbar: MeasureFamily | None, depth: int) -> ExtensionReport:
    """The equivalent, two necessary and two sufficient series for a vertex subdiagram."""
    if sub.kind != "vertex":
        raise NotVertexSub("vertex_criteria needs a vertex subdiagram")
    pbar, canonical = _resolve(sub, pbar, depth)
    masses, incs = _masses(sub, pbar, depth)
    spec = sub.parent
    nec_a, nec_b, suff, suff_i = [], [], [], []
    for n in range(1, depth):
        f = spec.matrix(n)
        h, h1 = spec.heights(n), spec.heights(n + 1)
        hb1, p1 = sub.hbar(n + 1), pbar.at(n + 1)
        wn, wn1 = sub.W(n), sub.W(n + 1)
        outside = [w for w in range(len(h)) if w not in wn]
        row_sums, row_max = [], []
        a_term = Fraction(0)
        for v in sorted(wn1):
            qs = [Fraction(f[v][w] * h[w], h1[v]) for w in outside]
            row_sums.append(sum(qs, Fraction(0)))
            row_max.append(max(qs, default=Fraction(0)))
            a_term += row_sums[-1] * hb1[v] * p1[v]
        nec_a.append(a_term)
        nec_b.append(min(row_max))
        suff.append(sum(row_sums, Fraction(0)))
        suff_i.append(max(row_sums))

    notes: list[str] = []
    closed = _ers_tail(sub, depth)
    gap = sizes = off = None
    if closed is not None:
        r, rb, start = closed
        gap = ((r - rb) / r, start)
        sizes = sub_sizes(sub)
        ob = offblock_seq(sub)
        off = (ob[0] / r, max(ob[1], start)) if ob is not None else None
    rows = [
        mass_row("vertex-equivalent", incs, masses, _mass_form(sub, canonical, depth), notes),
        seq_row("necessary-a", "necessary", nec_a, gap, notes),
        seq_row("necessary-b", "necessary", nec_b, off, notes),
        seq_row("sufficient", "sufficient", suff,
                (sizes.shift(1) * gap[0], gap[1]) if gap and sizes is not None else None, notes),
        seq_row("sufficient-I", "sufficient", suff_i, gap, notes),
    ]
    extra = _thin_stationary_row(sub)
    if extra is not None:
        rows.append(extra)
    verdict, vnotes = compose_verdict(rows)
    notes += vnotes
    table = CriteriaTable(tuple(rows), verdict, tuple(notes))
    return ExtensionReport(depth, tuple(masses), tuple(incs), table, canonical)


def _edge_closed(sub: Subdiagram, canonical: bool, depth: int):
    """Closed forms of the edge terms when heights and ``pbar`` are level-constant."""
    if not canonical:
        return None, None, False
    ptail, stail = sub.parent.tail, sub.tail()
    h = parent_height_form(sub.parent, depth)
    pb = sub_canonical_form(sub, depth)
    if h is None or pb is None or ptail is None or stail is None or ptail.row_sum is None:
        return None, None, False
    start = max(ptail.start, stail.start)
    total = ptail.sizes.shift(1) * ptail.row_sum - ptail.sizes * stail.col_sum
    if total.is_zero():
        return Hyper(Fraction(0), start, Seq.const(1)), None, True
    main = h * pb * (total / stail.col_sum)
    suff = None
    hb = sub_height_form(sub, depth)
    if hb is not None and stail.row_sum is not None:
        gap = (ptail.row_sum - stail.row_sum) / stail.row_sum
        if gap.is_zero():
            suff = None
        else:
            suff = (h / hb) * gap
    return main, suff, False


def edge_criteria(sub: Subdiagram, pbar: MeasureFamily | None, depth: int) -> ExtensionReport:
    """Main series ``sum ftilde h pbar`` and the sufficient series ``sum max_v sum_w ftilde h / hbar``."""
    if sub.kind != "edge":
        raise NotEdgeSub("edge_criteria needs an edge subdiagram")
    pbar, canonical = _resolve(sub, pbar, depth)
    masses, incs = _masses(sub, pbar, depth)
    suff = []
    for n in range(1, depth):
        weighted = matvec(sub.ftilde(n), sub.parent.heights(n))
        hb1 = sub.hbar(n + 1)
        suff.append(max(Fraction(x, y) for x, y in zip(weighted, hb1)))
    notes: list[str] = []
    main, suff_form, zero = _edge_closed(sub, canonical, depth)
    rows = [
        hyper_row("edge-equivalent", "equivalent", incs, main, notes, zero=zero),
        hyper_row("edge-sufficient", "sufficient", suff, suff_form if not zero else main, notes, zero=zero),
    ]
    extra = _thin_stationary_row(sub)
    if extra is not None:
        rows.append(extra)
    verdict, vnotes = compose_verdict(rows)
    notes += vnotes
    table = CriteriaTable(tuple(rows), verdict, tuple(notes))
    return ExtensionReport(depth, tuple(masses), tuple(incs), table, canonical)


def criteria(sub: Subdiagram, pbar: MeasureFamily | None, depth: int) -> ExtensionReport:
    return vertex_criteria(sub, pbar, depth) if sub.kind == "vertex" else edge_criteria(sub, pbar, depth)


def ers_ecs_criterion(sub: Subdiagram, depth: int) -> CriteriaTable:
    """``sum r_0...r_{n-1} / (cbar_0...cbar_n) * sum ftilde^(n)`` for an ERS parent and ECS edge subdiagram."""
    if sub.kind != "edge":
        raise NotEdgeSub("ers_ecs_criterion needs an edge subdiagram")
    spec = sub.parent
    ers = ers_check(spec, depth)
    r0 = root_constant(spec)
    if not ers.ok or r0 is None:
        raise NotERS("parent needs a constant root and equal row sums")
    cbar = sub_column_sums(sub, depth + 1)
    if cbar is None:
        raise NotECS("subdiagram blocks need equal column sums")
    r = [r0] + list(ers.sums)
    terms = []
    num, den = 1, 1
    for n in range(1, depth):
        num *= r[n - 1]
        den *= cbar[n - 1]
        ft = sub.ftilde(n)
        terms.append(Fraction(num, den * cbar[n]) * sum(map(sum, ft)))
    notes: list[str] = []
    main, _, zero = _edge_closed(sub, True, depth)
    row = hyper_row("ers-ecs", "equivalent", terms, main, notes, zero=zero)
    verdict, vnotes = compose_verdict([row])
    return CriteriaTable((row,), verdict, tuple(notes + vnotes))


# --------------------------------------------------------- odometer tracks


@dataclass(frozen=True)
class Track:
    """Vertex ``w_n``: ``prefix[n-1]`` for ``n <= len(prefix)``, then the cycle repeats."""

    prefix: tuple[int, ...]
    cycle: tuple[int, ...]

    def __call__(self, n: int) -> int:
        if n <= len(self.prefix):
            return self.prefix[n - 1]
        return self.cycle[(n - len(self.prefix) - 1) % len(self.cycle)]

    def support(self) -> PeriodicSupport:
        return PeriodicSupport(tuple(frozenset({v}) for v in self.prefix),
                               tuple(frozenset({v}) for v in self.cycle))

    def to_json(self) -> dict:
        return {"prefix": list(self.prefix), "cycle": list(self.cycle)}

    @classmethod
    def parse(cls, raw) -> "Track":
        if isinstance(raw, Track):
            return raw
        if isinstance(raw, int):
            return cls((), (raw,))
        if isinstance(raw, dict):
            return cls(tuple(raw.get("prefix", ())), tuple(raw["cycle"]))
        if isinstance(raw, str):
            head, _, tail = raw.partition(";")
            if not tail:
                return cls((), tuple(int(x) for x in head.split(",")))
            return cls(tuple(int(x) for x in head.split(",") if x), tuple(int(x) for x in tail.split(",")))
        raise SpecError(f"cannot read a track from {raw!r}")


def _track_seq(spec: DiagramSpec, track: Track) -> tuple[Seq, int] | None:
    tail = spec.tail
    if tail is None or tail.matrix is None or tail.row_sum is None or len(tail.matrix) != 2:
        return None
    from math import lcm

    from .diagram import tail_period

    L = len(track.cycle)
    s = len(track.prefix) + 1
    period = lcm(tail_period(tail), L)
    branches = []
    for j in range(period):
        w = track.cycle[(j - s) % L]
        w1 = track.cycle[(j + 1 - s) % L]
        entry = tail.matrix[w1][1 - w].align(period).branches[j]
        branches.append(entry / tail.row_sum.align(period).branches[j])
    return Seq(branches), max(tail.start, s)


def rank2_odometer_check(spec: DiagramSpec, track, depth: int) -> CriteriaTable:
    """``sum f_{w_{n+1}, v'_n} / r_n`` for the singleton track ``W_n = {w_n}``.

    A convergent verdict is cross-checked against the full vertex criteria.
    """
    track = Track.parse(track)
    terms = []
    for n in range(1, depth):
        f = spec.matrix(n)
        if len(f) != 2 or len(f[0]) != 2:
            raise NotRank2(f"F_{n} is {len(f)}x{len(f[0])}")
        if sum(f[0]) != sum(f[1]):
            raise NotERS(f"row sums of F_{n} differ")
        w, w1 = track(n), track(n + 1)
        terms.append(Fraction(f[w1][1 - w], sum(f[0])))
    notes: list[str] = []
    row = seq_row("odometer", "equivalent", terms, _track_seq(spec, track), notes)
    verdict, vnotes = compose_verdict([row])
    notes += vnotes
    cross = None
    if verdict.value == "finite":
        sub = VertexSubdiagram(spec, track.support())
        cross = vertex_criteria(sub, None, depth).criteria
        if cross.verdict.value != verdict.value:
            notes.append(f"vertex criteria disagree: {cross.verdict.to_json()}")
    return CriteriaTable((row,), verdict, tuple(notes), cross)


# ------------------------------------------------------------ thin witness


@dataclass(frozen=True)
class ThinWitness:
    threshold: Fraction
    level: int | None
    masses: tuple[Fraction, ...]
    lower_bounds: tuple[Fraction, ...]  # min_w (h/hbar) * subdiagram mass at level n
    thin: Verdict

    def to_json(self) -> dict:
        return {
            "threshold": self.threshold,
            "level": self.level,
            "masses": list(self.masses),
            "lower_bounds": list(self.lower_bounds),
            "thinness": self.thin.to_json(),
        }


def thin_implies_infinite_check(sub: Subdiagram, pbar: MeasureFamily | None, depth: int,
                                threshold: Fraction) -> ThinWitness:
    """First level with ``m_n > threshold`` and the bound ``m_n >= min(h/hbar) * sum hbar pbar``."""
    pbar, _ = _resolve(sub, pbar, depth)
    masses, _ = _masses(sub, pbar, depth)
    bounds = []
    for n in range(1, depth + 1):
        h, hb, p = sub.parent.heights(n), sub.hbar(n), pbar.at(n)
        ws = [w for w in sub.W(n) if hb[w]]
        ratio = min(Fraction(h[w], hb[w]) for w in ws)
        bound = ratio * Fraction(dot(hb, p))
        if masses[n - 1] < bound:
            raise IdentityViolation(f"mass bound fails at level {n}")
        bounds.append(bound)
    level = next((n for n, m in enumerate(masses, start=1) if m > threshold), None)
    return ThinWitness(Fraction(threshold), level, tuple(masses), tuple(bounds), thinness(sub, depth).verdict)
