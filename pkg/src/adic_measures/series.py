"""Convergence classification and verdict values.

Two routes exist.  Sequences with a closed form (``Seq`` terms or
``Hyper`` products) are decided exactly by asymptotic comparison and
Gauss's test.  Plain numeric term lists only ever get a heuristic
answer from windowed ratio and Raabe statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .closedform import Hyper, RatExp, Seq

DEFAULT_WINDOW = 16
DEFAULT_THRESHOLD = 0.05


@dataclass(frozen=True)
class Classification:
    """Outcome of a convergence test on a non-negative series."""

    kind: str  # "exact" | "heuristic" | "inconclusive"
    convergent: bool | None
    method: str = ""
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.kind == "exact"

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "convergent": self.convergent}
        if self.method:
            out["method"] = self.method
        if self.params:
            out["params"] = dict(self.params)
        return out


@dataclass(frozen=True)
class LimitClass:
    """Where a positive sequence goes: ``zero``, ``positive`` or ``infinite``."""

    kind: str  # "exact" | "heuristic" | "inconclusive"
    value: str | None
    method: str = ""
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return self.kind == "exact"

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "value": self.value}
        if self.method:
            out["method"] = self.method
        if self.params:
            out["params"] = dict(self.params)
        return out


@dataclass(frozen=True)
class Verdict:
    """Tagged verdict such as ``{"kind": "exact", "value": 2}``."""

    kind: str  # exact | heuristic | lower-bound | upper-bound | bracketed | inconclusive
    value: Any = None
    lower: Fraction | None = None
    upper: Fraction | None = None
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.value is not None:
            out["value"] = self.value
        if self.lower is not None:
            out["lower"] = self.lower
        if self.upper is not None:
            out["upper"] = self.upper
        if self.notes:
            out["notes"] = list(self.notes)
        return out


INCONCLUSIVE = Classification("inconclusive", None)


# ------------------------------------------------------------ exact route

def _period_ratio(factor: Seq, j: int) -> RatExp:
    """Product of one full period of ``factor`` along ``n = P*m + j``."""
    p = factor.period
    out = RatExp.const(1)
    for t in range(p):
        q, r = divmod(j + t, p)
        out = out * factor.branches[r].substitute(1, q)
    return out


def _gauss(ratio: RatExp) -> tuple[str, Fraction | None]:
    """Classify a term ratio ``t_{m+1}/t_m``.

    Returns ``("lt1", None)``, ``("gt1", None)`` or ``("eq1", sigma)`` with
    ``ratio = 1 - sigma/m + O(m**-2)``.
    """
    a = ratio.asymptotic()
    if a is None:
        return "lt1", None
    if a.coef < 0:
        raise ValueError("term ratio is eventually negative")
    reg = a.regime()
    if reg == "zero":
        return "lt1", None
    if reg == "infinite":
        return "gt1", None
    if a.coef < 1:
        return "lt1", None
    if a.coef > 1:
        return "gt1", None
    gap = (1 - ratio).asymptotic()
    if gap is None:
        return "eq1", Fraction(0)
    if gap.base < 1 or (gap.base == 1 and gap.power <= -2):
        return "eq1", Fraction(0)
    if gap.base == 1 and gap.power == -1:
        return "eq1", gap.coef
    raise ValueError("ratio tends to one slower than 1/m")


def classify_seq_sum(terms: Seq) -> Classification:
    """Decide ``sum |t_n|`` for a closed-form term sequence."""
    for branch in terms.branches:
        a = branch.asymptotic()
        if a is None:
            continue
        if a.base < 1 or (a.base == 1 and a.power <= -2):
            continue
        return Classification("exact", False, "asymptotic-comparison")
    return Classification("exact", True, "asymptotic-comparison")


def classify_hyper_sum(h: Hyper) -> Classification:
    """Decide ``sum_n h(n)`` for an anchored product with positive terms."""
    if h.anchor == 0:
        return Classification("exact", True, "gauss")
    for j in range(h.factor.period):
        regime, sigma = _gauss(_period_ratio(h.factor, j))
        if regime == "gt1" or (regime == "eq1" and sigma is not None and sigma <= 1):
            return Classification("exact", False, "gauss")
    return Classification("exact", True, "gauss")


def classify_hyper_limit(h: Hyper) -> LimitClass:
    """Decide whether ``h(n)`` tends to zero, stays positive and bounded, or blows up."""
    if h.anchor == 0:
        return LimitClass("exact", "zero", "gauss")
    seen = set()
    for j in range(h.factor.period):
        regime, sigma = _gauss(_period_ratio(h.factor, j))
        if regime == "lt1":
            seen.add("zero")
        elif regime == "gt1":
            seen.add("infinite")
        elif sigma == 0:
            seen.add("positive")
        elif sigma > 0:
            seen.add("zero")
        else:
            seen.add("infinite")
    if len(seen) == 1:
        return LimitClass("exact", seen.pop(), "gauss")
    return LimitClass("inconclusive", None, "gauss", {"branches": sorted(seen)})


def classify_product(factors: Seq) -> LimitClass:
    """Decide ``prod (1 - t_n)``-style products through ``sum |1 - factor|``."""
    return classify_hyper_limit(Hyper(Fraction(1), 1, factors))


# -------------------------------------------------------- heuristic route

def _log(x: Fraction) -> float:
    return math.log(x.numerator) - math.log(x.denominator)


def heuristic_sum(terms: Sequence[Fraction], window: int = DEFAULT_WINDOW,
                  threshold: float = DEFAULT_THRESHOLD) -> Classification:
    """Windowed ratio and Raabe tests over the last ``window`` terms."""
    n_terms = len(terms)
    w = max(3, min(window, n_terms // 2))
    params = {"window": w, "threshold": threshold, "terms": n_terms}
    if n_terms < 6:
        return Classification("inconclusive", None, "too-few-terms", params)
    tail = [abs(Fraction(t)) for t in terms[-(w + 1):]]
    if all(t == 0 for t in tail):
        return Classification("heuristic", True, "eventually-zero", params)
    if any(t == 0 for t in tail):
        return Classification("inconclusive", None, "sparse-terms", params)
    start = n_terms - w
    logs = [_log(tail[i + 1] / tail[i]) for i in range(w)]
    mean_log = sum(logs) / w
    if mean_log < math.log(1 - threshold):
        return Classification("heuristic", True, "ratio-window", params)
    if mean_log > math.log(1 + threshold):
        return Classification("heuristic", False, "ratio-window", params)
    raabe = sum((start + i) * (1 - math.exp(logs[i])) for i in range(w)) / w
    params = {**params, "raabe": round(raabe, 6)}
    if raabe > 1 + threshold:
        return Classification("heuristic", True, "raabe-window", params)
    if raabe < 1 - threshold:
        return Classification("heuristic", False, "raabe-window", params)
    return Classification("inconclusive", None, "raabe-window", params)


def heuristic_limit(values: Sequence[Fraction], window: int = DEFAULT_WINDOW,
                    threshold: float = DEFAULT_THRESHOLD) -> LimitClass:
    """Guess the fate of a positive monotone-ish sequence from its step ratios."""
    vals = [Fraction(v) for v in values]
    if vals and vals[-1] == 0:
        return LimitClass("heuristic", "zero", "reached-zero", {"terms": len(vals)})
    if any(v <= 0 for v in vals) or len(vals) < 7:
        return LimitClass("inconclusive", None, "too-few-terms", {"terms": len(vals)})
    steps = [abs(1 - vals[i + 1] / vals[i]) for i in range(len(vals) - 1)]
    c = heuristic_sum(steps, window, threshold)
    if c.convergent is None:
        return LimitClass("inconclusive", None, c.method, c.params)
    if c.convergent:
        return LimitClass("heuristic", "positive", c.method, c.params)
    return LimitClass("heuristic", "zero" if vals[-1] < vals[0] else "infinite", c.method, c.params)


def combine(exact: Classification | None, heuristic: Classification | None) -> tuple[Classification, list[str]]:
    """Exact beats heuristic; a disagreement is returned as a note."""
    notes: list[str] = []
    if exact is not None and exact.exact:
        if heuristic is not None and heuristic.convergent is not None and heuristic.convergent != exact.convergent:
            notes.append(f"heuristic {heuristic.method} disagreed with the exact verdict")
        return exact, notes
    return (heuristic or INCONCLUSIVE), notes


def anchored(factor: Seq, start: int, actual, depth: int) -> Hyper | None:
    """``Hyper(actual(start), start, factor)`` if it reproduces ``actual`` up to ``depth``.

    ``actual(n)`` returns the exact value or ``None`` when the quantity is
    not defined (for example heights that differ across a level).
    """
    if start > depth:
        return None
    value = actual(start)
    if value is None:
        return None
    out = Hyper(Fraction(value), start, factor)
    running = Fraction(value)
    for n in range(start + 1, depth + 1):
        try:
            running *= factor(n - 1)
        except ZeroDivisionError:
            return None
        if actual(n) != running:
            return None
    return out
