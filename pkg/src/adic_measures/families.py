"""The closed catalogue of parametric diagram families.

Each family turns a handful of level-indexed parameters into incidence
matrices, and also reports what it knows symbolically about its tail
(sizes, equal row/column sums, the full matrix when the size is fixed).
Those symbolic facts feed the exact classifier; every one of them is
re-checked against the numeric matrices before use.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

from .closedform import RatExp, Seq, parse_ratexp
from .errors import SpecError

MAX_LEVEL_SIZE = 1 << 11


@dataclass(frozen=True)
class Tail:
    """Symbolic description of a matrix sequence, valid for ``n >= start``."""

    start: int
    sizes: Seq  # |V_n|
    row_sum: Seq | None = None  # ERS r_n
    col_sum: Seq | None = None  # ECS c_n
    matrix: tuple[tuple[Seq, ...], ...] | None = None  # only for constant sizes


class Param:
    """A level-indexed parameter: a closed form plus finitely many overrides."""

    def __init__(self, raw: Any):
        try:
            self._parse(raw)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise SpecError(f"bad parameter {raw!r}: {exc}") from None

    def _parse(self, raw: Any) -> None:
        self.raw = raw
        self.overrides: dict[int, Fraction] = {}
        if isinstance(raw, bool):
            raise SpecError(f"bad parameter {raw!r}")
        if isinstance(raw, (int, str)):
            self.seq = Seq([parse_ratexp(raw)])
        elif isinstance(raw, dict):
            if "branches" in raw:
                self.seq = Seq([parse_ratexp(b, "m") for b in raw["branches"]])
                if int(raw.get("period", self.seq.period)) != self.seq.period:
                    raise SpecError("period does not match the number of branches")
            elif "expr" in raw:
                self.seq = Seq([parse_ratexp(raw["expr"])])
            else:
                raise SpecError(f"parameter needs 'expr' or 'branches': {raw!r}")
            for key, value in raw.get("overrides", {}).items():
                self.overrides[int(key)] = Fraction(value)
        else:
            raise SpecError(f"bad parameter {raw!r}")

    def __call__(self, n: int) -> Fraction:
        if n in self.overrides:
            return self.overrides[n]
        return self.seq(n)

    @property
    def settled(self) -> int:
        """First level after every override."""
        return max(self.overrides, default=-1) + 1

    def int_at(self, n: int, what: str) -> int:
        x = self(n)
        if x.denominator != 1 or x < 0:
            raise SpecError(f"{what} must be a non-negative integer at level {n}, got {x}")
        return int(x)


def _size(value: int, n: int) -> int:
    if value < 1:
        raise SpecError(f"level {n} would have {value} vertices")
    if value > MAX_LEVEL_SIZE:
        raise SpecError(f"level {n} would have {value} vertices (limit {MAX_LEVEL_SIZE})")
    return value


class Family:
    """Base class; subclasses fill in the catalogue entries."""

    name = ""
    param_names: tuple[str, ...] = ()

    def __init__(self, params: dict[str, Any]):
        unknown = set(params) - set(self.param_names) - {"root"}
        if unknown:
            raise SpecError(f"unknown parameters for {self.name}: {sorted(unknown)}")
        missing = [p for p in self.param_names if p not in params]
        if missing:
            raise SpecError(f"missing parameters for {self.name}: {missing}")
        self.params = {k: Param(params[k]) for k in self.param_names}
        self.raw_params = params

    @property
    def settled(self) -> int:
        return max([p.settled for p in self.params.values()] + [1]) + 1

    def size(self, n: int) -> int:
        raise NotImplementedError

    def default_root(self) -> tuple[int, ...]:
        raise NotImplementedError

    def entries(self, n: int) -> tuple[tuple[Fraction, ...], ...]:
        raise NotImplementedError

    def tail(self) -> Tail | None:
        return None

    def restrict(self, selector: tuple) -> Tail | None:
        """Symbolic tail of the block picked out by a named selector."""
        return None

    def height_total_factor(self, selector: tuple) -> Seq | None:
        """Growth factor of ``sum_{w in W_n} h_w`` when the family knows it."""
        return None

    def offblock_max_entry(self, selector: tuple) -> Seq | None:
        """Largest entry ``f_{v,w}`` with ``v in W_{n+1}``, ``w`` outside ``W_n``."""
        return None

    def selector_size(self, selector: tuple, n: int) -> int | None:
        return None


class AllOnes(Family):
    """All-ones matrices of shape ``sizes(n+1) x sizes(n)``."""

    name = "allones"
    param_names = ("sizes",)

    def size(self, n: int) -> int:
        return _size(self.params["sizes"].int_at(n, "sizes"), n)

    def default_root(self) -> tuple[int, ...]:
        return (1,) * self.size(1)

    def entries(self, n: int):
        one = Fraction(1)
        return tuple((one,) * self.size(n) for _ in range(self.size(n + 1)))

    def tail(self) -> Tail:
        s = self.params["sizes"].seq
        return Tail(self.settled, s, row_sum=s, col_sum=s.shift(1))

    def _count(self, selector: tuple) -> Seq | None:
        s = self.params["sizes"].seq
        if selector[0] == "first":
            return selector[1].seq
        if selector[0] == "all-but-first":
            return s - 1
        return None

    def restrict(self, selector: tuple) -> Tail | None:
        k = self._count(selector)
        if k is None:
            return None
        return Tail(self.settled, k, row_sum=k, col_sum=k.shift(1))

    def offblock_max_entry(self, selector: tuple) -> Seq | None:
        return Seq.const(1) if self._count(selector) is not None else None


class Rank2ERS(Family):
    """``[[a, c], [d, b]]`` with parameters in the level index."""

    name = "rank2-ers"
    param_names = ("a", "b", "c", "d")

    def size(self, n: int) -> int:
        return 2

    def default_root(self) -> tuple[int, ...]:
        return (1, 1)

    def entries(self, n: int):
        p = self.params
        return ((p["a"](n), p["c"](n)), (p["d"](n), p["b"](n)))

    def tail(self) -> Tail:
        p = {k: v.seq for k, v in self.params.items()}
        matrix = ((p["a"], p["c"]), (p["d"], p["b"]))
        r0, r1 = p["a"] + p["c"], p["d"] + p["b"]
        c0, c1 = p["a"] + p["d"], p["c"] + p["b"]
        return Tail(
            self.settled,
            Seq.const(2),
            row_sum=r0 if r0.same_as(r1) else None,
            col_sum=c0 if c0.same_as(c1) else None,
            matrix=matrix,
        )


class LastColumnTwo(Family):
    """Rows ``(1, ..., 1, 2)``: row sums ``|V_n| + 1``, not column-balanced."""

    name = "ecs-lastcol2"
    param_names = ("sizes",)

    def size(self, n: int) -> int:
        return _size(self.params["sizes"].int_at(n, "sizes"), n)

    def default_root(self) -> tuple[int, ...]:
        return (2,) * self.size(1)

    def entries(self, n: int):
        row = (Fraction(1),) * (self.size(n) - 1) + (Fraction(2),)
        return tuple(row for _ in range(self.size(n + 1)))

    def tail(self) -> Tail:
        s = self.params["sizes"].seq
        return Tail(self.settled, s, row_sum=s + 1)


class SectionFive(Family):
    """Rows ``(a_n, 1, ..., 1)``, then ``(0, 1, ..., 1)``, last ``(1, ..., 1)``.

    ``|V_n| = 1 + a_{n-1}``; the first vertex carries the odometer ``(a_n)``.
    """

    name = "section5"
    param_names = ("a",)

    def _a(self, n: int) -> int:
        return self.params["a"].int_at(n, "a")

    def size(self, n: int) -> int:
        return _size(1 + self._a(n - 1), n)

    def default_root(self) -> tuple[int, ...]:
        return (1,) * self.size(1)

    def entries(self, n: int):
        rows, cols = self.size(n + 1), self.size(n)
        zero, one = Fraction(0), Fraction(1)
        out = [(Fraction(self._a(n)),) + (one,) * (cols - 1)]
        out += [(zero,) + (one,) * (cols - 1)] * (rows - 2)
        out.append((one,) * cols)
        return tuple(out)

    def tail(self) -> Tail:
        a = self.params["a"].seq
        return Tail(self.settled, a.shift(-1) + 1, col_sum=a + 1)

    def restrict(self, selector: tuple) -> Tail | None:
        a = self.params["a"].seq
        if selector[0] == "first" and selector[1].seq.same_as(Seq.const(1)):
            return Tail(self.settled, Seq.const(1), row_sum=a, col_sum=a)
        if selector[0] == "all-but-first":
            return Tail(self.settled, a.shift(-1), row_sum=a.shift(-1), col_sum=a)
        return None

    def height_total_factor(self, selector: tuple) -> Seq | None:
        # h_first and the sum over the other vertices both obey x -> (a_n + 1) x
        # as soon as they agree at one level; the numeric check enforces that.
        if (selector[0] == "first" and selector[1].seq.same_as(Seq.const(1))) or selector[0] == "all-but-first":
            return self.params["a"].seq + 1
        return None


CATALOGUE: dict[str, Callable[[dict[str, Any]], Family]] = {
    cls.name: cls for cls in (AllOnes, Rank2ERS, LastColumnTwo, SectionFive)
}


def make_family(name: str, params: dict[str, Any]) -> Family:
    try:
        cls = CATALOGUE[name]
    except KeyError:
        raise SpecError(f"unknown family {name!r}; known: {sorted(CATALOGUE)}") from None
    return cls(params)
