"""JSON and CSV rendering: rationals as ``"p/q"`` strings, reals as decimal strings."""

from __future__ import annotations

import csv
import io
import json
from decimal import Context, Decimal
from fractions import Fraction
from typing import Any, Iterable

_CTX = Context(prec=17)


def frac_str(x: Fraction | int) -> str:
    return str(Fraction(x))


def decimal17(x: Fraction | int) -> str:
    """17 significant digits, enough to round-trip a double."""
    x = Fraction(x)
    value = _CTX.divide(Decimal(x.numerator), Decimal(x.denominator))
    return format(value, "g") if value else "0"


def parse_frac(raw: Any) -> Fraction:
    if isinstance(raw, bool):
        raise ValueError(f"not a rational: {raw!r}")
    if isinstance(raw, (int, str)):
        return Fraction(raw)
    raise ValueError(f"not a rational: {raw!r}")


def to_plain(obj: Any) -> Any:
    """Replace every ``Fraction`` by its ``"p/q"`` string, recursively."""
    if isinstance(obj, Fraction):
        return frac_str(obj)
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, float):
        return repr(obj)
    return obj


def dumps(obj: Any) -> str:
    return json.dumps(to_plain(obj), indent=2, sort_keys=True) + "\n"


def series_csv(series: Iterable[tuple[str, Iterable[tuple[int, Fraction, Fraction]]]]) -> str:
    """Rows ``(series, level, term, partial_sum)`` in exact and decimal form."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["series", "level", "term", "partial_sum", "term_decimal", "partial_sum_decimal"])
    for name, rows in series:
        for level, term, partial in rows:
            writer.writerow([name, level, frac_str(term), frac_str(partial), decimal17(term), decimal17(partial)])
    return buf.getvalue()


def with_partials(terms: Iterable[Fraction], first_level: int = 1) -> list[tuple[int, Fraction, Fraction]]:
    out, acc = [], Fraction(0)
    for n, t in enumerate(terms, start=first_level):
        acc += t
        out.append((n, Fraction(t), acc))
    return out


def pretty(obj: Any, indent: int = 0) -> str:
    """Indented ``key: value`` text for terminals."""
    obj = to_plain(obj)
    pad = "  " * indent
    lines = []
    if isinstance(obj, dict):
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v and not _flat(v):
                lines.append(f"{pad}{k}:")
                lines.append(pretty(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {_inline(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)) and v and not _flat(v):
                lines.append(f"{pad}-")
                lines.append(pretty(v, indent + 1))
            else:
                lines.append(f"{pad}- {_inline(v)}")
    else:
        lines.append(f"{pad}{obj}")
    return "\n".join(lines)


def _flat(v: Any) -> bool:
    return isinstance(v, list) and all(not isinstance(x, (dict, list)) for x in v)


def _inline(v: Any) -> str:
    if isinstance(v, list):
        return " ".join(str(x) for x in v)
    if v is None:
        return "-"
    return str(v)
