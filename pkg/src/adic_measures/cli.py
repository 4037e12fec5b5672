"""Command-line front end.

Exit codes: 0 success, 1 validation or analysis failure, 2 usage error
(bad flags, unreadable or malformed input).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import __version__
from .diagram import Explicit, DiagramSpec, spec_from_json, spec_to_json, telescope, validate
from .errors import AdicError, SpecError, ValidationError
from .extension import (
    criteria as run_criteria,
    ers_ecs_criterion,
    extension_partial,
    rank2_odometer_check,
)
from .measure import (
    MeasureFamily,
    count_ergodic,
    pf_measure,
    rank2_ers_classify,
    simplex_contract,
    stationary_pf,
    uniform_ecs_measure,
)
from .oracle import DEFAULT_BUDGET, brute_measure_mass, counts_between, enumerate_paths, random_measure
from .serialize import dumps, parse_frac, pretty, series_csv, with_partials
from .subdiagram import complement, sub_from_json, subspace_measure, thinness, validate_sub

DEFAULT_DEPTH = 64
DEPTH_ENV = "ADIC_MEASURES_DEPTH"


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ input


def _read_json(path: str) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _load_spec(path: str) -> DiagramSpec:
    try:
        return spec_from_json(_read_json(path))
    except SpecError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _load_sub(args):
    doc = _read_json(args.sub)
    parent = _load_spec(args.parent) if args.parent else None
    try:
        return sub_from_json(doc, parent, Path(args.sub).parent)
    except SpecError as exc:
        raise UsageError(f"{args.sub}: {exc}") from None


def _load_measure(path: str) -> MeasureFamily:
    doc = _read_json(path)
    if isinstance(doc, dict):
        doc = doc.get("vectors")
    if not isinstance(doc, list) or not all(isinstance(v, list) for v in doc):
        raise UsageError(f"{path}: expected a list of per-level vectors")
    try:
        return MeasureFamily(tuple(tuple(parse_frac(x) for x in v) for v in doc))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _depth(args, spec: DiagramSpec | None = None) -> int:
    depth = args.depth
    if depth is None:
        env = os.environ.get(DEPTH_ENV)
        if env:
            try:
                depth = int(env)
            except ValueError:
                raise UsageError(f"{DEPTH_ENV} must be an integer, got {env!r}") from None
        else:
            depth = DEFAULT_DEPTH
            if spec is not None and isinstance(spec.body, Explicit):
                depth = min(depth, len(spec.body.matrices) + 1)
    if depth < 1:
        raise UsageError("depth must be at least 1")
    return depth


def _require_valid(spec: DiagramSpec, depth: int) -> None:
    report = validate(spec, depth)
    if not report.ok:
        raise ValidationError("diagram fails validation", report.violations)


# --------------------------------------------------------------- commands


def cmd_validate(args):
    spec = _load_spec(args.spec)
    depth = _depth(args, spec)
    report = validate(spec, depth)
    return report.to_json(), None, 0 if report.ok else 1


def cmd_heights(args):
    spec = _load_spec(args.spec)
    depth = _depth(args, spec)
    _require_valid(spec, depth)
    if args.all_levels:
        levels = {str(n): [str(x) for x in spec.heights(n)] for n in range(1, depth + 1)}
        return {"level": depth, "heights": [str(x) for x in spec.heights(depth)], "levels": levels}, None, 0
    return {"level": depth, "heights": [str(x) for x in spec.heights(depth)]}, None, 0


def cmd_telescope(args):
    spec = _load_spec(args.spec)
    try:
        levels = [int(x) for x in args.levels.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--levels must be a comma separated list of integers: {args.levels!r}") from None
    depth = max(levels) if levels else 1
    _require_valid(spec, depth)
    out = telescope(spec, levels)
    return {"levels": levels, "spec": spec_to_json(out)}, None, 0


def cmd_measure(args):
    spec = _load_spec(args.spec)
    depth = _depth(args, spec)
    _require_valid(spec, depth)
    if args.what == "count":
        report = count_ergodic(spec, depth, args.mode)
        out = {"count": report.to_json(), "verdict": report.verdict.to_json()}
        series = [("1-term", with_partials([1 - t for t in report.terms]))]
        if all(spec.size(n) == 2 for n in range(1, depth + 1)):
            try:
                r2 = rank2_ers_classify(spec, depth)
            except AdicError:
                r2 = None
            if r2 is not None:
                out["rank2"] = r2.to_json()
                series += [(row.name, with_partials(row.terms)) for row in r2.rows]
        return out, series, 0
    if args.what == "pf":
        if args.tol <= 0:
            raise UsageError("--tol must be positive")
        result = stationary_pf(spec, tol=args.tol)
        mu = pf_measure(spec, result, min(depth, 4))
        return {"pf": result.to_json(), "measure_first_levels": mu.to_json()}, None, 0
    if args.what == "simplex":
        if depth <= args.base_level:
            raise UsageError("--depth must exceed --base-level")
        return {"simplex": simplex_contract(spec, depth, args.base_level).to_json()}, None, 0
    mu = uniform_ecs_measure(spec, depth)
    return {"canonical": mu.to_json()}, None, 0


def cmd_subdiagram(args):
    sub = _load_sub(args)
    depth = _depth(args, sub.parent)
    _require_valid(sub.parent, depth)
    check = validate_sub(sub, depth)
    if not check.ok:
        return {"validation": check.to_json()}, None, 1
    if args.what == "measure":
        mu = _load_measure(args.measure) if args.measure else None
        report = subspace_measure(sub, mu, depth)
        return {"subspace_measure": report.to_json()}, [("S", with_partials(report.terms))], 0
    if args.what == "thinness":
        report = thinness(sub, depth)
        return {"thinness": report.to_json()}, [("max_ratio", with_partials(report.max_ratio))], 0
    comp = complement(sub, depth)
    comp_check = validate_sub(comp, depth)
    return {"complement": comp.to_json(), "validation": comp_check.to_json()}, None, 0 if comp_check.ok else 1


def cmd_extension(args):
    if args.what == "odometer-check":
        spec = _load_spec(args.spec)
        depth = _depth(args, spec)
        _require_valid(spec, depth)
        if not args.track:
            raise UsageError("odometer-check needs --track")
        table = rank2_odometer_check(spec, args.track, depth)
        return {"odometer": table.to_json(), "verdict": table.verdict.to_json()}, \
            [(r.name, r.csv_rows()) for r in table.rows], 0
    args.sub = args.spec
    sub = _load_sub(args)
    depth = _depth(args, sub.parent)
    _require_valid(sub.parent, depth)
    check = validate_sub(sub, depth)
    if not check.ok:
        return {"validation": check.to_json()}, None, 1
    pbar = _load_measure(args.pbar) if args.pbar else None
    if args.what == "trajectory":
        report = extension_partial(sub, pbar, depth)
        return {"extension": report.to_json()}, [("increments", with_partials(report.increments))], 0
    report = run_criteria(sub, pbar, depth)
    out = {"extension": report.to_json(), "verdict": report.verdict.to_json()}
    series = [(r.name, r.csv_rows()) for r in report.criteria.rows]
    if sub.kind == "edge" and pbar is None:
        try:
            out["ers_ecs"] = ers_ecs_criterion(sub, depth).to_json()
        except AdicError:
            pass
    return out, series, 0


def cmd_oracle(args):
    spec = _load_spec(args.spec)
    depth = _depth(args, spec)
    _require_valid(spec, depth)
    if args.what == "paths":
        table = enumerate_paths(spec, depth, args.budget)
        return {"paths": table.to_json(), "budget": args.budget}, None, 0
    if args.what == "mass":
        table = enumerate_paths(spec, depth, args.budget)
        mu = random_measure(spec, depth, args.seed)
        masses = [brute_measure_mass(table, mu, n) for n in range(1, depth + 1)]
        return {"seed": args.seed, "budget": args.budget, "masses": masses}, None, 0
    lo = args.from_level
    hi = args.to_level if args.to_level is not None else depth
    if not 1 <= lo < hi:
        raise UsageError("need 1 <= --from < --to")
    return {"from": lo, "to": hi, "counts": [[str(x) for x in r] for r in counts_between(spec, lo, hi)]}, None, 0


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--depth", type=int, default=None,
                        help=f"levels to use (default ${DEPTH_ENV} or {DEFAULT_DEPTH})")
    common.add_argument("--tol", type=float, default=1e-12, help="tolerance for power iteration")
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="path budget for the oracle")
    common.add_argument("--seed", type=int, default=0, help="seed for random measures")
    common.add_argument("--format", choices=("json", "csv", "pretty"), default="json")
    common.add_argument("--out", default=None, help="write the report here instead of stdout")

    ap = argparse.ArgumentParser(prog="adic-measures", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a diagram spec")
    p.add_argument("spec")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("heights", parents=[common], help="tower heights at level --depth")
    p.add_argument("spec")
    p.add_argument("--all-levels", action="store_true", help="also list every level up to --depth")
    p.set_defaults(func=cmd_heights)

    p = sub.add_parser("telescope", parents=[common], help="telescope to the given levels")
    p.add_argument("spec")
    p.add_argument("--levels", required=True, help="comma separated, starting at 1")
    p.set_defaults(func=cmd_telescope)

    p = sub.add_parser("measure", parents=[common], help="invariant measures of a diagram")
    p.add_argument("what", choices=("count", "pf", "simplex", "canonical"))
    p.add_argument("spec")
    p.add_argument("--mode", choices=("auto", "determinant", "diameter"), default="auto")
    p.add_argument("--base-level", type=int, default=1)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("subdiagram", parents=[common], help="subdiagram path spaces")
    p.add_argument("what", choices=("measure", "thinness", "complement"))
    p.add_argument("sub")
    p.add_argument("--parent", default=None, help="parent spec, overriding the one named in SUB")
    p.add_argument("--measure", default=None, help="measure vectors; default is the canonical measure")
    p.set_defaults(func=cmd_subdiagram)

    p = sub.add_parser("extension", parents=[common], help="extension of subdiagram measures")
    p.add_argument("what", choices=("trajectory", "criteria", "odometer-check"))
    p.add_argument("spec", help="subdiagram file (diagram spec for odometer-check)")
    p.add_argument("--parent", default=None)
    p.add_argument("--pbar", default=None, help="subdiagram measure; default is the canonical one")
    p.add_argument("--track", default=None, help="odometer vertices, e.g. '0' or '1,0' or '0;1,0'")
    p.set_defaults(func=cmd_extension)

    p = sub.add_parser("oracle", parents=[common], help=argparse.SUPPRESS)
    p.add_argument("what", choices=("paths", "mass", "counts"))
    p.add_argument("spec")
    p.add_argument("--from", dest="from_level", type=int, default=1)
    p.add_argument("--to", dest="to_level", type=int, default=None)
    p.set_defaults(func=cmd_oracle)
    return ap


def _render(args, result: dict, series, depth_used: int | None) -> str:
    report = {"tool": "adic-measures", "version": __version__, "command": _command_name(args),
              "depth": depth_used, "result": result}
    if args.format == "json":
        return dumps(report)
    if args.format == "pretty":
        return pretty(report) + "\n"
    if series is None:
        raise UsageError("csv output is only available for commands that produce series")
    return series_csv(series)


def _command_name(args) -> str:
    what = getattr(args, "what", None)
    return f"{args.command} {what}" if what else args.command


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        result, series, code = args.func(args)
        depth_used = result.get("depth") if isinstance(result, dict) and "depth" in result else None
        if depth_used is None:
            depth_used = _reported_depth(args)
        text = _render(args, result, series, depth_used)
    except UsageError as exc:
        print(f"adic-measures: error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        payload = {"error": type(exc).__name__, "message": str(exc),
                   "violations": [v.to_json() if hasattr(v, "to_json") else str(v) for v in exc.violations]}
        sys.stdout.write(dumps(payload))
        return 1
    except AdicError as exc:
        print(f"adic-measures: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


def _reported_depth(args) -> int | None:
    try:
        if args.command == "telescope":
            return None
        path = args.spec if hasattr(args, "spec") and args.command != "subdiagram" else None
        spec = _load_spec(path) if path and args.command != "extension" else None
        return _depth(args, spec)
    except UsageError:
        return None


if __name__ == "__main__":
    raise SystemExit(main())
