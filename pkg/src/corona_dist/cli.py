"""Command-line front end.

Exit codes: 0 pass / no violation, 1 rigorous violation, 2 input error,
3 inconclusive.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from fractions import Fraction
from typing import List, Optional

import numpy as np

from . import liouville
from .balls import DEFAULT_PRECISION, MIN_PRECISION, ComplexPoint, PrecisionError, points_from_json
from .cones import (
    Cone,
    ConeError,
    FullSpace,
    LightCone,
    Orthant,
    check_weight_locality,
    cone_from_json,
    hessian_quad_form,
)
from .corona import (
    INCONCLUSIVE,
    VIOLATION,
    CoronaParams,
    SearchBox,
    check_corona,
    random_points,
    search_violation,
    verify_bezout,
)
from .distribution import Distribution, distribution_from_json
from .exact import to_fraction
from .transform import fl_transform, pws_bound_for, verify_pws_on_samples

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3
DEFAULT_SEED = 20240601


class InputError(Exception):
    pass


# ---------------------------------------------------------------- input parsing


def load_json(text_or_path: str, what: str):
    """Parse inline JSON, or the contents of a file path."""
    text = text_or_path
    source = "inline"
    stripped = text_or_path.lstrip()
    if not stripped or stripped[0] not in "[{":
        if text_or_path == "-":
            text, source = sys.stdin.read(), "stdin"
        else:
            try:
                with open(text_or_path, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise InputError(f"cannot read {what} from {text_or_path!r}: {exc.strerror}") from exc
            source = text_or_path
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(
            f"malformed JSON in {what} ({source}): {exc.msg} at line {exc.lineno}, "
            f"column {exc.colno} (char {exc.pos})"
        ) from exc


def load_distributions(items: Optional[List[str]], what: str) -> List[Distribution]:
    out = []
    for item in items or []:
        data = load_json(item, what)
        rows = data if isinstance(data, list) else [data]
        for row in rows:
            try:
                out.append(distribution_from_json(row))
            except (ValueError, KeyError, TypeError) as exc:
                raise InputError(f"invalid distribution in {what}: {exc}") from exc
    return out


_CONE_RE = re.compile(r"^(full|fullspace|orthant|lightcone|light|polyhedral)(\d*)$")


def parse_cone(args, fallback_dim: Optional[int]) -> Cone:
    text = args.cone
    if text.lstrip().startswith("{") or os.path.exists(text):
        data = load_json(text, "--cone")
        try:
            return cone_from_json(data)
        except ConeError as exc:
            raise InputError(str(exc)) from exc
    m = _CONE_RE.match(text.lower())
    if not m:
        raise InputError(f"unknown cone {text!r}; use full, orthant, lightcone or a JSON cone")
    kind, suffix = m.groups()
    dim = int(suffix) if suffix else (args.dimension or fallback_dim or 1)
    if args.dimension and suffix and int(suffix) != args.dimension:
        raise InputError("--dimension disagrees with the cone name")
    if kind in ("full", "fullspace"):
        return FullSpace(dim)
    if kind == "orthant":
        return Orthant(dim)
    if kind in ("lightcone", "light"):
        if dim < 2:
            raise InputError("a light cone needs ambient dimension >= 2")
        return LightCone(dim, to_fraction(args.speed))
    raise InputError("polyhedral cones must be given as JSON with generators")


def parse_params(args) -> CoronaParams:
    try:
        return CoronaParams(args.C, args.N, args.M)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def parse_points(args, dimension: int, n_default: int = 64) -> List[ComplexPoint]:
    if args.points:
        try:
            pts = points_from_json(load_json(args.points, "--points"), args.precision)
        except (ValueError, TypeError) as exc:
            raise InputError(f"invalid sample points: {exc}") from exc
        if not pts:
            raise InputError("sample set is empty")
        for p in pts:
            if p.dimension != dimension:
                raise InputError(f"sample point of dimension {p.dimension}, expected {dimension}")
        return pts
    n = args.samples or n_default
    return random_points(dimension, n, args.seed, re_max=args.re_max, im_max=args.im_max,
                         precision=args.precision)


def _common_dimension(fs: List[Distribution]) -> Optional[int]:
    dims = {f.dimension for f in fs}
    if len(dims) > 1:
        raise InputError(f"distributions of mixed dimensions {sorted(dims)}")
    return dims.pop() if dims else None


# ---------------------------------------------------------------- output


def emit(args, payload, rows: Optional[List[dict]] = None) -> None:
    """Single writer for all reports; csv uses ``rows`` when given."""
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        keys: List[str] = []
        for r in rows:
            for k in r:
                if k not in keys:
                    keys.append(k)
        writer = csv.DictWriter(buf, fieldnames=keys or ["seed"])
        writer.writeheader()
        for r in rows:
            writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v
                             for k, v in r.items()})
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2, default=_json_default) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json_default(obj):
    if isinstance(obj, Fraction):
        return [obj.numerator, obj.denominator]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _finite(x: float):
    return x if math.isfinite(x) else str(x)


def _verdict_code(status: str) -> int:
    if status == VIOLATION:
        return EXIT_VIOLATION
    if status == INCONCLUSIVE:
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# ---------------------------------------------------------------- subcommands


def cmd_transform(args) -> int:
    fs = load_distributions(args.f, "--f")
    if not fs:
        raise InputError("transform needs at least one --f")
    pts = parse_points(args, _common_dimension(fs), n_default=8)
    rows = []
    for i, f in enumerate(fs):
        for z in pts:
            v = fl_transform(f, z)
            rows.append({"f": i, "point": z.to_json(), "value": [v.value.real, v.value.imag],
                         "radius": v.radius})
    emit(args, {"command": "transform", "seed": args.seed, "precision": args.precision,
                "results": rows}, rows)
    return EXIT_OK


def cmd_support_fn(args) -> int:
    if not args.xi:
        raise InputError("support-fn needs --xi")
    xi = np.array([float(to_fraction(x)) for x in args.xi])
    cone = parse_cone(args, len(xi))
    if cone.dimension != len(xi):
        raise InputError(f"--xi has {len(xi)} entries, cone dimension is {cone.dimension}")
    h = cone.support(xi)
    proj = cone.project(xi)
    row = {"xi": xi.tolist(), "H": h, "projection": proj.tolist(),
           "projectionNorm": float(np.linalg.norm(proj))}
    emit(args, {"command": "support-fn", "seed": args.seed, "cone": cone.to_json(), **row}, [row])
    return EXIT_OK


def cmd_weight_check(args) -> int:
    cone = parse_cone(args, args.dimension)
    d = cone.dimension
    rng = np.random.default_rng(args.seed)
    n = args.samples or 1000
    pairs = []
    for _ in range(n):
        z = rng.normal(size=2 * d)
        z *= rng.uniform(0, args.re_max) / np.linalg.norm(z)
        step = rng.normal(size=2 * d)
        # stay strictly inside the unit ball so rounding cannot break |z - zeta| <= 1
        step *= rng.uniform(0, 1 - 1e-9) / np.linalg.norm(step)
        zc = [complex(z[k], z[d + k]) for k in range(d)]
        zeta = [complex(z[k] + step[k], z[d + k] + step[d + k]) for k in range(d)]
        pairs.append((ComplexPoint.of(zc, args.precision), ComplexPoint.of(zeta, args.precision)))
    loc = check_weight_locality(cone, pairs)
    worst_h = math.inf
    hess_ok = True
    for a, _ in pairs:
        w = rng.normal(size=d) + 1j * rng.normal(size=d)
        est = hessian_quad_form(a, list(w))
        worst_h = min(worst_h, est.value)
        if est.upper < 0:
            hess_ok = False
    report = {
        "command": "weight-check", "seed": args.seed, "cone": cone.to_json(), "pairs": loc.count,
        "locality": {"passed": loc.passed, "worstSlack": loc.worst_slack,
                     "violations": loc.violations, "undecided": loc.undecided},
        "hessian": {"passed": hess_ok, "minValue": worst_h},
    }
    emit(args, report)
    if loc.violations or not hess_ok:
        return EXIT_VIOLATION
    return EXIT_OK if loc.passed else EXIT_INCONCLUSIVE


def cmd_pws(args) -> int:
    fs = load_distributions(args.f, "--f")
    if len(fs) != 1:
        raise InputError("pws takes exactly one --f")
    f = fs[0]
    bound = pws_bound_for(f)
    pts = parse_points(args, f.dimension)
    rep = verify_pws_on_samples(f, bound, pts)
    emit(args, {"command": "pws", "seed": args.seed, "bound": bound.to_json(),
                "passed": rep.passed, "worstMargin": _finite(rep.worst_margin),
                "results": rep.rows}, rep.rows)
    return EXIT_OK if rep.passed else EXIT_VIOLATION


def cmd_corona_check(args) -> int:
    fs = load_distributions(args.f, "--f")
    if not fs:
        raise InputError("corona-check needs at least one --f")
    d = _common_dimension(fs)
    cone = parse_cone(args, d)
    params = parse_params(args)
    pts = parse_points(args, d)
    verdict = check_corona(fs, params, cone, pts)
    emit(args, {"command": "corona-check", "seed": args.seed, "params": params.to_json(),
                "cone": cone.to_json(), **verdict.to_json()})
    return _verdict_code(verdict.status)


def cmd_corona_search(args) -> int:
    fs = load_distributions(args.f, "--f")
    if not fs:
        raise InputError("corona-search needs at least one --f")
    d = _common_dimension(fs)
    cone = parse_cone(args, d)
    params = parse_params(args)
    if args.box:
        if len(args.box) != d:
            raise InputError(f"need one --box per coordinate ({d})")
        ranges = tuple(tuple(float(v) for v in b) for b in args.box)
    else:
        ranges = ((-args.re_max, args.re_max, -args.im_max, args.im_max),) * d
    for r in ranges:
        if not (r[0] <= r[1] and r[2] <= r[3]):
            raise InputError(f"box range {r} has lo > hi")
    if args.budget <= 0:
        raise InputError("--budget must be positive")
    verdict = search_violation(fs, params, cone, SearchBox(ranges), budget=args.budget,
                               seed=args.seed, precision=args.precision)
    emit(args, {"command": "corona-search", "seed": args.seed, "budget": args.budget,
                "params": params.to_json(), "cone": cone.to_json(), **verdict.to_json()})
    return _verdict_code(verdict.status)


def cmd_bezout(args) -> int:
    fs = load_distributions(args.f, "--f")
    gs = load_distributions(args.g, "--g")
    if not fs or len(fs) != len(gs):
        raise InputError("bezout-verify needs equally many --f and --g")
    d = _common_dimension(fs + gs)
    pts = parse_points(args, d, n_default=32) if args.points else None
    rep = verify_bezout(fs, gs, samples=pts, n_samples=args.samples or 32, seed=args.seed)
    emit(args, {"command": "bezout-verify", "seed": args.seed, **rep.to_json()})
    if rep.holds is True:
        return EXIT_OK
    return EXIT_VIOLATION if rep.holds is False else EXIT_INCONCLUSIVE


def cmd_liouville_report(args) -> int:
    rows = liouville.report(args.kmax, args.C, args.N, cap=args.cap, tail_terms=args.tail_terms)
    if args.format == "csv":
        text = liouville.rows_to_csv(rows)
    else:
        text = json.dumps({"command": "liouville-report", "seed": args.seed,
                           "rows": [r.to_json() for r in rows]}, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_liouville_refute(args) -> int:
    cone = args.cone if args.cone else "orthant1"
    try:
        ref = liouville.refute_params(args.C, args.N, args.M, cone=cone,
                                      cap=None if args.uncapped else args.cap)
    except liouville.RefutationError as exc:
        emit(args, {"command": "liouville-refute", "seed": args.seed, "refuted": False,
                    "reason": str(exc), "requiredK": exc.required_k})
        return EXIT_INCONCLUSIVE
    emit(args, {"command": "liouville-refute", "seed": args.seed, **ref.to_json()})
    return EXIT_VIOLATION


COMMANDS = {
    "transform": cmd_transform,
    "support-fn": cmd_support_fn,
    "weight-check": cmd_weight_check,
    "pws": cmd_pws,
    "corona-check": cmd_corona_check,
    "corona-search": cmd_corona_search,
    "bezout-verify": cmd_bezout,
    "liouville-report": cmd_liouville_report,
    "liouville-refute": cmd_liouville_refute,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cone", default="orthant", help="full|orthant|lightcone[d], or a JSON cone/path")
    common.add_argument("--speed", default="1", help="light cone speed (rational)")
    common.add_argument("--dimension", type=int, default=None, help="ambient dimension")
    common.add_argument("--C", type=float, default=1.0)
    common.add_argument("--N", type=float, default=1.0)
    common.add_argument("--M", type=float, default=1.0)
    common.add_argument("--precision", type=int, default=DEFAULT_PRECISION, help="working bits")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--budget", type=int, default=4000)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--out", default=None)
    common.add_argument("--f", action="append", help="distribution JSON (path or inline), repeatable")
    common.add_argument("--g", action="append", help="cofactor JSON, repeatable")
    common.add_argument("--points", default=None, help="JSON array of complex coordinate lists")
    common.add_argument("--samples", type=int, default=None, help="number of random sample points")
    common.add_argument("--re-max", type=float, default=5.0)
    common.add_argument("--im-max", type=float, default=1.0)
    common.add_argument("--xi", nargs="+", default=None)
    common.add_argument("--box", nargs=4, action="append", metavar=("RE_LO", "RE_HI", "IM_LO", "IM_HI"))
    common.add_argument("--kmax", type=int, default=4)
    common.add_argument("--cap", type=int, default=liouville.DEFAULT_CAP)
    common.add_argument("--uncapped", action="store_true", help="liouville-refute: search K without a cap")
    common.add_argument("--tail-terms", type=int, default=1)

    parser = argparse.ArgumentParser(prog="corona-dist", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.precision < MIN_PRECISION:
        print(f"error: precision must be >= {MIN_PRECISION} bits", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PrecisionError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
