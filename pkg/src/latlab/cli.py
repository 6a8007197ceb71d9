"""Batch command-line front end with deterministic CSV/JSON output.

One subcommand per experiment.  All output goes to stdout; exit code 0 on
success, 2 on a precondition violation, 3 when an enumeration budget runs
out.  A flat key=value config file seeds the run configuration and
individual flags override it.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .diophantine import (
    estimate_type,
    gamma_condition_check,
    orbit_eta_series,
    weyl_type,
)
from .dimension import (
    DEFAULT_EPSILON,
    EMPTY_SET,
    cantor_build,
    critical_dimension,
    dim_full_space,
    dim_upper_bound,
    treelike_lower_bound,
)
from .exact import bruhat_decompose, mat3
from .latgeom import EnumerationBudgetError, injectivity_radius, systole
from .lie import ConstantsProfile, FlowParams, UnipotentUpper
from .ratpoints import (
    CoordBox,
    CountBudgetError,
    CountSpec,
    DEFAULT_K_HALFWIDTH,
    RationalPointCanon,
    TruncationMarker,
    canonicalize,
    count_band,
    count_family,
    denominator_oracle,
    enumerate_band,
    expand,
    kernu_coordinate,
)


@dataclass(frozen=True)
class RunConfig:
    """Run-wide settings shared by every subcommand."""

    flow: FlowParams
    constants: ConstantsProfile
    seed: int
    output_format: str
    budget: Optional[int]


def _parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f"not a rational number: {text!r}") from e


def _parse_real(text: str):
    """Fractions and integers stay exact; a decimal point means float."""
    text = text.strip()
    if "." in text and "/" not in text:
        return float(text)
    return _parse_fraction(text)


def _parse_csv_values(text: str, n: int, what: str) -> list[str]:
    parts = [p for p in text.split(",")]
    if len(parts) != n:
        raise ValueError(f"{what} needs {n} comma-separated values")
    return parts


def _parse_matrix(text: str, exact: bool = False):
    parts = _parse_csv_values(text, 9, "matrix")
    vals = [(_parse_fraction(p) if exact else _parse_real(p)) for p in parts]
    if any(isinstance(v, float) for v in vals):
        vals = [float(v) for v in vals]
    return tuple(tuple(vals[3 * i + j] for j in range(3)) for i in range(3))


def _parse_box(text: str) -> CoordBox:
    parts = _parse_csv_values(text, 6, "box")
    v = [_parse_fraction(p) for p in parts]
    return CoordBox(lo1=v[0], hi1=v[1], lo2=v[2], hi2=v[3], lo3=v[4], hi3=v[5])


def _read_config_file(path: str) -> dict:
    data = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line is not key=value: {line!r}")
            key, _, value = line.partition("=")
            data[key.strip()] = value.strip()
    return data


def _build_config(args) -> RunConfig:
    data = _read_config_file(args.config) if args.config else {}
    if args.flow is not None:
        l1, l2, l3 = _parse_csv_values(args.flow, 3, "flow")
        data["flow.lambda1"], data["flow.lambda2"], data["flow.lambda3"] = l1, l2, l3
    flow = FlowParams(
        lambda1=_parse_fraction(data.get("flow.lambda1", "1")),
        lambda2=_parse_fraction(data.get("flow.lambda2", "0")),
        lambda3=_parse_fraction(data.get("flow.lambda3", "-1")),
    )
    constants = ConstantsProfile(
        kappa=float(_parse_fraction(data.get("constants.kappa", "2"))),
        kappa_prime=float(_parse_fraction(data.get("constants.kappa_prime", "10"))),
        kappa_double_prime=float(
            _parse_fraction(data.get("constants.kappa_double_prime", "10"))
        ),
        C=float(_parse_fraction(data.get("constants.C", "4"))),
        r0=float(_parse_fraction(data.get("constants.r0", "1/2"))),
        epsilon0=float(_parse_fraction(data.get("constants.epsilon0", "1/4"))),
    )
    seed = args.seed if args.seed is not None else int(data.get("seed", "0"))
    fmt = args.format or data.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ValueError("output format must be csv or json")
    if args.budget is not None:
        budget = args.budget
    elif "budget" in data:
        budget = int(data["budget"])
    else:
        budget = None
    return RunConfig(
        flow=flow, constants=constants, seed=seed, output_format=fmt, budget=budget
    )


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(e) for e in v]
    if isinstance(v, dict):
        return {k: _jsonable(e) for k, e in v.items()}
    return v


def _emit_json(obj) -> None:
    sys.stdout.write(json.dumps(_jsonable(obj), indent=2, sort_keys=True))
    sys.stdout.write("\n")


def _emit_csv(header: Sequence[str], rows) -> None:
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def _point_from_args(args) -> RationalPointCanon:
    if args.tuple:
        vals = [int(p) for p in _parse_csv_values(args.tuple, 5, "tuple")]
        return RationalPointCanon(
            a=vals[0], b=vals[1], p1=vals[2], p2=vals[3], q=vals[4]
        )
    coords = [_parse_fraction(p) for p in _parse_csv_values(args.coords, 3, "coords")]
    return canonicalize(UnipotentUpper(x12=coords[0], x23=coords[1], x13=coords[2]))


def cmd_denominator(args, cfg: RunConfig) -> int:
    pt = _point_from_args(args)
    oracle = denominator_oracle(expand(pt))
    agree = oracle == pt.d_p
    fields = [
        ("a", pt.a),
        ("b", pt.b),
        ("p1", pt.p1),
        ("p2", pt.p2),
        ("q", pt.q),
        ("d", pt.d),
        ("d_p_formula", pt.d_p),
        ("d_p_oracle", oracle),
        ("a_p1", pt.a_p[0]),
        ("a_p2", pt.a_p[1]),
        ("a_p3", pt.a_p[2]),
        ("agree", agree),
    ]
    if cfg.output_format == "json":
        _emit_json(dict(fields))
    else:
        _emit_csv([k for k, _ in fields], [[v for _, v in fields]])
    return 0


_LIST_HEADER = [
    "a", "b", "p1", "p2", "q", "d", "d_p",
    "a_p1", "a_p2", "a_p3", "kernu_coord",
]


def cmd_count(args, cfg: RunConfig) -> int:
    box = _parse_box(args.box) if args.box else CoordBox(
        lo1=Fraction(0), hi1=Fraction(1),
        lo2=Fraction(0), hi2=Fraction(1),
        lo3=Fraction(0), hi3=Fraction(1),
    )
    k = args.K if args.K is not None else DEFAULT_K_HALFWIDTH
    if args.band is not None and args.family is not None:
        raise ValueError("choose either --band or --family, not both")
    if args.band is None and args.family is None:
        raise ValueError("one of --band or --family is required")

    if args.list:
        if args.band is None:
            raise ValueError("--list requires --band")
        rows = []
        truncated = False
        spec = CountSpec(box=box, l=args.band, K_halfwidth=k)
        for item in enumerate_band(spec, flow=cfg.flow, budget=cfg.budget):
            if isinstance(item, TruncationMarker):
                truncated = True
                break
            rows.append(
                [
                    item.a, item.b, item.p1, item.p2, item.q, item.d, item.d_p,
                    item.a_p[0], item.a_p[1], item.a_p[2],
                    kernu_coordinate(item, cfg.flow),
                ]
            )
        if cfg.output_format == "json":
            _emit_json(
                {
                    "points": [dict(zip(_LIST_HEADER, r)) for r in rows],
                    "truncated": truncated,
                }
            )
        else:
            _emit_csv(_LIST_HEADER, rows)
        if truncated:
            print("warning: enumeration truncated by budget", file=sys.stderr)
            return 3
        return 0

    top = args.band if args.band is not None else args.max
    if top is None:
        raise ValueError("--family needs --max")
    ls = []
    l = 2
    while l <= top:
        ls.append(l)
        l *= 2
    rows = []
    truncated = False
    prev = None
    for l in ls:
        try:
            if args.band is not None:
                spec = CountSpec(box=box, l=l, K_halfwidth=k)
                n = count_band(spec, flow=cfg.flow, budget=cfg.budget, method=args.method)
            else:
                n = count_family(args.family, l)
        except CountBudgetError:
            truncated = True
            break
        ratio = None if prev in (None, 0) else n / prev
        rows.append([l, n, n / (l * l), ratio])
        prev = n
    if cfg.output_format == "json":
        keys = ["l", "count", "count_over_l2", "doubling_ratio"]
        _emit_json(
            {"rows": [dict(zip(keys, r)) for r in rows], "truncated": truncated}
        )
    else:
        _emit_csv(["l", "count", "count_over_l2", "doubling_ratio"], rows)
    if truncated:
        print("warning: counting truncated by budget", file=sys.stderr)
        return 3
    return 0


def cmd_orbit(args, cfg: RunConfig) -> int:
    header = ["t", "eta", "gauge", "certified"]
    if args.steps == 0:
        if cfg.output_format == "json":
            _emit_json({"samples": []})
        else:
            _emit_csv(header, [])
        return 0
    if args.steps == 1:
        grid = [args.tmin]
    else:
        step = (args.tmax - args.tmin) / (args.steps - 1)
        grid = [args.tmin + i * step for i in range(args.steps)]
    if args.tuple:
        p = expand(_point_from_args(args))
    else:
        vals = [_parse_real(s) for s in _parse_csv_values(args.coords, 3, "coords")]
        if any(isinstance(v, float) for v in vals):
            vals = [float(v) for v in vals]
        p = UnipotentUpper(x12=vals[0], x23=vals[1], x13=vals[2])
    series = orbit_eta_series(p, cfg.flow, grid, search_radius=args.radius)
    rows = [[s.t, float(s.eta), s.gauge, s.certified] for s in series.samples]
    if cfg.output_format == "json":
        obj = {"samples": [dict(zip(header, r)) for r in rows]}
        if args.window:
            lo, hi = (_parse_real(v) for v in _parse_csv_values(args.window, 2, "window"))
            obj["slope"] = estimate_type(series, (float(lo), float(hi)))
        _emit_json(obj)
    else:
        _emit_csv(header, rows)
    return 0


def cmd_classify(args, cfg: RunConfig) -> int:
    m = _parse_matrix(args.matrix, exact=True)
    cell = bruhat_decompose(mat3(m)).cell_index
    weyl_index = None
    pivot = None
    note = ""
    try:
        wt = weyl_type(m)
        weyl_index = wt.index
        pivot = wt.pivot_pair
    except ValueError as e:
        note = str(e)
    gamma_ok = None
    norms = (None, None, None)
    if args.t is not None or args.gamma is not None:
        if args.t is None or args.gamma is None:
            raise ValueError("the band check needs both --t and --gamma")
        try:
            ok, wit = gamma_condition_check(m, args.t, args.gamma, cfg.constants)
            gamma_ok = ok
            norms = (wit.v_minus_norm, wit.v_zero_norm, wit.v_plus_norm)
        except ValueError:
            note = (note + "; " if note else "") + "matrix log undefined"
    row = [
        cell,
        weyl_index,
        pivot[0] if pivot else None,
        pivot[1] if pivot else None,
        note,
        gamma_ok,
        norms[0],
        norms[1],
        norms[2],
    ]
    header = [
        "bruhat_cell", "weyl_index", "pivot_row", "pivot_col", "note",
        "gamma_ok", "v_minus_norm", "v_zero_norm", "v_plus_norm",
    ]
    if cfg.output_format == "json":
        _emit_json(dict(zip(header, row)))
    else:
        _emit_csv(header, [row])
    return 0


_LEVEL_KEYS = [
    "j", "l", "parent_count", "child_count", "delta", "d",
    "epsilon0_final", "paper_faithful",
]


def _level_rows(levels) -> list:
    return [
        [
            lv.index, lv.l, len(lv.parents), len(lv.children),
            lv.delta, lv.diameter, lv.epsilon0, lv.paper_faithful,
        ]
        for lv in levels
    ]


def cmd_cantor(args, cfg: RunConfig) -> int:
    u0 = _parse_box(args.u0)
    schedule = [int(p) for p in args.schedule.split(",")]
    levels = cantor_build(
        u0,
        args.gamma,
        args.epsilon,
        args.K,
        schedule,
        cfg.flow,
        epsilon0=_parse_fraction(args.epsilon0),
        budget=cfg.budget,
    )
    bound = treelike_lower_bound(levels)
    rows = _level_rows(levels)
    if cfg.output_format == "json":
        _emit_json(
            {
                "levels": [dict(zip(_LEVEL_KEYS, r)) for r in rows],
                "treelike_lower_bound": bound,
            }
        )
    else:
        _emit_csv(_LEVEL_KEYS, rows)
    return 0


_LOWER_SCHEDULE = (6, 4096, 16777216)


def cmd_dimension(args, cfg: RunConfig) -> int:
    gamma = args.gamma
    upper = dim_upper_bound(gamma, cfg.flow)
    if upper == EMPTY_SET:
        obj = {
            "gamma": gamma,
            "empty_set": True,
            "upper": None,
            "full_space": None,
            "critical": {},
        }
        if cfg.output_format == "json":
            _emit_json(obj)
        else:
            _emit_csv(
                ["gamma", "empty_set", "upper", "full_space"],
                [[gamma, True, None, None]],
            )
        return 0
    families = [args.family] if args.family else [1, 2, 3, 4, 5]
    critical = {}
    for fam in families:
        try:
            critical[str(fam)] = critical_dimension(fam, gamma, cfg.flow)
        except ValueError:
            critical[str(fam)] = None
    obj = {
        "gamma": gamma,
        "empty_set": False,
        "upper": upper,
        "full_space": dim_full_space(gamma, cfg.flow),
        "critical": critical,
    }
    if args.lower:
        schedule = list(_LOWER_SCHEDULE[: args.depth])
        u0 = _parse_box(args.u0)
        levels = cantor_build(
            u0,
            gamma,
            DEFAULT_EPSILON,
            args.K,
            schedule,
            cfg.flow,
            epsilon0=_parse_fraction(args.epsilon0),
            budget=cfg.budget,
        )
        obj["lower"] = {
            "treelike": treelike_lower_bound(levels),
            "schedule": schedule,
            "gamma_eff": gamma + DEFAULT_EPSILON,
        }
    if cfg.output_format == "json":
        _emit_json(obj)
    else:
        header = ["gamma", "empty_set", "upper", "full_space"] + [
            f"critical_{f}" for f in families
        ]
        row = [gamma, False, upper, obj["full_space"]] + [
            critical[str(f)] for f in families
        ]
        if args.lower:
            header.append("lower_treelike")
            row.append(obj["lower"]["treelike"])
        _emit_csv(header, [row])
    return 0


def cmd_systole(args, cfg: RunConfig) -> int:
    m = _parse_matrix(args.matrix)
    kwargs = {"budget": cfg.budget} if cfg.budget else {}
    value = systole(m, **kwargs)
    if cfg.output_format == "json":
        _emit_json({"value": value})
    else:
        _emit_csv(["value"], [[value]])
    return 0


def cmd_injrad(args, cfg: RunConfig) -> int:
    m = _parse_matrix(args.matrix)
    kwargs = {"budget": cfg.budget} if cfg.budget else {}
    res = injectivity_radius(m, search_radius=args.radius, **kwargs)
    flat = [res.witness[i][j] for i in range(3) for j in range(3)]
    if cfg.output_format == "json":
        _emit_json(
            {
                "eta": res.eta,
                "gauge": res.gauge,
                "certified": res.certified,
                "rejected": res.rejected,
                "radius": res.radius,
                "witness": [list(r) for r in res.witness],
            }
        )
    else:
        header = ["eta", "gauge", "certified", "rejected", "radius"] + [
            f"w{i}{j}" for i in range(1, 4) for j in range(1, 4)
        ]
        _emit_csv(header, [[res.eta, res.gauge, res.certified, res.rejected, res.radius] + flat])
    return 0


def cmd_report(args, cfg: RunConfig) -> int:
    from . import report

    written = report.write_report(cfg, args.out_dir)
    for path in written:
        print(path)
    return 0


def _add_common_point_args(p) -> None:
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--tuple", help="canonical tuple a,b,p1,p2,q")
    group.add_argument("--coords", help="chart coordinates x12,x23,x13")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latlab",
        description="Exact and numerical experiments on the space of unimodular lattices",
    )
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--flow", help="flow parameters lambda1,lambda2,lambda3")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (default 0)")
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--budget", type=int, default=None, help="max enumeration nodes")
    parser.add_argument(
        "--threads", type=int, default=1,
        help="worker threads hint (orchestration itself is single-threaded)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denominator", help="canonical tuple and denominator of a point")
    _add_common_point_args(p)
    p.set_defaults(handler=cmd_denominator)

    p = sub.add_parser("count", help="band or family counts over doubling l")
    p.add_argument("--band", type=int, help="count the band [l/2, l] up to this l")
    p.add_argument("--family", choices=("E1", "E2", "E3"))
    p.add_argument("--max", type=int, help="largest l for --family")
    p.add_argument("--box", help="coordinate box lo1,hi1,lo2,hi2,lo3,hi3")
    p.add_argument("--K", type=float, default=None, help="ker-nu halfwidth filter")
    p.add_argument("--method", choices=("auto", "fast", "slow"), default="auto")
    p.add_argument("--list", action="store_true", help="list band points instead")
    p.set_defaults(handler=cmd_count)

    p = sub.add_parser("orbit", help="eta decay along the flow")
    _add_common_point_args(p)
    p.add_argument("--tmin", type=float, default=0.0)
    p.add_argument("--tmax", type=float, default=10.0)
    p.add_argument("--steps", type=int, default=21)
    p.add_argument("--radius", type=float, default=4.0)
    p.add_argument("--window", help="slope window lo,hi (json output only)")
    p.set_defaults(handler=cmd_orbit)

    p = sub.add_parser("classify", help="Bruhat cell, Weyl type, gamma bands")
    p.add_argument("--matrix", required=True, help="nine exact entries, row-major")
    p.add_argument("--t", type=float, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.set_defaults(handler=cmd_classify)

    p = sub.add_parser("cantor", help="build the tree-like collection")
    p.add_argument("--u0", default="1/5,7/10,1/5,7/10,1/5,7/10")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--K", type=float, default=0.8)
    p.add_argument("--schedule", default="6")
    p.add_argument("--epsilon0", default="1/2")
    p.set_defaults(handler=cmd_cantor)

    p = sub.add_parser("dimension", help="upper bounds and critical exponents")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--family", type=int, choices=(1, 2, 3, 4, 5))
    p.add_argument("--lower", action="store_true", help="also build the tree lower bound")
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--u0", default="1/5,7/10,1/5,7/10,1/5,7/10")
    p.add_argument("--K", type=float, default=0.8)
    p.add_argument("--epsilon0", default="1/2")
    p.set_defaults(handler=cmd_dimension)

    p = sub.add_parser("systole", help="shortest vector length of the lattice")
    p.add_argument("--matrix", required=True, help="nine entries, row-major")
    p.set_defaults(handler=cmd_systole)

    p = sub.add_parser("injrad", help="injectivity radius with witness")
    p.add_argument("--matrix", required=True, help="nine entries, row-major")
    p.add_argument("--radius", type=float, default=4.0)
    p.set_defaults(handler=cmd_injrad)

    p = sub.add_parser("report", help="write CSV tables and figures to a directory")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(handler=cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _build_config(args)
        return args.handler(args, cfg)
    except (EnumerationBudgetError, CountBudgetError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
