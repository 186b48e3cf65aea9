"""Command-line interface.

Every command prints one JSON document on stdout.  Exit codes: 0 success,
1 a reproduction target missed, 2 invalid input, 3 request beyond the
evaluator's capability, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from typing import Any, Sequence

import numpy as np

from . import __version__
from .dist_core import PiecewiseDistribution
from .errors import AuctionLabError, CapabilityError, ValidationError

EXIT_MISS, EXIT_INVALID, EXIT_CAPABILITY, EXIT_USAGE = 1, 2, 3, 64

FAMILIES = ("regular", "mhr", "quasi-regular", "quasi-mhr")
MECHANISM_NAMES = ("bom", "boup", "bour", "bosp", "ip", "spa-dup1", "all")
DC_MODES = ("eager", "lazy", "adaptive", "dup-vcg", "bom", "all")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 by default; 2 means invalid input here
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


# -- I/O ---------------------------------------------------------------------------


def jsonable(x: Any) -> Any:
    """Replace non-finite floats with strings and numpy scalars with Python ones."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def dump(obj: Any) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False)


def _read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path} is not valid JSON: {exc}") from exc


def parse_buyers(obj: Any) -> list[PiecewiseDistribution]:
    """Buyer list of an instance file; an entry may carry ``"count"`` for repeats."""
    if isinstance(obj, dict) and "buyers" in obj:
        obj = obj["buyers"]
    if not isinstance(obj, list) or not obj:
        raise ValidationError("instance needs a non-empty 'buyers' list")
    out: list[PiecewiseDistribution] = []
    for entry in obj:
        if not isinstance(entry, dict):
            raise ValidationError("each buyer must be a JSON object")
        count = entry.get("count", 1)
        if not isinstance(count, int) or count < 1:
            raise ValidationError("buyer 'count' must be a positive integer")
        d = PiecewiseDistribution.from_json({k: v for k, v in entry.items() if k != "count"})
        out.extend([d] * count)
    return out


def load_instance(path: str) -> tuple[list[PiecewiseDistribution], dict | None]:
    obj = _read_json(path)
    env = obj.get("environment") if isinstance(obj, dict) else None
    return parse_buyers(obj), env


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


def _need_seed(args, why: str):
    if args.seed is None:
        raise UsageError(f"--seed is required {why}")


# -- commands ----------------------------------------------------------------------


def cmd_eval(args) -> tuple[Any, int]:
    from . import mechanisms as M
    dists, _ = load_instance(args.instance)
    names = [n for n in MECHANISM_NAMES if n != "all"] if args.mechanism == "all" else [args.mechanism]
    if args.mc and any(n in ("bom", "ip") for n in names):
        _need_seed(args, "with --mc")
    reports = []
    for name in names:
        if name == "bom":
            r = M.bom_revenue(dists, args.mc, args.seed or 0, args.grid)
        elif name == "ip":
            r = M.identity_pricing_revenue(dists, args.mc, args.seed or 0)
        elif name == "bosp":
            try:
                r = M.bosp_revenue(dists)
            except CapabilityError:
                if args.mechanism != "all":
                    raise
                continue
        else:
            r = M.MECHANISMS[name](dists)
        reports.append(r.to_json())
    return (reports[0] if len(reports) == 1 else {"reports": reports}), 0


def cmd_eval_dc(args) -> tuple[Any, int]:
    from . import downward_closed as dc
    dists, env_obj = load_instance(args.instance)
    if args.env:
        env_obj = _read_json(args.env)
    if env_obj is None:
        raise ValidationError("no environment: pass --env or add 'environment' to the instance")
    env = dc.environment_from_json(env_obj)
    _need_seed(args, "for Monte Carlo evaluation")
    mc = args.mc or 100_000
    modes = ["eager", "lazy", "adaptive", "dup-vcg", "bom"] if args.mode == "all" else [args.mode]
    out = []
    for mode in modes:
        if mode == "bom":
            r = dc.bom_downward_closed(env, dists, mc, args.seed, args.grid)
        elif mode == "dup-vcg":
            r = dc.n_duplicate_vcg(env, dists, mc, args.seed)
        else:
            r = dc.monopoly_reserves_revenue(env, dists, mode, mc, args.seed)
        out.append(r.to_json())
    return (out[0] if len(out) == 1 else {"reports": out}), 0


def cmd_check_family(args) -> tuple[Any, int]:
    from .family import check
    dists, _ = load_instance(args.instance)
    fams = FAMILIES if args.family == "all" else (args.family,)
    seen: dict[PiecewiseDistribution, int] = {}
    for i, d in enumerate(dists):
        seen.setdefault(d, i)
    out = []
    for d, i in seen.items():
        out.append({"buyer": i, "reports": [check(d, f, args.grid).to_json() for f in fams]})
    return {"buyers": out}, 0


def cmd_order_stat(args) -> tuple[Any, int]:
    from .family import check
    from .order_stats import order_statistic
    dists, _ = load_instance(args.instance)
    gd = order_statistic(dists, args.k, grid_size=args.grid)
    out: dict[str, Any] = {"k": args.k, "n": len(dists), "grid_points": len(gd.grid),
                           "support_inf": gd.support_inf}
    if args.check:
        fams = FAMILIES if args.check == "all" else (args.check,)
        out["reports"] = [check(gd, f, args.grid).to_json() for f in fams]
    if args.emit_csv:
        write_csv(args.emit_csv, ["v", "cdf", "cdf_left"],
                  zip(gd.grid, gd.cdf_values, gd.left_limits))
    return out, 0


def _m_grid(m: int) -> list[int]:
    grid = [10**k for k in range(2, 12) if 10**k < m]
    return grid + [m]


def cmd_learn(args) -> tuple[Any, int]:
    from .learning import convergence_experiment
    dists, _ = load_instance(args.instance)
    _need_seed(args, "for sampling")
    m = args.m or 100_000
    grid = [m] if args.single else _m_grid(m)
    tab = convergence_experiment(dists, grid, args.epsilon, args.trials, args.seed,
                                 myerson=args.myerson)
    if args.emit_csv:
        keys = list(tab.rows[0].keys())
        write_csv(args.emit_csv, keys, [[r.get(k) for k in keys] for r in tab.rows])
    return tab.to_json(), 0


def cmd_prophet(args) -> tuple[Any, int]:
    import warnings
    from .prophet import competitive_ratio
    dists, _ = load_instance(args.instance)
    if len(set(dists)) != 1:
        raise ValidationError("prophet needs a single (i.i.d.) cost distribution")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        run = competitive_ratio(dists[0], args.n)
    out = run.to_json()
    out["warnings"] = [str(w.message) for w in caught]
    if args.emit_csv:
        write_csv(args.emit_csv, ["round", "threshold"],
                  [(i + 1, t) for i, t in enumerate(run.thresholds)])
    return out, 0


def cmd_reproduce(args) -> tuple[Any, int]:
    from . import reproduce as R
    t = args.target
    if t == "ratios":
        rows = R.ratios()
    elif t == "hierarchy":
        rows = R.hierarchy(args.seed or 0, args.trials or 500, args.grid)
    elif t == "closure":
        _need_seed(args, "for the closure fuzz suite")
        rows = R.closure(args.seed, args.trials or 100, args.grid)
    elif t == "downward":
        _need_seed(args, "for Monte Carlo")
        ms = tuple(args.m_list) if args.m_list else (512, 2048, 8192)
        rows = R.downward(args.seed, ms, args.mc or 2000,
                          random_count=100 if args.trials is None else args.trials)
    else:
        rows = R.prophet()
    if args.emit_csv:
        write_csv(args.emit_csv, ["name", "value", "target", "passed"],
                  [(r.name, json.dumps(jsonable(r.value)), json.dumps(jsonable(r.target)),
                    r.passed) for r in rows])
    ok = all(r.passed for r in rows)
    return {"target": t, "passed": ok, "rows": [r.to_json() for r in rows]}, (0 if ok else EXIT_MISS)


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="auctionlab", description="Simple-mechanism revenue analysis.")
    p.add_argument("--version", action="version", version=f"auctionlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, instance=True):
        if instance:
            sp.add_argument("--instance", required=True, help="instance JSON file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--grid", type=int, default=4096, help="quantile grid size")
        sp.add_argument("--emit-csv", dest="emit_csv", default=None, metavar="PATH")

    sp = sub.add_parser("eval", help="single-item mechanism revenue")
    common(sp)
    sp.add_argument("--mechanism", choices=MECHANISM_NAMES, required=True)
    sp.add_argument("--mc", type=int, default=0, help="Monte Carlo samples (0 = exact)")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("eval-dc", help="downward-closed mechanism revenue")
    common(sp)
    sp.add_argument("--env", default=None, help="environment JSON file")
    sp.add_argument("--mode", choices=DC_MODES, required=True)
    sp.add_argument("--mc", type=int, default=0)
    sp.set_defaults(func=cmd_eval_dc)

    sp = sub.add_parser("check-family", help="distribution family membership")
    common(sp)
    sp.add_argument("--family", choices=FAMILIES + ("all",), default="all")
    sp.set_defaults(func=cmd_check_family)

    sp = sub.add_parser("order-stat", help="k-th order statistic and family checks")
    common(sp)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--check", choices=FAMILIES + ("all",), default=None)
    sp.set_defaults(func=cmd_order_stat)

    sp = sub.add_parser("learn", help="sample-based learners")
    common(sp)
    sp.add_argument("--m", type=int, default=None, help="largest sample size")
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--single", action="store_true", help="only run at --m")
    sp.add_argument("--myerson", action="store_true", help="also run empirical Myerson")
    sp.set_defaults(func=cmd_learn)

    sp = sub.add_parser("prophet", help="cost prophet inequality")
    common(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.set_defaults(func=cmd_prophet)

    sp = sub.add_parser("reproduce", help="recompute the canonical constants")
    sp.add_argument("target", choices=("ratios", "hierarchy", "closure", "downward", "prophet"))
    common(sp, instance=False)
    sp.add_argument("--mc", type=int, default=None)
    sp.add_argument("--trials", type=int, default=None, help="random instance count")
    sp.add_argument("--m", dest="m_list", type=int, nargs="+", default=None)
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        out, code = args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"auctionlab: error: {exc}\n")
        return EXIT_USAGE
    except CapabilityError as exc:
        sys.stderr.write(dump({"error": "capability", "message": str(exc)}) + "\n")
        return EXIT_CAPABILITY
    except AuctionLabError as exc:
        sys.stderr.write(dump({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_INVALID
    sys.stdout.write(dump(out) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
