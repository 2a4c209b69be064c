"""Command-line interface: ``wsbmtest {test,simulate,limits,dichotomize,validate}``.

Exit codes: 0 computed, 2 input error, 3 numerical degeneracy, 4 a validation
check failed. ``WSBM_SEED`` and ``WSBM_THREADS`` override the seed and the
worker cap when the corresponding flag is not given.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .errors import (DegenerateDichotomyError, DomainError, EdgeListError, QuadratureError,
                     ZeroVarianceError)
from .graph import DUPLICATE_POLICIES, EdgeListOptions, read_edge_list
from .limits import classify_regime, information_loss, optimal_threshold_exponential, radius_weighted
from .families import BUILTIN_FAMILIES, get_family
from .simulation import CSV_COLUMNS, SimConfig, power_sweep, rows_to_csv
from .spectral import combined_spectral_statistic, spectral_statistic
from .statistics import (NORMAL, TW1, decide, dichotomized_slc_statistic, slc_statistic,
                         slmc_statistic)
from . import validation

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (tuple, np.ndarray)):
        return list(x)
    raise TypeError(type(x).__name__)


def _clean(x):
    # JSON has no nan/inf; emit null
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), default=_json_default, indent=2, allow_nan=False) + "\n"


def dump_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\r\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def dump_text(rows, columns, config=None) -> str:
    lines = []
    if config:
        lines.append("# " + " ".join(f"{k}={v}" for k, v in config.items()))
    lines.append("\t".join(columns))
    for row in rows:
        lines.append("\t".join(_fmt(row.get(c, "")) for c in columns))
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _floats(text: str, what: str) -> list[float]:
    try:
        vals = [float(t) for t in text.replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise InputError(f"{what}: cannot parse {text!r} as a comma-separated list of numbers")
    return vals


def _env_int(name: str):
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"environment variable {name}={raw!r} is not an integer")


def _resolve_seed_threads(args):
    seed = args.seed if args.seed is not None else _env_int("WSBM_SEED")
    threads = args.threads if args.threads is not None else _env_int("WSBM_THREADS")
    seed = 0 if seed is None else seed
    threads = 1 if threads is None else threads
    if threads < 1:
        raise InputError("--threads must be >= 1")
    return seed, threads


# ---------------------------------------------------------------------------
# test


def _graph_options(args) -> EdgeListOptions:
    return EdgeListOptions(index_base=args.index_base, duplicates=args.duplicates)


def run_test_statistics(g, stat: str, m: int, l: int, k: int, alpha: float, t0=None) -> list:
    """Evaluate the requested statistic(s) on ``g``; returns TestReports.

    ``stat="dslc"`` runs only the thresholded test; any other choice adds it
    when ``t0`` is given.
    """
    echo = dict(n=g.n, k=k)
    reports = []
    if stat == "all":
        for j in range(1, m + 1):
            reports.append(decide(slc_statistic(g, j, k), NORMAL, alpha, f"slc{j}", **echo, m=m, l=j))
        reports.append(decide(slmc_statistic(g, m, k), NORMAL, alpha, "slmc", **echo, m=m, l=None))
    elif stat == "slmc":
        reports.append(decide(slmc_statistic(g, m, k), NORMAL, alpha, "slmc", **echo, m=m, l=None))
    elif stat == "slc":
        reports.append(decide(slc_statistic(g, l, k), NORMAL, alpha, f"slc{l}", **echo, m=None, l=l))
    elif stat == "spectral":
        reports.append(decide(spectral_statistic(g, l), TW1, alpha, f"spectral{l}", **echo, m=None, l=l))
    elif stat == "spectral_combined":
        reports.append(decide(combined_spectral_statistic(g, m), TW1, alpha, "spectral_combined",
                              **echo, m=m, l=None, note="unstable: poor size control"))
    if t0 is not None:
        reports.append(decide(dichotomized_slc_statistic(g, t0, k), NORMAL, alpha, "dslc",
                              **echo, m=None, l=None, t0=t0))
    return reports


def cmd_test(args) -> int:
    if args.k < 3:
        raise InputError("--k must be >= 3")
    if args.m < 1 or args.l < 1:
        raise InputError("--m and --l must be >= 1")
    g = read_edge_list(args.graph, _graph_options(args))
    if args.stat == "dslc" and args.t0 is None:
        raise InputError("--stat dslc needs --t0")
    reports = run_test_statistics(g, args.stat, args.m, args.l, args.k, args.alpha, args.t0)
    rows = [r.to_dict() for r in reports]
    config = {"graph": str(args.graph), "n": g.n, "stat": args.stat, "m": args.m, "l": args.l,
              "k": args.k, "alpha": args.alpha, "t0": args.t0, "duplicates": args.duplicates,
              "index_base": args.index_base}
    columns = ["test", "n", "k", "m", "l", "t0", "statistic", "null", "critical", "p_value",
               "reject", "gamma", "note"]
    _emit(args.format, {"config": config, "reports": rows}, rows, columns, config)
    return EXIT_OK


def _emit(fmt, obj, rows, columns, config):
    if fmt == "json":
        sys.stdout.write(dump_json(obj))
    elif fmt == "csv":
        sys.stdout.write(dump_csv(rows, columns))
    else:
        sys.stdout.write(dump_text(rows, columns, config))


# ---------------------------------------------------------------------------
# simulate

_SIM_KEYS = {"n", "family", "lam", "eps", "k", "m", "tests", "reps", "alpha", "seed", "t0", "grid"}


def load_config(path: str) -> dict:
    """Flat ``key=value`` lines (``#`` comments) or a JSON object."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            cfg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: invalid JSON ({exc})")
    else:
        cfg = {}
        for num, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{num}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            cfg[key] = value
    unknown = set(cfg) - _SIM_KEYS
    if unknown:
        raise InputError(f"{path}: unknown config keys {sorted(unknown)}")
    return cfg


def _pair(value, what) -> tuple:
    if isinstance(value, str):
        vals = _floats(value, what)
    else:
        vals = [float(v) for v in value]
    if len(vals) != 2:
        raise InputError(f"{what} needs two numbers, got {vals}")
    return tuple(vals)


def _tests(value) -> tuple:
    if isinstance(value, str):
        return tuple(t for t in value.replace(";", ",").split(",") if t.strip())
    return tuple(value)


def _grid(value) -> list:
    """``"n:e1:e2;n:e1:e2"`` or a JSON list of ``[n, e1, e2]``."""
    cells = []
    items = value.split(";") if isinstance(value, str) else value
    for item in items:
        parts = item.split(":") if isinstance(item, str) else list(item)
        parts = [p for p in parts if str(p).strip() != ""]
        if len(parts) != 3:
            raise InputError(f"grid cell {item!r} must be n:eps1:eps2")
        try:
            cells.append((int(parts[0]), (float(parts[1]), float(parts[2]))))
        except ValueError:
            raise InputError(f"grid cell {item!r} is not numeric")
    if not cells:
        raise InputError("empty grid")
    return cells


def resolve_sim_config(args) -> tuple[SimConfig, list]:
    raw = load_config(args.config) if args.config else {}
    for key in ("n", "family", "lam", "eps", "k", "m", "tests", "reps", "alpha", "t0", "grid"):
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    seed, _ = _resolve_seed_threads(args)
    if args.seed is None and os.environ.get("WSBM_SEED") in (None, "") and "seed" in raw:
        seed = int(raw["seed"])
    try:
        grid = _grid(raw["grid"]) if "grid" in raw else None
        n = int(raw["n"]) if "n" in raw else (grid[0][0] if grid else 300)
        kwargs = dict(n=n, family=str(raw.get("family", "normal")), seed=seed,
                      k=int(raw.get("k", 3)), m=int(raw.get("m", 2)),
                      reps=int(raw.get("reps", 500)), alpha=float(raw.get("alpha", 0.05)))
        if "lam" in raw:
            kwargs["lam"] = _pair(raw["lam"], "lam")
        else:
            kwargs["lam"] = {"normal": (0.0, 1.0), "gamma": (4.0, 28.0),
                             "mixture": (3.6, 36.0)}.get(kwargs["family"], (0.0, 1.0))
        kwargs["eps"] = _pair(raw["eps"], "eps") if "eps" in raw else (0.0, 0.0)
        if "tests" in raw:
            kwargs["tests"] = _tests(raw["tests"])
        if raw.get("t0") not in (None, ""):
            kwargs["t0"] = float(raw["t0"])
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad simulation config: {exc}")
    cfg = SimConfig(**kwargs)
    if grid is None:
        grid = [(cfg.n, cfg.eps)]
    return cfg, grid


def cmd_simulate(args) -> int:
    cfg, grid = resolve_sim_config(args)
    _, threads = _resolve_seed_threads(args)
    rows = power_sweep(cfg, grid, workers=threads, progress=args.progress)
    if args.format == "csv":
        text = rows_to_csv(rows)
    elif args.format == "json":
        base = {k: v for k, v in vars_config(cfg).items() if k not in ("n", "eps")}
        text = dump_json({"config": base, "grid": [[n, list(e)] for n, e in grid], "rows": rows})
    else:
        text = dump_text(rows, CSV_COLUMNS)
    _write(text, args.output)
    return EXIT_OK


def vars_config(cfg: SimConfig) -> dict:
    return {"n": cfg.n, "family": cfg.family, "lam": list(cfg.lam), "eps": list(cfg.eps),
            "k": cfg.k, "m": cfg.m, "tests": list(cfg.tests), "reps": cfg.reps,
            "alpha": cfg.alpha, "seed": cfg.seed, "t0": cfg.t0}


def _write(text: str, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# limits and dichotomize

LIMIT_COLUMNS = ["d1", "d2", "weighted_radius", "dichotomized_radius", "ratio",
                 "regime_weighted", "regime_dichotomized"]


def limit_rows(family: str, tau, d1_grid, d2_grid=None, t0=None) -> list[dict]:
    fam = get_family(family)
    tau = np.asarray(tau, dtype=float)
    if tau.size != fam.dim:
        raise InputError(f"family {family} needs {fam.dim} tau value(s), got {tau.size}")
    if not len(d1_grid):
        raise InputError("the d grid is empty")
    if fam.dim == 1:
        cells = [(d1, None) for d1 in d1_grid]
    else:
        if not d2_grid:
            raise InputError(f"family {family} needs --d2-grid")
        cells = [(d1, d2) for d1 in d1_grid for d2 in d2_grid]
    fam._theta(tau)
    rows = []
    for d1, d2 in cells:
        d = [d1] if d2 is None else [d1, d2]
        w = radius_weighted(fam, tau, d)
        row = {"d1": d1, "d2": "" if d2 is None else d2, "weighted_radius": w,
               "regime_weighted": classify_regime(w).regime,
               "dichotomized_radius": "", "ratio": "", "regime_dichotomized": ""}
        if t0 is not None:
            loss = information_loss(fam, tau, d, t0)
            row.update(dichotomized_radius=loss.dichotomized_radius, ratio=loss.ratio,
                       regime_dichotomized=classify_regime(loss.dichotomized_radius).regime)
        rows.append(row)
    return rows


def cmd_limits(args) -> int:
    tau = _floats(args.tau, "--tau")
    d1 = _floats(args.d_grid, "--d-grid")
    d2 = _floats(args.d2_grid, "--d2-grid") if args.d2_grid else None
    rows = limit_rows(args.family, tau, d1, d2, args.t0)
    config = {"family": args.family, "tau": tau, "t0": args.t0}
    _emit(args.format, {"config": config, "rows": rows}, rows, LIMIT_COLUMNS, config)
    return EXIT_OK


def cmd_dichotomize(args) -> int:
    if args.family != "exponential":
        raise InputError("the optimal threshold is available for the exponential family only")
    t0, loss = optimal_threshold_exponential(args.tau)
    row = {"family": args.family, "tau": args.tau, "t0_star": t0, "x_star": t0 * args.tau,
           "loss_factor": loss}
    columns = list(row)
    _emit(args.format, row, [row], columns, None)
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate


def cmd_validate(args) -> int:
    seed, threads = _resolve_seed_threads(args)
    opts = dict(seed=seed, workers=threads)
    if args.suite == "real-data":
        if not args.graph:
            raise InputError("--suite real-data needs --graph")
        report = validation.real_data_suite(args.graph, index_base=args.index_base)
    elif args.suite == "null-calibration":
        report = validation.null_calibration_suite(reps=args.reps, slow=args.slow, **opts)
    else:
        report = getattr(validation, args.suite.replace("-", "_") + "_suite")(seed=seed)
    columns = ["check", "value", "expected", "tolerance", "passed"]
    rows = report["checks"]
    if args.format == "json":
        sys.stdout.write(dump_json(report))
    elif args.format == "csv":
        sys.stdout.write(dump_csv(rows, columns))
    else:
        out = [f"# suite={report['suite']} " + " ".join(f"{k}={v}" for k, v in report["config"].items())]
        for c in rows:
            status = "PASS" if c["passed"] else "FAIL"
            out.append(f"{status} {c['check']}: value={_fmt(c['value'])} expected={_fmt(c['expected'])}"
                       f" tol={_fmt(c['tolerance'])}")
        if report.get("note"):
            out.append(f"# {report['note']}")
        sys.stdout.write("\n".join(out) + "\n")
    return EXIT_OK if report["passed"] else EXIT_CHECK


# ---------------------------------------------------------------------------
# parser


def _add_common(p, seed=False):
    p.add_argument("--format", choices=("json", "csv", "text"), default="text")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="RNG seed (env WSBM_SEED)")
        p.add_argument("--threads", type=int, default=None,
                       help="worker cap; never changes results (env WSBM_THREADS)")


def _add_graph_options(p):
    p.add_argument("--index-base", type=int, default=1, choices=(0, 1))
    p.add_argument("--duplicates", choices=DUPLICATE_POLICIES, default="sum",
                   help="how repeated pairs combine (default: sum)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wsbmtest",
                                     description="Community-structure tests for weighted block models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run test statistics on an edge-list file")
    p.add_argument("graph", help="edge list: 'i j w' per line")
    p.add_argument("--stat", choices=("slmc", "slc", "spectral", "spectral_combined", "dslc", "all"),
                   default="all")
    p.add_argument("--m", type=int, default=2, help="moments combined by slmc")
    p.add_argument("--l", type=int, default=1, help="moment used by slc/spectral")
    p.add_argument("--k", type=int, default=3, help="cycle length")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--t0", type=float, default=None, help="also run the thresholded test at t0")
    _add_graph_options(p)
    _add_common(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="Monte-Carlo size/power experiment")
    p.add_argument("--config", help="key=value or JSON file; flags override it")
    p.add_argument("--n", type=int)
    p.add_argument("--family", choices=("normal", "gamma", "mixture"))
    p.add_argument("--lam", help="lam1,lam2")
    p.add_argument("--eps", help="eps1,eps2")
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--tests", help="comma list of slmc, slc<l>, spectral<l>, spectral_combined, dslc")
    p.add_argument("--reps", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--t0", type=float)
    p.add_argument("--grid", help="cells 'n:eps1:eps2;n:eps1:eps2'")
    p.add_argument("--output", "-o", help="write here instead of stdout")
    p.add_argument("--progress", action="store_true", help="progress lines on stderr")
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("limits", help="detection-radius phase grid")
    p.add_argument("--family", choices=sorted(BUILTIN_FAMILIES), default="exponential")
    p.add_argument("--tau", required=True, help="null natural parameter (comma list for normal)")
    p.add_argument("--d-grid", required=True, help="comma list of d (or d1) values")
    p.add_argument("--d2-grid", help="comma list of d2 values (two-parameter families)")
    p.add_argument("--t0", type=float, help="threshold for the dichotomized columns")
    _add_common(p)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("dichotomize", help="loss-minimizing threshold")
    p.add_argument("--family", default="exponential")
    p.add_argument("--tau", type=float, required=True)
    _add_common(p)
    p.set_defaults(func=cmd_dichotomize)

    p = sub.add_parser("validate", help="run an oracle suite")
    p.add_argument("--suite", required=True, choices=validation.SUITES)
    p.add_argument("--reps", type=int, default=None, help="replicates for null-calibration")
    p.add_argument("--slow", action="store_true", help="full-size null-calibration run")
    p.add_argument("--graph", help="edge list for the real-data suite")
    p.add_argument("--index-base", type=int, default=1, choices=(0, 1))
    _add_common(p, seed=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)   # exits with 2 on usage errors
    try:
        return args.func(args)
    except (ZeroVarianceError, DegenerateDichotomyError, QuadratureError, OverflowError) as exc:
        print(f"wsbmtest: numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, EdgeListError, DomainError, ValueError, OSError) as exc:
        print(f"wsbmtest: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
