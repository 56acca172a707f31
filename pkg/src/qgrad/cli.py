"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 resource guard.
Configuration comes from an optional flat ``key = value`` file (or the JSON
manifest of an earlier run); command-line flags override it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__, bounds, numerics, verify
from .functions import TestFunctionInstance, catalog, linear_function, zero_function
from .grid import ResourceGuardError
from .oracle import CostModel, query_cost
from .qge import AlgorithmParams, clamp_sigma, derive_constants, estimate_success_probability, naive_gradient, run_qge

EXIT_OK, EXIT_USAGE, EXIT_VERIFY, EXIT_GUARD = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# output helpers


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def write_json(path: Path, payload) -> None:
    atomic_write(path, json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _finite(x: float):
    """JSON-safe number; infinities become the string sentinels ``"inf"``/``"-inf"``."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


# ---------------------------------------------------------------------------
# configuration


def read_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    text = Path(path).read_text()
    if path.endswith(".json"):
        data = json.loads(text)
        return {k: str(v) for k, v in data.get("config", data).items() if v is not None}
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


RUN_DEFAULTS = {
    "function": "test",
    "d": "1",
    "c": "1",
    "sigma": "0.5",
    "p": "inf",
    "eps": "0.1",
    "amplitude": "0.005",
    "signs": "",
    "slope": "",
    "cost_model": "exact",
    "aggregate": "median",
    "perturb": "false",
    "workers": "1",
}


def _merged(args, defaults: dict[str, str]) -> dict[str, str]:
    cfg = dict(defaults)
    cfg.update(read_config(getattr(args, "config", None)))
    for key in list(defaults) + ["seed", "trials", "exact"]:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = str(value)
    unknown = set(cfg) - set(defaults) - {"seed", "trials", "exact"}
    if unknown:
        raise UsageError(f"unknown configuration keys: {sorted(unknown)}")
    return cfg


def _float(s: str) -> float:
    return math.inf if s.strip().lower() in ("inf", "infinity") else float(s)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off", ""):
        return False
    raise UsageError(f"not a boolean: {s!r}")


def _ints(s: str) -> list[int]:
    return [int(t) for t in s.replace(",", " ").split()]


def _floats(s: str) -> list[float]:
    return [_float(t) for t in s.replace(",", " ").split()]


def _require_seed(cfg: dict) -> int:
    if "seed" not in cfg:
        raise UsageError("a master seed is required (--seed or 'seed' in the config)")
    return int(cfg["seed"])


def build_problem(cfg: dict):
    """Objective and algorithm parameters described by a run configuration."""
    d, c = int(cfg["d"]), _float(cfg["c"])
    name = cfg["function"]
    if name == "test":
        signs = tuple(_ints(cfg["signs"])) if cfg["signs"] else (1,) * d
        f = TestFunctionInstance(d, c, _float(cfg["amplitude"]), signs).as_objective()
    elif name == "zero":
        f = zero_function(d)
    elif name == "linear":
        slope = _floats(cfg["slope"]) if cfg["slope"] else [0.0] * d
        if len(slope) != d:
            raise UsageError(f"slope has {len(slope)} entries, d={d}")
        f = linear_function(slope, c=c)
    else:
        table = catalog(c)
        if name not in table:
            raise UsageError(f"unknown function {name!r}; choose test, zero, linear or one of {sorted(table)}")
        if d != 1:
            raise UsageError("catalogue functions are one-dimensional")
        f = table[name]
    sigma = clamp_sigma(_float(cfg["sigma"]))
    params = AlgorithmParams(sigma, c, _float(cfg["p"]), d, _float(cfg["eps"]))
    return f, params


def _manifest(argv, cfg, seed, started, ledger, outputs) -> dict:
    return {
        "command": argv,
        "config": cfg,
        "seed": seed,
        "version": __version__,
        "wall_time_seconds": time.time() - started,
        "ledger": ledger,
        "outputs": sorted(outputs),
    }


# ---------------------------------------------------------------------------
# commands


def cmd_coeffs(args, argv) -> int:
    if args.m < 1:
        raise UsageError("m must be >= 1")
    scheme = numerics.make_scheme(args.m)
    header = ["ell", "numerator", "denominator", "value"]
    moments = []
    if args.moments:
        moments = [numerics.moment_sum(scheme, k) for k in range(args.moments + 1)]
        header += [f"moment_{k}" for k in range(args.moments + 1)]
    rows = []
    for i, (ell, a) in enumerate(scheme.items()):
        row = [ell, a.numerator, a.denominator, float(a)]
        if moments:
            # exact moments are repeated on every row as "num/den"
            row += [str(mk) for mk in moments]
        rows.append(row)
    text = csv_text(header, rows)
    if args.output:
        atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _smoothing_function(name: str, c: float):
    if name == "sin":
        from .functions import ObjectiveFunction

        return ObjectiveFunction(
            evaluate=lambda x: np.sin(c * np.asarray(x)[..., 0]),
            dimension=1, declared_c=c, declared_sigma=0.0,
            reference_gradient_at_origin=np.array([c]), name="sin",
        )
    table = catalog(c)
    if name not in table:
        raise UsageError(f"unknown function {name!r}; choose sin or one of {sorted(table)}")
    return table[name]


def cmd_smooth_plot(args, argv) -> int:
    f = _smoothing_function(args.function, args.c)
    ms = _ints(args.m)
    if not ms or min(ms) < 1:
        raise UsageError("m values must be >= 1")
    if args.samples < 1:
        raise UsageError("samples must be >= 1")
    x = np.linspace(args.xmin, args.xmax, args.samples)
    pts = x[:, None]
    f0 = float(f.evaluate(np.zeros(1)))
    slope = float(f.reference_gradient_at_origin[0])
    cols = [x, f.evaluate(pts)]
    header = ["x", "f"]
    smooth = {m: numerics.smoothing_eval(f, numerics.make_scheme(m), pts) for m in ms}
    for m in ms:
        header.append(f"f_{2 * m}")
        cols.append(smooth[m])
    for m in ms:
        header.append(f"defect_{2 * m}")
        cols.append(np.abs(smooth[m] - f0 - slope * x))
    rows = list(zip(*cols))
    if not all(np.isfinite(c).all() for c in cols):
        raise UsageError("non-finite values; the range leaves the function's domain")
    atomic_write(args.output, csv_text(header, rows))
    return EXIT_OK


def cmd_run(args, argv) -> int:
    started = time.time()
    cfg = _merged(args, RUN_DEFAULTS)
    seed = _require_seed(cfg)
    f, params = build_problem(cfg)
    res = run_qge(
        f, params, seed,
        cost_model=CostModel(cfg["cost_model"]),
        how=cfg["aggregate"],
        perturb=_bool(cfg["perturb"]),
        workers=int(cfg["workers"]),
    )
    out = Path(args.output)
    files = {"estimate.csv", "per_loop.csv", "constants.json", "manifest.json"}
    atomic_write(out / "estimate.csv", csv_text([f"g{j + 1}" for j in range(params.d)], [res.estimate]))
    atomic_write(out / "per_loop.csv", csv_text(["loop"] + [f"g{j + 1}" for j in range(params.d)],
                                                 ([i, *row] for i, row in enumerate(res.per_loop_estimates))))
    write_json(out / "constants.json", res.constants.as_dict())
    write_json(out / "manifest.json", _manifest(argv, cfg, seed, started, res.ledger.as_dict(), files))
    print(json.dumps({"estimate": res.estimate.tolist(), **res.ledger.as_dict()}))
    return EXIT_OK


def cmd_success_prob(args, argv) -> int:
    started = time.time()
    cfg = _merged(args, RUN_DEFAULTS)
    seed = _require_seed(cfg)
    trials = int(cfg.get("trials", "100"))
    exact = _bool(cfg.get("exact", "false"))
    f, params = build_problem(cfg)
    totals = {"base_calls": 0, "smoothing_calls": 0, "runs": 0}

    def tally(res):
        totals["base_calls"] += res.ledger.base_calls
        totals["smoothing_calls"] += res.ledger.smoothing_calls
        totals["runs"] += 1

    est = estimate_success_probability(
        f, params, trials, seed, exact=exact,
        cost_model=CostModel(cfg["cost_model"]), how=cfg["aggregate"], on_run=tally,
    )
    report = {
        "successes": est.successes,
        "trials": est.trials,
        "fraction": None if est.trials == 0 else est.fraction,
        "wilson_low": est.low,
        "wilson_high": est.high,
        "exact_probability": est.exact,
        "per_loop_probability": est.per_loop,
    }
    out = Path(args.output)
    write_json(out / "success.json", report)
    write_json(out / "manifest.json", _manifest(argv, cfg, seed, started, totals, {"success.json", "manifest.json"}))
    print(json.dumps(report))
    return EXIT_OK


def cmd_sweep(args, argv) -> int:
    model = CostModel(args.cost_model)
    rows = []
    for d in _ints(args.dims):
        for eps in sorted(_floats(args.eps), reverse=True):
            params = AlgorithmParams(args.sigma, args.c, _float(args.p), d, eps)
            dc = derive_constants(params)
            total = dc.N * dc.S * query_cost(dc.m, dc.delta, model)
            _, naive = naive_gradient(zero_function(d), eps, args.c, args.sigma)
            rep = bounds.lower_bound_general(d, args.c, eps, _float(args.p), args.P, check_range=False)
            rows.append([d, eps, dc.m, dc.S, dc.n, dc.N, total, naive, total / naive,
                         rep.bound_value, rep.N_boost, rep.in_range])
    header = ["d", "eps", "m", "S", "n", "N", "queries", "naive_evaluations", "ratio",
              "lower_bound", "N_boost", "bound_in_range"]
    atomic_write(args.output, csv_text(header, rows))
    return EXIT_OK


def cmd_bounds(args, argv) -> int:
    p = _float(args.p)
    report: dict = {"d": args.d, "c": args.c, "eps": args.eps, "p": _finite(p), "P": args.P}
    try:
        report["lower_bound_p1"] = bounds.lower_bound_p1(args.d, args.c, args.eps)
    except ValueError as exc:
        report["lower_bound_p1"] = None
        report["lower_bound_p1_error"] = str(exc)
    report["lower_bound_general"] = bounds.lower_bound_general(args.d, args.c, args.eps, p, args.P).as_dict()
    if args.samples:
        if args.seed is None:
            raise UsageError("--seed is required when sampling the oracle distance")
        rng = np.random.default_rng(args.seed)
        bstar = rng.choice((-1, 1), size=args.d)
        x = rng.uniform(-2 * math.pi / args.c, 2 * math.pi / args.c, size=(args.samples, args.d))
        sup = bounds.oracle_distance_sup(bstar, args.c, args.eps, args.d, x)
        limit = bounds.oracle_distance_limit(args.c, args.eps, args.d)
        report["oracle_distance"] = {
            "bstar": bstar.tolist(), "samples": args.samples, "seed": args.seed,
            "sup": sup, "limit": limit, "within_limit": sup <= limit + 1e-12,
        }
    text = json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n"
    if args.output:
        atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
    if args.samples and not report["oracle_distance"]["within_limit"]:
        return EXIT_VERIFY
    return EXIT_OK


def cmd_verify(args, argv) -> int:
    results = verify.run_suite(args.level, corrupt_coefficients=args.corrupt_coefficients)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY if failed else EXIT_OK


# ---------------------------------------------------------------------------


def _add_run_options(sp):
    sp.add_argument("--config", help="key = value file or a manifest.json from an earlier run")
    sp.add_argument("--seed", type=int, help="master seed (required)")
    sp.add_argument("--function", help="test, zero, linear or a catalogue name")
    sp.add_argument("--d", type=int)
    sp.add_argument("--c", type=float)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--p", help="norm order, a number >= 1 or inf")
    sp.add_argument("--eps", type=float, help="target precision of the estimate")
    sp.add_argument("--amplitude", type=float, help="eps parameter of the test function")
    sp.add_argument("--signs", help="sign vector of the test function, e.g. 1,-1")
    sp.add_argument("--slope", help="slope vector of the linear function")
    sp.add_argument("--cost-model", dest="cost_model", choices=[m.value for m in CostModel])
    agg = sp.add_mutually_exclusive_group()
    agg.add_argument("--median", dest="aggregate", action="store_const", const="median")
    agg.add_argument("--mean", dest="aggregate", action="store_const", const="mean")
    sp.add_argument("--perturb", action="store_const", const="true", help="add oracle phase noise")
    sp.add_argument("--workers", type=int)
    sp.add_argument("--output", required=True, help="output directory")


def make_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qgrad", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("coeffs", help="central difference coefficients as CSV")
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--moments", type=int, default=0, help="append exact moment sums up to this order")
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_coeffs)

    sp = sub.add_parser("smooth-plot", help="a function and its smoothings on a line")
    sp.add_argument("--function", default="sin")
    sp.add_argument("--c", type=float, default=1.0)
    sp.add_argument("--m", default="1,2,3", help="comma-separated scheme orders")
    sp.add_argument("--xmin", type=float, default=-2 * math.pi)
    sp.add_argument("--xmax", type=float, default=2 * math.pi)
    sp.add_argument("--samples", type=int, default=401)
    sp.add_argument("--output", required=True)
    sp.set_defaults(func=cmd_smooth_plot)

    sp = sub.add_parser("run", help="one seeded gradient estimate")
    _add_run_options(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("success-prob", help="success frequency over seeded runs")
    _add_run_options(sp)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--exact", action="store_const", const="true", help="integrate the d=1 distribution")
    sp.set_defaults(func=cmd_success_prob)

    sp = sub.add_parser("sweep", help="query counts against the classical baseline and lower bounds")
    sp.add_argument("--dims", default="1,2,3")
    sp.add_argument("--eps", default="0.4,0.2,0.1")
    sp.add_argument("--c", type=float, default=1.0)
    sp.add_argument("--sigma", type=float, default=0.5)
    sp.add_argument("--p", default="inf")
    sp.add_argument("--P", type=float, default=17 / 18, help="success probability for the bound")
    sp.add_argument("--cost-model", dest="cost_model", default="paper", choices=[m.value for m in CostModel])
    sp.add_argument("--output", required=True)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("bounds", help="lower-bound formulas and an oracle-distance check")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--c", type=float, required=True)
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--p", default="1")
    sp.add_argument("--P", type=float, default=17 / 18)
    sp.add_argument("--samples", type=int, default=0)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--output")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("verify", help="run the invariant suites")
    sp.add_argument("--level", choices=["fast", "full"], default="fast")
    sp.add_argument("--corrupt-coefficients", action="store_true", help=argparse.SUPPRESS)
    sp.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = make_parser().parse_args(argv)
    try:
        return args.func(args, ["qgrad", *argv])
    except ResourceGuardError as exc:
        print(f"qgrad: resource guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (UsageError, ValueError, OSError) as exc:
        print(f"qgrad: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
