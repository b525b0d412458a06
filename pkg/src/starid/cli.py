"""Command-line front end.

Commands:

``compute``   metric between a truth and an estimate trajectory file
``sweep``     Monte-Carlo metric series of a scenario over a cutoff axis
``scenario``  generate truth, measurements and estimates for a scenario
``axioms``    randomized axiom checks with pass/fail counts

Exit codes: 0 success, 1 failed axiom checks, 2 bad input or usage,
3 dimension mismatch, 4 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import baselines
from .axioms import CHECKS, run_all
from .baselines import BaselineParams
from .errors import ConvergenceError, DimensionMismatchError, FormatError
from .metric import KINDS, MetricSeries, WindowPolicy, star_id, windowed_sweep
from .pairwise import MetricConfig
from .quadrature import QuadConfig
from .scenarios import (
    ManeuverSpec,
    ScenarioSpec,
    estimate_bearing_track,
    estimate_multitarget,
    gen_maneuvering,
    gen_multitarget,
    load_scenario_spec,
    monte_carlo,
)
from .trajectory import TrajectorySet, read_trajectory_set, write_trajectory_set

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_USAGE = 2
EXIT_DIM = 3
EXIT_CONVERGENCE = 4

PRESETS = {
    "single": {"c_s": 10.0, "c_t": 10.0, "p": 2.0, "alpha": 2.0, "cutoff": 10.0},
    "multi": {"c_s": 1000.0, "c_t": 1000.0, "p": 2.0, "alpha": 2.0, "cutoff": 10.0},
}

_TIME_DIGITS = 12


class UsageError(Exception):
    pass


def _kind(name: str) -> str:
    kind = name.replace("-", "_")
    if kind not in KINDS:
        raise argparse.ArgumentTypeError(f"unknown metric {name!r}")
    return kind


def _window(text: str) -> Optional[float]:
    if text.lower() == "none":
        return None
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must be a number of seconds or 'none', got {text!r}")
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError("window length must be positive")
    return value


def _positive(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _value_list(text: str) -> List[float]:
    return [_positive(v) for v in text.split(",") if v.strip()]


def _metric_flags(p: argparse.ArgumentParser, default_preset: str):
    g = p.add_argument_group("metric parameters")
    g.add_argument("--preset", choices=sorted(PRESETS), default=default_preset,
                   help=f"default parameter set (default: {default_preset})")
    g.add_argument("--p", type=float, help="metric order p >= 1")
    g.add_argument("--c-s", type=_positive, help="segment cutoff c_S (SFA and SMD)")
    g.add_argument("--c-t", type=_positive, help="trajectory cutoff c_T (TFA and TMD)")
    for name in ("sfa", "smd", "tfa", "tmd"):
        g.add_argument(f"--c-{name}", type=_positive, help=f"override c_{name.upper()}")
    g.add_argument("--distance-mode", action="store_true", help="reject unequal FA/MD cutoffs")
    g.add_argument("--alpha", type=float, help="GOSPA alpha in (0, 2]")
    g.add_argument("--cutoff", type=_positive, help="OSPA/GOSPA/OSPA2 cutoff c")
    g.add_argument("--rel-tol", type=_positive, default=1e-9, help="quadrature relative tolerance")
    g.add_argument("--abs-tol", type=_positive, default=1e-12, help="quadrature absolute tolerance")
    g.add_argument("--max-depth", type=int, default=40, help="quadrature bisection depth limit")


def _output_flags(p: argparse.ArgumentParser):
    p.add_argument("--out", help="output path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--plot", help="also render a PNG figure to this path")
    p.add_argument("--seed", type=int, default=None, help="random seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="starid", description="Spatio-temporal trajectory set metrics.")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="metric between a truth and an estimate file")
    c.add_argument("truth", help="truth trajectory set (JSON) or point tracks (CSV)")
    c.add_argument("estimate", help="estimated trajectory set (JSON) or point tracks (CSV)")
    c.add_argument("--metric", type=_kind, default="star_id",
                   help="star-id, ta-star-id, ospa, gospa, ospa2 or imta")
    c.add_argument("--window", type=_window, default=None,
                   help="sliding window length in seconds, or 'none' for one value over the whole span")
    c.add_argument("--step", type=_positive, default=1.0, help="evaluation and sampling step (s)")
    _metric_flags(c, "single")
    _output_flags(c)

    s = sub.add_parser("sweep", help="Monte-Carlo series of a scenario over a cutoff axis")
    s.add_argument("spec", nargs="?", help="scenario spec (JSON or TOML); defaults built in")
    s.add_argument("--axis", choices=("c_s", "c_t"), required=True)
    s.add_argument("--values", type=_value_list, required=True, help="comma-separated cutoff values")
    s.add_argument("--runs", type=int, default=1)
    s.add_argument("--metric", type=_kind, default="star_id")
    s.add_argument("--window", type=_window, default=10.0, help="sliding window length in seconds")
    _metric_flags(s, "multi")
    _output_flags(s)

    sc = sub.add_parser("scenario", help="generate scenario truth, measurements and estimates")
    sc.add_argument("spec", nargs="?", help="scenario spec (JSON or TOML); defaults built in")
    sc.add_argument("--maneuvering", action="store_true", help="bearing-only maneuvering scenario")
    sc.add_argument("--zero-noise", action="store_true", help="noise-free measurements")
    _output_flags(sc)

    a = sub.add_parser("axioms", help="randomized axiom checks")
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--scale", type=_positive, default=1.0, help="multiply trial counts")
    a.add_argument("--only", type=lambda t: [x.strip() for x in t.split(",") if x.strip()],
                   help=f"comma-separated subset of {','.join(CHECKS)}")
    return parser


def metric_config(args) -> MetricConfig:
    preset = PRESETS[args.preset]
    p = preset["p"] if args.p is None else args.p
    c_s = preset["c_s"] if args.c_s is None else args.c_s
    c_t = preset["c_t"] if args.c_t is None else args.c_t

    def pick(v, d):
        return d if v is None else v

    quad = QuadConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol, max_depth=args.max_depth)
    return MetricConfig(
        p=p,
        c_sfa=pick(args.c_sfa, c_s),
        c_smd=pick(args.c_smd, c_s),
        c_tfa=pick(args.c_tfa, c_t),
        c_tmd=pick(args.c_tmd, c_t),
        quad=quad,
        distance_mode=args.distance_mode,
    )


def baseline_params(args, step: float = 1.0) -> BaselineParams:
    preset = PRESETS[args.preset]
    p = preset["p"] if args.p is None else args.p
    return BaselineParams(
        cutoff=preset["cutoff"] if args.cutoff is None else args.cutoff,
        p=p,
        alpha=preset["alpha"] if args.alpha is None else args.alpha,
        sample_step=step,
    )


def _fmt(x: float) -> str:
    return f"{x:.9f}"


def _emit(series: MetricSeries, single: bool, out):
    if single:
        print(_fmt(series.values[0]), file=out)
    else:
        for t, v in zip(series.times, series.values):
            print(f"{_fmt(t)} {_fmt(v)}", file=out)


def _write_series(series: MetricSeries, path, fmt: str):
    if fmt == "json":
        series.to_json(path)
    else:
        series.to_csv(path)


def _eval_grid(span, step: float) -> np.ndarray:
    t0, t1 = span
    n = int(math.floor((t1 - t0) / step + 1e-9))
    return np.round(t0 + step * np.arange(1, n + 1), _TIME_DIGITS)


def _union_span(a: TrajectorySet, b: TrajectorySet):
    spans = [s for s in (a.span, b.span) if s is not None]
    if not spans:
        raise UsageError("both trajectory sets are empty")
    return (min(s[0] for s in spans), max(s[1] for s in spans))


def _compute_tracks(args) -> MetricSeries:
    if args.metric not in ("ospa", "gospa", "ospa2"):
        raise UsageError(f"point-track files support ospa, gospa and ospa2, not {args.metric}")
    X = list(baselines.read_tracks(args.truth).values())
    Y = list(baselines.read_tracks(args.estimate).values())
    K = max([tr.K for tr in X + Y], default=0)
    if K == 0:
        raise UsageError("track files contain no rows")
    X = [baselines.Track(K, tr.points) for tr in X]
    Y = [baselines.Track(K, tr.points) for tr in Y]
    dims = {tr.dim for tr in X + Y} - {None}
    if len(dims) > 1:
        raise DimensionMismatchError(f"track files have mixed dimensions {sorted(dims)}")
    base = baseline_params(args)
    if args.metric == "ospa2":
        if args.window is None:
            return MetricSeries((float(K),), (baselines.ospa2(X, Y, base.p, base.q, base.cutoff),), "ospa2")
        length = max(1, int(round(args.window)))
        vals = []
        for k in range(1, K + 1):
            lo = max(1, k - length)
            span = k - lo + 1
            cut = lambda trs: [baselines.Track(span, {i - lo + 1: v for i, v in tr.points.items() if lo <= i <= k})  # noqa: E731
                               for tr in trs]
            vals.append(baselines.ospa2(cut(X), cut(Y), base.p, base.q, base.cutoff))
        return MetricSeries(tuple(float(k) for k in range(1, K + 1)), tuple(vals), "ospa2")
    vals = []
    for k in range(1, K + 1):
        a = [tr.points[k] for tr in X if k in tr.points]
        b = [tr.points[k] for tr in Y if k in tr.points]
        if args.metric == "ospa":
            vals.append(baselines.ospa(a, b, base.p, base.cutoff))
        else:
            vals.append(baselines.gospa(a, b, base.p, base.cutoff, base.alpha))
    if args.window is None:
        return MetricSeries((float(K),), (vals[-1],), args.metric)
    return MetricSeries(tuple(float(k) for k in range(1, K + 1)), tuple(vals), args.metric)


def cmd_compute(args, out=None) -> int:
    out = out or sys.stdout
    if Path(args.truth).suffix.lower() == ".csv" or Path(args.estimate).suffix.lower() == ".csv":
        series = _compute_tracks(args)
    else:
        truth = read_trajectory_set(args.truth)
        est = read_trajectory_set(args.estimate)
        if truth.dim != est.dim:
            raise DimensionMismatchError(f"truth has dimension {truth.dim}, estimate has {est.dim}")
        cfg = metric_config(args)
        base = baseline_params(args, args.step)
        span = _union_span(truth, est)
        if args.window is None:
            if args.metric == "star_id":
                value = star_id(truth, est, cfg)
                series = MetricSeries((span[1],), (value,), "star_id")
            else:
                policy = WindowPolicy(length=span[1] - span[0], start_clamp=span[0])
                series = windowed_sweep(truth, est, [cfg], [span[1]], policy, (args.metric,), base)[0][args.metric]
        else:
            policy = WindowPolicy(length=args.window, start_clamp=span[0])
            times = _eval_grid(span, args.step)
            if len(times) == 0:
                raise UsageError("the evaluation grid is empty; use a smaller --step")
            series = windowed_sweep(truth, est, [cfg], times, policy, (args.metric,), base)[0][args.metric]
    _emit(series, args.window is None, out)
    if args.out:
        _write_series(series, args.out, args.format)
    if args.plot:
        from .plotting import plot_series

        plot_series({series.kind: series}, args.plot)
    return EXIT_OK


def _scenario_spec(args) -> ScenarioSpec:
    spec = load_scenario_spec(args.spec) if args.spec else ScenarioSpec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    return spec


def _value_tag(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def cmd_sweep(args, out=None) -> int:
    out = out or sys.stdout
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    if args.metric not in ("star_id", "ta_star_id"):
        raise UsageError("sweep varies Star-ID cutoffs; use --metric star-id or ta-star-id")
    spec = _scenario_spec(args)
    base_cfg = metric_config(args)
    cfgs = []
    for v in args.values:
        if args.axis == "c_s":
            cfgs.append(MetricConfig(base_cfg.p, v, v, base_cfg.c_tfa, base_cfg.c_tmd, base_cfg.quad, base_cfg.distance_mode))
        else:
            cfgs.append(MetricConfig(base_cfg.p, base_cfg.c_sfa, base_cfg.c_smd, v, v, base_cfg.quad, base_cfg.distance_mode))
    t0, t1 = spec.horizon
    window = args.window if args.window is not None else t1 - t0
    policy = WindowPolicy(length=window, start_clamp=t0)
    eval_times = _eval_grid((t0, t1), spec.step)
    results = monte_carlo(args.runs, spec, cfgs, (args.metric,), eval_times, policy, baseline_params(args))
    out_dir = Path(args.out) if args.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    labelled = {}
    for v, res in zip(args.values, results):
        series = res[args.metric]
        tag = f"{args.axis}={_value_tag(v)}"
        labelled[tag] = series
        print(f"# {tag}", file=out)
        _emit(series, False, out)
        if out_dir is not None:
            _write_series(series, out_dir / f"{args.metric}_{args.axis}_{_value_tag(v)}.{args.format}", args.format)
    if args.plot:
        from .plotting import plot_series

        plot_series(labelled, args.plot, ylabel=args.metric)
    return EXIT_OK


def cmd_scenario(args, out=None) -> int:
    out = out or sys.stdout
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.maneuvering:
        if args.spec:
            raise UsageError("the maneuvering scenario takes no spec file")
        mspec = ManeuverSpec(seed=0 if args.seed is None else args.seed)
        if args.zero_noise:
            mspec = replace(mspec, sensors=tuple(replace(s, bearing_noise_var=0.0) for s in mspec.sensors))
        truth, log = gen_maneuvering(mspec)
        est = estimate_bearing_track(log, mspec)
    else:
        spec = _scenario_spec(args)
        if args.zero_noise:
            spec = replace(spec, noise_var=0.0)
        truth, log = gen_multitarget(spec)
        est = estimate_multitarget(log, spec)
    paths = {
        "truth": out_dir / "truth.json",
        "estimates": out_dir / "estimates.json",
        "measurements": out_dir / "measurements.csv",
    }
    write_trajectory_set(truth, paths["truth"])
    write_trajectory_set(est, paths["estimates"])
    log.to_csv(paths["measurements"])
    for name, path in paths.items():
        print(f"{name}: {path}", file=out)
    if args.plot:
        from .plotting import plot_trajectories

        plot_trajectories(truth, est, args.plot)
    return EXIT_OK


def cmd_axioms(args, out=None) -> int:
    out = out or sys.stdout
    if args.only:
        unknown = set(args.only) - set(CHECKS)
        if unknown:
            raise UsageError(f"unknown checks: {sorted(unknown)}")
    reports = run_all(seed=args.seed, scale=args.scale, only=args.only)
    for rep in reports:
        print(rep.line(), file=out)
    passed = sum(r.passed for r in reports)
    print(f"{passed}/{len(reports)} checks passed", file=out)
    return EXIT_OK if passed == len(reports) else EXIT_CHECKS_FAILED


COMMANDS = {"compute": cmd_compute, "sweep": cmd_sweep, "scenario": cmd_scenario, "axioms": cmd_axioms}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return COMMANDS[args.command](args)
    except DimensionMismatchError as exc:
        print(f"starid: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_DIM
    except ConvergenceError as exc:
        print(f"starid: numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (FormatError, UsageError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"starid: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
