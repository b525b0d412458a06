"""Set-level Star-ID, its time-averaged form, and sliding-window series."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from . import baselines
from .assignment import AssignmentProblem, AssignmentResult, solve
from .baselines import BaselineParams, Track
from .errors import DegenerateWindowError, DimensionMismatchError, FormatError
from .pairwise import MetricConfig, aligned_integral, capped_pair_cost, unassigned_cost
from .trajectory import TrajectorySet

__all__ = [
    "KINDS",
    "StarIDResult",
    "WindowPolicy",
    "MetricSeries",
    "star_id",
    "star_id_result",
    "ta_star_id",
    "pair_integrals",
    "windowed_series",
    "windowed_sweep",
]

KINDS = ("star_id", "ta_star_id", "ospa", "gospa", "ospa2", "imta")

# window edges are rounded so that k - length lands on sample grids exactly
_EDGE_DIGITS = 12


@dataclass(frozen=True)
class StarIDResult:
    value: float
    assignment: AssignmentResult
    problem: AssignmentProblem

    @property
    def has_trajectory_fa_md(self) -> bool:
        return bool(self.assignment.unmatched_truth or self.assignment.unmatched_estimates)


def _check_sets(truth: TrajectorySet, est: TrajectorySet):
    if truth.dim != est.dim:
        raise DimensionMismatchError(f"set dimension mismatch: {truth.dim} vs {est.dim}")


def pair_integrals(truth: TrajectorySet, est: TrajectorySet, p: float, quad) -> np.ndarray:
    """Aligned l_p integrals for every (truth, estimate) pair; zero without overlap."""
    _check_sets(truth, est)
    out = np.zeros((len(truth), len(est)))
    for j, f in enumerate(truth):
        for i, g in enumerate(est):
            out[j, i] = aligned_integral(f, g, p, quad)
    return out


def _result_from_integrals(truth, est, cfg: MetricConfig, integrals) -> StarIDResult:
    p = cfg.p
    cost = np.array(
        [[capped_pair_cost(f, g, cfg, integrals[j, i]) for i, g in enumerate(est)] for j, f in enumerate(truth)]
    ).reshape(len(truth), len(est))
    rows = np.array([unassigned_cost(f, cfg.c_tmd, p) for f in truth])
    cols = np.array([unassigned_cost(g, cfg.c_tfa, p) for g in est])
    problem = AssignmentProblem(cost, rows, cols)
    res = solve(problem)
    return StarIDResult(res.total_cost ** (1.0 / p), res, problem)


def star_id_result(truth: TrajectorySet, est: TrajectorySet, cfg: MetricConfig) -> StarIDResult:
    """Star-ID together with the optimal association."""
    integrals = pair_integrals(truth, est, cfg.p, cfg.quad)
    return _result_from_integrals(truth, est, cfg, integrals)


def star_id(truth: TrajectorySet, est: TrajectorySet, cfg: MetricConfig) -> float:
    """Star-ID distance between truth and estimated trajectory sets (m*s)."""
    return star_id_result(truth, est, cfg).value


def ta_star_id(truth: TrajectorySet, est: TrajectorySet, cfg: MetricConfig, window) -> float:
    """Star-ID of the window-clipped sets divided by the window length (m)."""
    k0, k1 = float(window[0]), float(window[1])
    if not k1 > k0:
        raise DegenerateWindowError(f"window [{k0}, {k1}] has no length")
    return star_id(truth.clip((k0, k1)), est.clip((k0, k1)), cfg) / (k1 - k0)


@dataclass(frozen=True)
class WindowPolicy:
    """Sliding window ``[max(start_clamp, k - length), k]``."""

    length: float = 10.0
    start_clamp: float = 1.0

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError("window length must be positive")

    def window(self, k: float) -> tuple:
        start = round(max(self.start_clamp, k - self.length), _EDGE_DIGITS)
        return (start, float(k))


@dataclass(frozen=True)
class MetricSeries:
    times: tuple
    values: tuple
    kind: str

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        values = tuple(float(v) for v in self.values)
        if len(times) != len(values):
            raise ValueError("times and values must have equal length")
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("times must be strictly increasing")
        if self.kind not in KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.times)

    def array(self) -> np.ndarray:
        return np.asarray(self.values)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def csv_text(self) -> str:
        lines = ["time,value,kind"]
        lines += [f"{t:.9f},{v:.9f},{self.kind}" for t, v in zip(self.times, self.values)]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "times": list(self.times), "values": list(self.values)}

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_csv(cls, path) -> "MetricSeries":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            if next(reader, None) != ["time", "value", "kind"]:
                raise FormatError(f"{path}: header must be time,value,kind")
            rows = [r for r in reader if r]
        kinds = {r[2] for r in rows}
        if len(kinds) > 1:
            raise FormatError(f"{path}: mixed metric kinds {sorted(kinds)}")
        kind = kinds.pop() if kinds else "star_id"
        return cls(tuple(float(r[0]) for r in rows), tuple(float(r[1]) for r in rows), kind)

    @classmethod
    def from_json(cls, path) -> "MetricSeries":
        data = json.loads(Path(path).read_text())
        return cls(tuple(data["times"]), tuple(data["values"]), data["kind"])


def _sample_times(window, step: float) -> np.ndarray:
    k0, k1 = window
    n = int(math.floor((k1 - k0) / step + 1e-9))
    return np.round(k0 + step * np.arange(n + 1), _EDGE_DIGITS)


def _tracks(tset: TrajectorySet, times: np.ndarray) -> List[Track]:
    out = []
    for tr in tset:
        alive = (times >= tr.t_start) & (times <= tr.t_end)
        if not np.any(alive):
            continue
        vals = tr.values(times[alive])
        idx = np.nonzero(alive)[0] + 1
        out.append(Track(len(times), {int(k): v for k, v in zip(idx, vals)}))
    return out


def _points_at(tset: TrajectorySet, k: float) -> np.ndarray:
    alive = tset.alive_at(k)
    if not alive:
        return np.zeros((0, tset.dim))
    return np.array([tr.values(k) for tr in alive])


def _point_metric(kind, truth, est, k, window, cfg, base: BaselineParams) -> float:
    if kind in ("ospa", "gospa"):
        a, b = _points_at(truth, k), _points_at(est, k)
        if kind == "ospa":
            return baselines.ospa(a, b, base.p, base.cutoff)
        return baselines.gospa(a, b, base.p, base.cutoff, base.alpha)
    if kind == "ospa2":
        times = _sample_times(window, base.sample_step)
        return baselines.ospa2(_tracks(truth, times), _tracks(est, times), base.p, base.q, base.cutoff)
    if kind == "imta":
        return baselines.imta(truth.clip(window), est.clip(window), cfg, base.imta_order)
    raise ValueError(f"unknown metric kind {kind!r}")


def windowed_sweep(
    truth: TrajectorySet,
    est: TrajectorySet,
    cfgs: Sequence[MetricConfig],
    eval_times: Sequence[float],
    policy: WindowPolicy = WindowPolicy(),
    kinds: Sequence[str] = ("star_id",),
    base: BaselineParams = BaselineParams(),
) -> List[Dict[str, MetricSeries]]:
    """Windowed series for several metric configurations at once.

    All configurations must share ``p`` and the quadrature settings; the
    aligned integrals of each window are then computed once and reused.
    Returns one ``{kind: MetricSeries}`` mapping per configuration.
    """
    _check_sets(truth, est)
    cfgs = list(cfgs)
    if not cfgs:
        return []
    if len({(c.p, c.quad) for c in cfgs}) != 1:
        raise ValueError("all configurations in a sweep must share p and quadrature settings")
    for kind in kinds:
        if kind not in KINDS:
            raise ValueError(f"unknown metric kind {kind!r}")
    times = [float(k) for k in eval_times]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("eval_times must be strictly increasing")
    values = [{kind: [] for kind in kinds} for _ in cfgs]
    p, quad = cfgs[0].p, cfgs[0].quad
    for k in times:
        window = policy.window(k)
        span = window[1] - window[0]
        need_star = any(kind in ("star_id", "ta_star_id") for kind in kinds)
        if "ta_star_id" in kinds and not span > 0:
            raise DegenerateWindowError(f"window {window} at k={k} has no length")
        if need_star:
            wt, we = truth.clip(window), est.clip(window)
            integrals = pair_integrals(wt, we, p, quad)
        shared = {}
        for c, cfg in enumerate(cfgs):
            star = None
            if need_star:
                star = _result_from_integrals(wt, we, cfg, integrals).value
            for kind in kinds:
                if kind == "star_id":
                    v = star
                elif kind == "ta_star_id":
                    v = star / span
                elif kind == "imta":
                    v = _point_metric(kind, truth, est, k, window, cfg, base)
                else:
                    if kind not in shared:
                        shared[kind] = _point_metric(kind, truth, est, k, window, cfg, base)
                    v = shared[kind]
                values[c][kind].append(v)
    return [{kind: MetricSeries(tuple(times), tuple(vals[kind]), kind) for kind in kinds} for vals in values]


def windowed_series(
    truth: TrajectorySet,
    est: TrajectorySet,
    cfg: MetricConfig,
    eval_times: Sequence[float],
    policy: WindowPolicy = WindowPolicy(),
    kind: str = "star_id",
    base: BaselineParams = BaselineParams(),
) -> MetricSeries:
    """Metric of kind ``kind`` evaluated on the sliding window ending at each time.

    Trajectories are clipped to each window; members whose clip is empty are
    left out of that window's sets.
    """
    return windowed_sweep(truth, est, [cfg], eval_times, policy, (kind,), base)[0][kind]
