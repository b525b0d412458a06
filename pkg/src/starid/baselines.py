"""Reference metrics: OSPA, GOSPA, OSPA^(2) and IMTA.

OSPA and GOSPA compare point sets, OSPA^(2) compares sets of discrete-time
tracks, and IMTA compares sets of trajectory functions. Point distances are
Euclidean throughout.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .assignment import AssignmentProblem, solve
from .errors import DimensionMismatchError, FormatError, SizeError
from .pairwise import MetricConfig, align
from .quadrature import integrate_sq
from .trajectory import TFoT, TrajectorySet

__all__ = [
    "BaselineParams",
    "Track",
    "ospa",
    "gospa",
    "ospa2",
    "imta",
    "imta_pair",
    "read_tracks",
    "write_tracks",
]


@dataclass(frozen=True)
class BaselineParams:
    """Parameters of the point/track metrics (defaults follow the single-target setup)."""

    cutoff: float = 10.0
    p: float = 2.0
    alpha: float = 2.0
    q: float = 1.0
    imta_order: float = 1.0
    sample_step: float = 1.0


def _points(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, arr.shape[-1] if arr.ndim == 2 else 0)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError("a point set must be a sequence of r-vectors")
    return arr


def _check_params(p, c):
    if not 1 <= p < math.inf:
        raise ValueError("p must satisfy 1 <= p < inf")
    if not (c > 0 and math.isfinite(c)):
        raise ValueError("cutoff c must be positive and finite")


def _sorted_by_size(a, b):
    A, B = _points(a), _points(b)
    if len(A) and len(B) and A.shape[1] != B.shape[1]:
        raise DimensionMismatchError(f"point dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    return (A, B) if len(A) <= len(B) else (B, A)


def _optimal_subpattern(cost: np.ndarray, forced_cost: float) -> float:
    """Minimum over injections of the smaller (row) side into the larger side.

    Leaving a row unmatched costs ``forced_cost``, which must dominate every
    entry of ``cost``; the optimum then equals the best full injection.
    """
    m, n = cost.shape
    if m == 0:
        return 0.0
    problem = AssignmentProblem(cost, np.full(m, forced_cost), np.zeros(n))
    return solve(problem).total_cost


def _clamped_power_costs(A, B, p, c):
    if len(A) == 0 or len(B) == 0:
        return np.zeros((len(A), len(B)))
    d = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=-1)
    return np.minimum(c, d) ** p


def ospa(a, b, p: float = 2.0, c: float = 10.0) -> float:
    """OSPA distance between two point sets (meters), normalized by the larger size."""
    _check_params(p, c)
    A, B = _sorted_by_size(a, b)
    m, n = len(A), len(B)
    if n == 0:
        return 0.0
    matched = _optimal_subpattern(_clamped_power_costs(A, B, p, c), c ** p)
    return ((matched + c ** p * (n - m)) / n) ** (1.0 / p)


def gospa(a, b, p: float = 2.0, c: float = 10.0, alpha: float = 2.0) -> float:
    """Unnormalized OSPA with the cardinality penalty divided by ``alpha``."""
    _check_params(p, c)
    if not 0 < alpha <= 2:
        raise ValueError("alpha must satisfy 0 < alpha <= 2")
    A, B = _sorted_by_size(a, b)
    m, n = len(A), len(B)
    if n == 0:
        return 0.0
    matched = _optimal_subpattern(_clamped_power_costs(A, B, p, c), c ** p)
    return (matched + c ** p / alpha * (n - m)) ** (1.0 / p)


@dataclass(frozen=True)
class Track:
    """Discrete-time track over time indices ``1..K``; missing indices are absent."""

    K: int
    points: Dict[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.K) < 1:
            raise ValueError("K must be >= 1")
        pts = {}
        for k, v in dict(self.points).items():
            if not 1 <= int(k) <= self.K:
                raise ValueError(f"time index {k} outside 1..{self.K}")
            pts[int(k)] = np.atleast_1d(np.asarray(v, dtype=float))
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "points", pts)

    def as_array(self, dim: int) -> np.ndarray:
        """``(K, dim)`` array with NaN rows where the track is absent."""
        out = np.full((self.K, dim), np.nan)
        for k, v in self.points.items():
            out[k - 1] = v
        return out

    @property
    def dim(self) -> Optional[int]:
        for v in self.points.values():
            return len(v)
        return None


def _track_base(X: np.ndarray, Y: np.ndarray, w: np.ndarray, q: float, c: float) -> float:
    present_x = ~np.isnan(X[:, 0])
    present_y = ~np.isnan(Y[:, 0])
    d = np.zeros(len(w))
    one = present_x != present_y
    both = present_x & present_y
    d[one] = c
    if np.any(both):
        d[both] = np.minimum(c, np.linalg.norm(X[both] - Y[both], axis=1))
    return float(((w * d) ** q).sum() ** (1.0 / q))


def ospa2(X: Sequence[Track], Y: Sequence[Track], p: float = 2.0, q: float = 1.0, c: float = 10.0, weights=None) -> float:
    """OSPA^(2) distance between two sets of tracks sharing the same ``K``."""
    _check_params(p, c)
    if not q >= 1:
        raise ValueError("q must be >= 1")
    X, Y = list(X), list(Y)
    if len(X) > len(Y):
        X, Y = Y, X
    m, n = len(X), len(Y)
    if n == 0:
        return 0.0
    Ks = {tr.K for tr in X + Y}
    if len(Ks) != 1:
        raise ValueError("all tracks must share the same K")
    K = Ks.pop()
    if weights is None:
        w = np.full(K, 1.0 / K)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (K,) or np.any(w <= 0) or not math.isclose(w.sum(), 1.0, rel_tol=1e-9):
            raise ValueError("weights must be K positive values summing to 1")
    dims = {tr.dim for tr in X + Y} - {None}
    if len(dims) > 1:
        raise DimensionMismatchError(f"tracks have mixed dimensions {sorted(dims)}")
    dim = dims.pop() if dims else 1
    XA = [tr.as_array(dim) for tr in X]
    YA = [tr.as_array(dim) for tr in Y]
    cost = np.array([[_track_base(xa, ya, w, q, c) ** p for ya in YA] for xa in XA]).reshape(m, n)
    matched = _optimal_subpattern(cost, c ** p)
    return ((matched + c ** p * (n - m)) / n) ** (1.0 / p)


def imta_pair(f: TFoT, g: TFoT, cfg: MetricConfig, order: float = 1.0) -> float:
    """IMTA base distance between truth ``f`` and estimate ``g``.

    The aligned part is the integrated squared difference; the unaligned
    penalty is raised to ``order`` and the sum divided by the joint span
    raised to ``order``.
    """
    if f.dim != g.dim:
        raise DimensionMismatchError(f"dimension mismatch: {f.dim} vs {g.dim}")
    al = align(f, g)
    sq = 0.0 if al.overlap is None else integrate_sq(f, g, al.overlap, cfg.quad)
    tau = (al.overlap_length + al.t_sfa + al.t_smd) ** order
    return (sq + (cfg.c_sfa * al.t_sfa + cfg.c_smd * al.t_smd) ** order) / tau


_IMTA_ENUM_LIMIT = 100_000


def imta(truth: TrajectorySet, est: TrajectorySet, cfg: MetricConfig = MetricConfig(), order: float = 1.0) -> float:
    """IMTA metric between truth and estimated trajectory sets.

    The unassociated-trajectory penalty is ``(c_TFA*T_TFA + c_TMD*T_TMD)**order``
    with total unassociated durations, exponentiated as a whole; for
    ``order != 1`` that term is not additive, so the association is
    enumerated.
    """
    if truth.dim != est.dim:
        raise DimensionMismatchError(f"set dimension mismatch: {truth.dim} vs {est.dim}")
    F, G = list(truth), list(est)
    m, n = len(F), len(G)
    if m == 0 and n == 0:
        return 0.0
    base = np.array([[imta_pair(f, g, cfg, order) for g in G] for f in F]).reshape(m, n)
    t_f = np.array([f.duration for f in F])
    t_g = np.array([g.duration for g in G])

    if order == 1:
        rows = cfg.c_tmd * t_f
        cols = cfg.c_tfa * t_g
        big = 1.0 + base.sum() + rows.sum() + cols.sum()
        # the smaller side must be fully associated
        if m <= n:
            rows = np.full(m, big)
        else:
            cols = np.full(n, big)
        return solve(AssignmentProblem(base, rows, cols)).total_cost

    if m <= n:
        count = math.perm(n, m)
    else:
        count = math.perm(m, n)
    if count > _IMTA_ENUM_LIMIT:
        raise SizeError(f"IMTA with order != 1 enumerates {count} associations (limit {_IMTA_ENUM_LIMIT})")
    best = math.inf
    if m <= n:
        for perm in itertools.permutations(range(n), m):
            used = set(perm)
            loc = math.fsum(base[j, i] for j, i in enumerate(perm))
            t_fa = math.fsum(t_g[i] for i in range(n) if i not in used)
            best = min(best, loc + (cfg.c_tfa * t_fa) ** order)
    else:
        for perm in itertools.permutations(range(m), n):
            used = set(perm)
            loc = math.fsum(base[j, i] for i, j in enumerate(perm))
            t_md = math.fsum(t_f[j] for j in range(m) if j not in used)
            best = min(best, loc + (cfg.c_tmd * t_md) ** order)
    return best


def read_tracks(path) -> Dict[str, Track]:
    """Read ``track_id,time_index,x1..xr`` CSV rows into tracks keyed by id.

    ``K`` is the largest time index in the file.
    """
    rows: Dict[str, Dict[int, list]] = {}
    K = 0
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["track_id", "time_index"] or len(header) < 3:
            raise FormatError(f"{path}: header must be track_id,time_index,x1..xr")
        dim = len(header) - 2
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != dim + 2:
                raise FormatError(f"{path}:{lineno}: expected {dim + 2} fields")
            try:
                k = int(rec[1])
                vec = [float(x) for x in rec[2:]]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
            rows.setdefault(rec[0], {})[k] = vec
            K = max(K, k)
    return {tid: Track(K, pts) for tid, pts in rows.items()}


def write_tracks(tracks: Dict[str, Track], path) -> None:
    dims = {tr.dim for tr in tracks.values()} - {None}
    dim = dims.pop() if dims else 1
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["track_id", "time_index"] + [f"x{i + 1}" for i in range(dim)])
        for tid, tr in tracks.items():
            for k in sorted(tr.points):
                w.writerow([tid, k] + [repr(float(x)) for x in tr.points[k]])
