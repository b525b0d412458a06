"""Temporal alignment and the single-pair trajectory distance.

For a truth ``f`` and an estimate ``g`` the distance is built from three
parts: the estimate time outside the overlap (segment false alarm), the
truth time outside the overlap (segment missed detection), and the l_p
integral over the overlap, clamped so a badly wrong aligned segment costs
no more than missing it on both sides.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatchError
from .quadrature import QuadConfig, integrate_lp
from .trajectory import TFoT

__all__ = [
    "MetricConfig",
    "NonDistanceWarning",
    "Alignment",
    "align",
    "aligned_integral",
    "clamped_aligned_term",
    "pair_distance",
    "pair_cost",
    "capped_pair_cost",
    "capped_pair_distance",
    "unassigned_cost",
    "root_floor",
    "minkowski_combine",
]


class NonDistanceWarning(UserWarning):
    """Unequal false-alarm and missed-detection cutoffs break metric symmetry."""


@dataclass(frozen=True)
class MetricConfig:
    """Order and cutoff coefficients shared by the trajectory metrics.

    Cutoffs are penalties per unit time (meters, applied per second). With
    ``distance_mode=True`` the false-alarm and missed-detection cutoffs must
    be equal, which is what makes the result a true distance.
    """

    p: float = 2.0
    c_sfa: float = 10.0
    c_smd: float = 10.0
    c_tfa: float = 10.0
    c_tmd: float = 10.0
    quad: QuadConfig = field(default_factory=QuadConfig)
    distance_mode: bool = False

    def __post_init__(self):
        if not 1 <= self.p < math.inf:
            raise ValueError("p must satisfy 1 <= p < inf")
        for name in ("c_sfa", "c_smd", "c_tfa", "c_tmd"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite number")
        symmetric = self.c_sfa == self.c_smd and self.c_tfa == self.c_tmd
        if self.distance_mode and not symmetric:
            raise ValueError("distance mode requires c_sfa == c_smd and c_tfa == c_tmd")
        if not symmetric:
            warnings.warn(
                "unequal FA/MD cutoffs: the result is not a distance (not symmetric)",
                NonDistanceWarning,
                stacklevel=3,
            )

    @classmethod
    def symmetric(cls, c_s: float, c_t: float, p: float = 2.0, **kw) -> "MetricConfig":
        return cls(p=p, c_sfa=c_s, c_smd=c_s, c_tfa=c_t, c_tmd=c_t, **kw)


@dataclass(frozen=True)
class Alignment:
    overlap: Optional[tuple]
    t_sfa: float
    t_smd: float

    @property
    def overlap_length(self) -> float:
        return 0.0 if self.overlap is None else self.overlap[1] - self.overlap[0]


def align(f: TFoT, g: TFoT) -> Alignment:
    """Split truth ``f`` and estimate ``g`` into overlap and unaligned time."""
    t1, t2 = max(f.t_start, g.t_start), min(f.t_end, g.t_end)
    if t1 < t2:
        ov = t2 - t1
        return Alignment((t1, t2), max(g.duration - ov, 0.0), max(f.duration - ov, 0.0))
    return Alignment(None, g.duration, f.duration)


def aligned_integral(f: TFoT, g: TFoT, p: float, quad: QuadConfig = QuadConfig(), alignment=None) -> float:
    al = align(f, g) if alignment is None else alignment
    if al.overlap is None:
        return 0.0
    return integrate_lp(f, g, al.overlap, p, quad)


def _check_dims(f: TFoT, g: TFoT) -> int:
    if f.dim != g.dim:
        raise DimensionMismatchError(f"dimension mismatch: {f.dim} vs {g.dim}")
    return f.dim


def _clamp(integral: float, overlap_len: float, r: int, cfg: MetricConfig) -> float:
    p = cfg.p
    return min(integral ** p, r * (cfg.c_sfa + cfg.c_smd) ** p * overlap_len ** p)


def _segment_term(al: Alignment, r: int, cfg: MetricConfig) -> float:
    return r * (cfg.c_sfa * al.t_sfa + cfg.c_smd * al.t_smd) ** cfg.p


def clamped_aligned_term(f: TFoT, g: TFoT, cfg: MetricConfig) -> float:
    """Clamped p-th power of the aligned integral; zero without overlap."""
    r = _check_dims(f, g)
    al = align(f, g)
    if al.overlap is None:
        return 0.0
    return _clamp(aligned_integral(f, g, cfg.p, cfg.quad, al), al.overlap_length, r, cfg)


def pair_cost(f: TFoT, g: TFoT, cfg: MetricConfig, integral: Optional[float] = None) -> float:
    """p-th power of :func:`pair_distance`.

    ``integral`` may carry a precomputed aligned integral for this pair so
    that sweeps over cutoffs reuse the quadrature.
    """
    r = _check_dims(f, g)
    al = align(f, g)
    if al.overlap is None:
        aligned = 0.0
    else:
        if integral is None:
            integral = aligned_integral(f, g, cfg.p, cfg.quad, al)
        aligned = _clamp(integral, al.overlap_length, r, cfg)
    return _segment_term(al, r, cfg) + aligned


def pair_distance(f: TFoT, g: TFoT, cfg: MetricConfig) -> float:
    """Spatio-temporal distance between truth ``f`` and estimate ``g`` (m*s)."""
    return pair_cost(f, g, cfg) ** (1.0 / cfg.p)


def unassigned_cost(traj: TFoT, cutoff: float, p: float) -> float:
    """p-th power penalty for a whole trajectory left unassociated."""
    return traj.dim * (cutoff * traj.duration) ** p


def capped_pair_cost(f: TFoT, g: TFoT, cfg: MetricConfig, integral: Optional[float] = None) -> float:
    """p-th power of the pair distance, capped at leaving both unassigned."""
    cap = unassigned_cost(g, cfg.c_tfa, cfg.p) + unassigned_cost(f, cfg.c_tmd, cfg.p)
    return min(pair_cost(f, g, cfg, integral), cap)


def root_floor(value: float, p: float) -> float:
    """Largest float ``x`` near ``value**(1/p)`` with ``x**p <= value``."""
    x = value ** (1.0 / p)
    while x > 0 and x ** p > value:
        x = float(np.nextafter(x, 0.0))
    return x


def capped_pair_distance(f: TFoT, g: TFoT, cfg: MetricConfig) -> float:
    """Pair distance capped by the cost of treating both as trajectory FA/MD."""
    return root_floor(capped_pair_cost(f, g, cfg), cfg.p)


def minkowski_combine(a, b, p: float):
    """``(a**p + b**p)**(1/p)``; combining two pseudo-metrics this way keeps the triangle inequality."""
    return (np.asarray(a, dtype=float) ** p + np.asarray(b, dtype=float) ** p) ** (1.0 / p)
