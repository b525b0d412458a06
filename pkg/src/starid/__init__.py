"""Spatio-temporal distances between sets of continuous-time trajectories."""
from .assignment import AssignmentProblem, AssignmentResult, brute_force, solve
from .baselines import BaselineParams, Track, gospa, imta, ospa, ospa2
from .errors import (
    ConvergenceError,
    DegenerateGeometryError,
    DegenerateWindowError,
    DimensionMismatchError,
    DomainError,
    FormatError,
    SizeError,
    StarIDError,
    UnderdeterminedError,
)
from .metric import MetricSeries, StarIDResult, WindowPolicy, star_id, star_id_result, ta_star_id, windowed_series
from .pairwise import Alignment, MetricConfig, NonDistanceWarning, align, capped_pair_distance, pair_distance
from .quadrature import QuadConfig, integrate_lp
from .trajectory import PolyPiece, TFoT, TrajectorySet, clip, duration, evaluate

__version__ = "0.1.0"

__all__ = [
    "AssignmentProblem",
    "AssignmentResult",
    "brute_force",
    "solve",
    "BaselineParams",
    "Track",
    "gospa",
    "imta",
    "ospa",
    "ospa2",
    "ConvergenceError",
    "DegenerateGeometryError",
    "DegenerateWindowError",
    "DimensionMismatchError",
    "DomainError",
    "FormatError",
    "SizeError",
    "StarIDError",
    "UnderdeterminedError",
    "MetricSeries",
    "StarIDResult",
    "WindowPolicy",
    "star_id",
    "star_id_result",
    "ta_star_id",
    "windowed_series",
    "Alignment",
    "MetricConfig",
    "NonDistanceWarning",
    "align",
    "capped_pair_distance",
    "pair_distance",
    "QuadConfig",
    "integrate_lp",
    "PolyPiece",
    "TFoT",
    "TrajectorySet",
    "clip",
    "duration",
    "evaluate",
]
