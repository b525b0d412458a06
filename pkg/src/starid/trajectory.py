"""Piecewise-polynomial trajectory functions of time (T-FoTs).

A trajectory maps time (seconds) to an ``r``-dimensional position (meters).
Each piece stores coefficients in absolute time, so dimension ``i`` of a
piece evaluates to ``sum_j coeffs[i, j] * t**j``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import DimensionMismatchError, DomainError, FormatError

__all__ = [
    "PolyPiece",
    "TFoT",
    "TrajectorySet",
    "evaluate",
    "clip",
    "duration",
    "read_trajectory_set",
    "write_trajectory_set",
]


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PolyPiece:
    """One polynomial segment on ``[t_start, t_end]``."""

    t_start: float
    t_end: float
    coeffs: np.ndarray

    def __post_init__(self):
        t0, t1 = float(self.t_start), float(self.t_end)
        if not (math.isfinite(t0) and math.isfinite(t1)) or not t0 < t1:
            raise ValueError(f"piece interval must satisfy t_start < t_end, got [{t0}, {t1}]")
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        if coeffs.ndim != 2 or coeffs.shape[0] < 1 or coeffs.shape[1] < 1:
            raise ValueError("coeffs must be a non-empty dim x (order+1) array")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coeffs must be finite")
        object.__setattr__(self, "t_start", t0)
        object.__setattr__(self, "t_end", t1)
        object.__setattr__(self, "coeffs", _frozen_array(coeffs))

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def order(self) -> int:
        return self.coeffs.shape[1] - 1

    def __call__(self, t):
        """Evaluate the polynomial (no domain check)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.dim,))
        for j in range(self.order, -1, -1):
            out = out * t[..., None] + self.coeffs[:, j]
        return out

    def __eq__(self, other):
        if not isinstance(other, PolyPiece):
            return NotImplemented
        return (
            self.t_start == other.t_start
            and self.t_end == other.t_end
            and np.array_equal(self.coeffs, other.coeffs)
        )

    __hash__ = None

    def to_dict(self) -> dict:
        return {"t_start": self.t_start, "t_end": self.t_end, "coeffs": self.coeffs.tolist()}


@dataclass(frozen=True, eq=False)
class TFoT:
    """A trajectory function of time made of contiguous polynomial pieces.

    Pieces need not join continuously. At an internal boundary the piece on
    the right is used; at the final end time the last piece is used.
    """

    pieces: tuple
    id: str = ""
    _starts: np.ndarray = field(init=False, repr=False)
    _stack: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise ValueError("a trajectory needs at least one piece")
        dim = pieces[0].dim
        for a, b in zip(pieces, pieces[1:]):
            if a.t_end != b.t_start:
                raise ValueError(
                    f"pieces must be contiguous: {a.t_end} != {b.t_start}"
                )
        if any(pc.dim != dim for pc in pieces):
            raise ValueError("every piece must have the same number of coefficient rows")
        width = max(pc.order for pc in pieces) + 1
        stack = np.zeros((len(pieces), dim, width))
        for k, pc in enumerate(pieces):
            stack[k, :, : pc.order + 1] = pc.coeffs
        stack.setflags(write=False)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "_starts", _frozen_array([pc.t_start for pc in pieces]))
        object.__setattr__(self, "_stack", stack)

    @classmethod
    def polynomial(cls, coeffs, t_start, t_end, id=""):
        """Single-piece trajectory from a ``dim x (order+1)`` coefficient array."""
        return cls((PolyPiece(t_start, t_end, coeffs),), id=id)

    @classmethod
    def constant(cls, value, t_start, t_end, id=""):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls.polynomial(value[:, None], t_start, t_end, id=id)

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    @property
    def t_start(self) -> float:
        return self.pieces[0].t_start

    @property
    def t_end(self) -> float:
        return self.pieces[-1].t_end

    @property
    def interval(self) -> tuple:
        return (self.t_start, self.t_end)

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    @property
    def breakpoints(self) -> np.ndarray:
        """Internal piece boundaries (excludes both end points)."""
        return self._starts[1:]

    def values(self, ts) -> np.ndarray:
        """Vectorized evaluation without a domain check; shape ``ts.shape + (dim,)``."""
        ts = np.asarray(ts, dtype=float)
        idx = np.clip(np.searchsorted(self._starts, ts, side="right") - 1, 0, len(self.pieces) - 1)
        coeffs = self._stack[idx]
        out = coeffs[..., -1]
        for j in range(coeffs.shape[-1] - 2, -1, -1):
            out = out * ts[..., None] + coeffs[..., j]
        return out

    def __call__(self, t):
        return evaluate(self, t)

    def clip(self, t0: float, t1: float) -> Optional["TFoT"]:
        return clip(self, (t0, t1))

    def with_id(self, new_id: str) -> "TFoT":
        return TFoT(self.pieces, id=new_id)

    def __eq__(self, other):
        if not isinstance(other, TFoT):
            return NotImplemented
        return self.id == other.id and self.pieces == other.pieces

    __hash__ = None

    def to_dict(self) -> dict:
        return {"id": self.id, "pieces": [pc.to_dict() for pc in self.pieces]}


def evaluate(traj: TFoT, t):
    """Position of ``traj`` at time ``t`` (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < traj.t_start) or np.any(t_arr > traj.t_end) or np.any(np.isnan(t_arr)):
        raise DomainError(f"t outside trajectory domain [{traj.t_start}, {traj.t_end}]")
    return traj.values(t_arr)


def clip(traj: TFoT, window) -> Optional[TFoT]:
    """Restrict ``traj`` to ``window``; ``None`` when the overlap has zero length."""
    w0, w1 = float(window[0]), float(window[1])
    if w0 > w1:
        raise ValueError(f"invalid window [{w0}, {w1}]")
    lo, hi = max(w0, traj.t_start), min(w1, traj.t_end)
    if not lo < hi:
        return None
    if lo == traj.t_start and hi == traj.t_end:
        return traj
    first = max(int(np.searchsorted(traj._starts, lo, side="right")) - 1, 0)
    last = int(np.searchsorted(traj._starts, hi, side="left"))
    pieces = []
    for pc in traj.pieces[first:last]:
        a, b = max(lo, pc.t_start), min(hi, pc.t_end)
        if a < b:
            pieces.append(pc if (a, b) == (pc.t_start, pc.t_end) else PolyPiece(a, b, pc.coeffs))
    return TFoT(tuple(pieces), id=traj.id)


def duration(traj: Optional[TFoT]) -> float:
    return 0.0 if traj is None else traj.duration


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    """A labeled finite set of trajectories sharing one spatial dimension."""

    dim: int
    trajectories: tuple = ()

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        dim = int(self.dim)
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        for tr in trajs:
            if tr.dim != dim:
                raise DimensionMismatchError(
                    f"trajectory {tr.id!r} has dim {tr.dim}, set has dim {dim}"
                )
        ids = [tr.id for tr in trajs]
        if len(set(ids)) != len(ids):
            raise ValueError("trajectory ids must be unique within a set")
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "trajectories", trajs)

    @classmethod
    def of(cls, trajectories: Iterable[TFoT], dim: Optional[int] = None) -> "TrajectorySet":
        """Build a set, labeling unnamed members by position."""
        trajs = list(trajectories)
        if dim is None:
            if not trajs:
                raise ValueError("dim is required for an empty set")
            dim = trajs[0].dim
        labeled = [tr if tr.id else tr.with_id(str(k)) for k, tr in enumerate(trajs)]
        return cls(dim, tuple(labeled))

    def __len__(self):
        return len(self.trajectories)

    def __iter__(self) -> Iterator[TFoT]:
        return iter(self.trajectories)

    def __getitem__(self, k):
        return self.trajectories[k]

    def __eq__(self, other):
        if not isinstance(other, TrajectorySet):
            return NotImplemented
        return self.dim == other.dim and self.trajectories == other.trajectories

    __hash__ = None

    def clip(self, window) -> "TrajectorySet":
        """Clip every member; members with an empty clip are dropped."""
        kept = [c for c in (clip(tr, window) for tr in self.trajectories) if c is not None]
        return TrajectorySet(self.dim, tuple(kept))

    def alive_at(self, t: float) -> list:
        return [tr for tr in self.trajectories if tr.t_start <= t <= tr.t_end]

    @property
    def span(self) -> Optional[tuple]:
        if not self.trajectories:
            return None
        return (min(tr.t_start for tr in self), max(tr.t_end for tr in self))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "trajectories": [tr.to_dict() for tr in self.trajectories]}

    @classmethod
    def from_dict(cls, data) -> "TrajectorySet":
        try:
            dim = data["dim"]
            if isinstance(dim, bool) or not isinstance(dim, int):
                raise FormatError("'dim' must be an integer")
            trajs = []
            for entry in data["trajectories"]:
                pieces = tuple(
                    PolyPiece(pc["t_start"], pc["t_end"], pc["coeffs"]) for pc in entry["pieces"]
                )
                trajs.append(TFoT(pieces, id=str(entry["id"])))
        except FormatError:
            raise
        except DimensionMismatchError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed trajectory set: {exc}") from exc
        for tr in trajs:
            if tr.dim != dim:
                raise DimensionMismatchError(f"trajectory {tr.id!r} has dim {tr.dim}, file declares {dim}")
        try:
            return cls(dim, tuple(trajs))
        except DimensionMismatchError:
            raise
        except ValueError as exc:
            raise FormatError(str(exc)) from exc


def read_trajectory_set(path) -> TrajectorySet:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise FormatError(f"{path}: top level must be an object")
    return TrajectorySet.from_dict(data)


def write_trajectory_set(tset: TrajectorySet, path) -> None:
    Path(path).write_text(json.dumps(tset.to_dict(), indent=2) + "\n")


def piecewise_from_samples(times: Sequence[float], positions, velocities, id="") -> TFoT:
    """Cubic Hermite trajectory through sampled positions and velocities.

    Each piece is rewritten in absolute-time monomials so it follows the
    package-wide coefficient convention.
    """
    times = np.asarray(times, dtype=float)
    pos = np.asarray(positions, dtype=float)
    vel = np.asarray(velocities, dtype=float)
    if times.ndim != 1 or len(times) < 2:
        raise ValueError("need at least two sample times")
    pieces = []
    for k in range(len(times) - 1):
        t0, t1 = times[k], times[k + 1]
        h = t1 - t0
        p0, p1, v0, v1 = pos[k], pos[k + 1], vel[k], vel[k + 1]
        # local cubic in s = t - t0
        a0, a1 = p0, v0
        a2 = (3 * (p1 - p0) / h - 2 * v0 - v1) / h
        a3 = (2 * (p0 - p1) / h + v0 + v1) / h**2
        local = np.stack([a0, a1, a2, a3], axis=1)
        pieces.append(PolyPiece(t0, t1, shift_polynomial(local, -t0)))
    return TFoT(tuple(pieces), id=id)


def shift_polynomial(coeffs, shift: float) -> np.ndarray:
    """Coefficients of ``q(t) = p(t + shift)`` for each row of ``coeffs``."""
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    n = coeffs.shape[1]
    out = np.zeros_like(coeffs)
    for j in range(n):
        for i in range(j + 1):
            out[:, i] += coeffs[:, j] * math.comb(j, i) * shift ** (j - i)
    return out
