"""Simulation scenarios, polynomial trajectory fitting and Monte-Carlo runs.

Two scenarios are provided:

* a multi-target scenario of constant-velocity targets observed through
  noisy position measurements, one target never detected;
* a single maneuvering target (straight legs joined by constant-turn arcs)
  observed by bearing-only sensors at the corners of the area.

Estimates are produced by fitting a polynomial over a sliding window at each
measurement time and stitching the newest segment of every fit into one
trajectory per target.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .baselines import BaselineParams
from .errors import (
    ConvergenceError,
    DegenerateGeometryError,
    FormatError,
    UnderdeterminedError,
)
from .metric import MetricSeries, WindowPolicy, windowed_sweep
from .pairwise import MetricConfig
from .trajectory import PolyPiece, TFoT, TrajectorySet, piecewise_from_samples, shift_polynomial

__all__ = [
    "Sensor",
    "TargetSpec",
    "ScenarioSpec",
    "ManeuverSpec",
    "MeasurementLog",
    "BearingFit",
    "gen_multitarget",
    "gen_maneuvering",
    "maneuvering_truth",
    "fit_polynomial_ls",
    "fit_bearing_tfot",
    "estimate_multitarget",
    "estimate_bearing_track",
    "monte_carlo",
    "monte_carlo_maneuvering",
    "load_scenario_spec",
    "wrap_angle",
    "bearing_measurements",
    "fit_residual",
]

_GRID_DIGITS = 12
_TIME_EPS = 1e-9


def wrap_angle(a):
    """Wrap angles into ``(-pi, pi]``."""
    a = np.asarray(a, dtype=float)
    w = np.mod(a + np.pi, 2 * np.pi) - np.pi
    return np.where(w == -np.pi, np.pi, w)


@dataclass(frozen=True)
class Sensor:
    position: Tuple[float, float]
    bearing_noise_var: float = 0.0036

    def __post_init__(self):
        if self.bearing_noise_var < 0:
            raise ValueError("noise variance must be non-negative")
        object.__setattr__(self, "position", tuple(float(x) for x in self.position))


@dataclass(frozen=True)
class TargetSpec:
    """Constant-velocity target moving from ``start`` to ``end`` over ``[t_birth, t_death]``."""

    t_birth: float
    t_death: float
    start: Tuple[float, float]
    end: Tuple[float, float]
    detected: bool = True

    def __post_init__(self):
        if not self.t_birth < self.t_death:
            raise ValueError("target birth must precede death")
        object.__setattr__(self, "start", tuple(float(x) for x in self.start))
        object.__setattr__(self, "end", tuple(float(x) for x in self.end))

    def coefficients(self, order: int) -> np.ndarray:
        """Absolute-time polynomial coefficients, shape ``(2, order + 1)``."""
        start, end = np.array(self.start), np.array(self.end)
        vel = (end - start) / (self.t_death - self.t_birth)
        coeffs = np.zeros((2, max(order, 1) + 1))
        coeffs[:, 0] = start - vel * self.t_birth
        coeffs[:, 1] = vel
        return coeffs


def _default_targets():
    return (
        TargetSpec(1, 100, (-2000, -8000), (8000, 14000)),
        TargetSpec(10, 75, (8000, -7000), (-2000, 5000)),
        TargetSpec(1, 90, (-2500, 13000), (7500, -5000)),
        TargetSpec(5, 85, (1000, -6000), (6000, 12000), detected=False),
    )


@dataclass(frozen=True)
class ScenarioSpec:
    """Multi-target scenario. Lengths in meters, times in seconds."""

    area: Tuple[Tuple[float, float], Tuple[float, float]] = ((-3000.0, 9000.0), (-9000.0, 15000.0))
    targets: Tuple[TargetSpec, ...] = field(default_factory=_default_targets)
    order: int = 2
    step: float = 1.0
    noise_var: float = 10000.0
    fit_window: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.order < 0:
            raise ValueError("order must be >= 0")
        if self.noise_var < 0:
            raise ValueError("noise variance must be non-negative")
        object.__setattr__(self, "targets", tuple(self.targets))

    @property
    def horizon(self) -> Tuple[float, float]:
        return (min(t.t_birth for t in self.targets), max(t.t_death for t in self.targets))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["targets"] = [asdict(t) for t in self.targets]
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioSpec":
        try:
            kw = dict(data)
            if "targets" in kw:
                kw["targets"] = tuple(TargetSpec(**t) for t in kw["targets"])
            if "area" in kw:
                kw["area"] = tuple(tuple(float(x) for x in ax) for ax in kw["area"])
            return cls(**kw)
        except (TypeError, ValueError) as exc:
            raise FormatError(f"invalid scenario spec: {exc}") from exc


@dataclass(frozen=True)
class ManeuverSpec:
    """Single maneuvering target seen by bearing-only sensors.

    ``legs`` lists ``(n_steps, turn_rate)``; a zero turn rate is a straight
    leg. The final leg is extended if the legs are shorter than the run.
    """

    step: float = 0.1
    n_steps: int = 200
    start: Tuple[float, float] = (-1.2, -1.2)
    speed: float = 0.25
    heading: float = math.radians(35.0)
    legs: Tuple[Tuple[int, float], ...] = ((50, 0.0), (50, 0.45), (40, 0.0), (60, -0.4))
    sensors: Tuple[Sensor, ...] = (
        Sensor((-2.0, -2.0)),
        Sensor((2.0, -2.0)),
        Sensor((2.0, 2.0)),
        Sensor((-2.0, 2.0)),
    )
    order: int = 1
    fit_window: float = 1.0
    seed: int = 0

    @property
    def times(self) -> np.ndarray:
        return np.round(self.step * np.arange(1, self.n_steps + 1), _GRID_DIGITS)


@dataclass(frozen=True, eq=False)
class MeasurementLog:
    """Time-stamped measurements grouped by source.

    ``channels`` maps a source id (target for position measurements, sensor
    for bearings) to ``(times, values)`` with ``values`` of shape ``(N, d)``.
    Bearing logs also record which target each channel observes in ``target``.
    """

    kind: str
    channels: Dict[str, Tuple[np.ndarray, np.ndarray]]
    target: Optional[str] = None

    def __eq__(self, other):
        if not isinstance(other, MeasurementLog):
            return NotImplemented
        if self.kind != other.kind or self.channels.keys() != other.channels.keys():
            return False
        return all(
            np.array_equal(self.channels[k][0], other.channels[k][0])
            and np.array_equal(self.channels[k][1], other.channels[k][1])
            for k in self.channels
        )

    __hash__ = None

    def csv_text(self) -> str:
        width = max((v.shape[1] for _, v in self.channels.values()), default=1)
        lines = ["sensor_id,time," + ",".join(f"value{i + 1}" for i in range(width))]
        for sid, (times, values) in self.channels.items():
            for t, row in zip(times, values):
                lines.append(f"{sid},{float(t)!r}," + ",".join(repr(float(x)) for x in row))
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        Path(path).write_text(self.csv_text())


def gen_multitarget(spec: ScenarioSpec, rng: Optional[np.random.Generator] = None):
    """Truth trajectories and noisy position measurements.

    Undetected targets produce no measurements at all.
    """
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    truths = []
    channels = {}
    sigma = math.sqrt(spec.noise_var)
    for k, tgt in enumerate(spec.targets):
        tid = f"T{k + 1}"
        traj = TFoT.polynomial(tgt.coefficients(spec.order), tgt.t_birth, tgt.t_death, id=tid)
        truths.append(traj)
        if not tgt.detected:
            continue
        first = math.ceil(tgt.t_birth / spec.step - _TIME_EPS)
        last = math.floor(tgt.t_death / spec.step + _TIME_EPS)
        times = np.round(spec.step * np.arange(first, last + 1), _GRID_DIGITS)
        values = traj.values(times)
        if sigma > 0:
            values = values + rng.normal(0.0, sigma, size=values.shape)
        channels[tid] = (times, values)
    return TrajectorySet(2, tuple(truths)), MeasurementLog("position", channels)


def _select(times, values, window):
    w0, w1 = window
    mask = (times >= w0 - _TIME_EPS) & (times <= w1 + _TIME_EPS)
    return times[mask], values[mask]


def _channel(meas, source):
    if isinstance(meas, MeasurementLog):
        if source is None:
            if len(meas.channels) != 1:
                raise ValueError("source is required for a log with several channels")
            source = next(iter(meas.channels))
        return meas.channels[source]
    return meas


def fit_polynomial_ls(meas, window, order: int, source: Optional[str] = None, id: str = "") -> TFoT:
    """Least-squares polynomial of degree ``order`` through the measurements in ``window``.

    ``meas`` is a :class:`MeasurementLog` (with ``source`` naming the channel)
    or a ``(times, values)`` pair. The fit is done in centered, scaled time
    and converted back to absolute-time coefficients.
    """
    times, values = _channel(meas, source)
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    ts, ys = _select(times, values, window)
    if len(np.unique(ts)) < order + 1:
        raise UnderdeterminedError(f"{len(ts)} measurement times cannot determine a degree-{order} fit")
    centre = 0.5 * (ts.min() + ts.max())
    scale = max(0.5 * (ts.max() - ts.min()), 1.0)
    u = (ts - centre) / scale
    V = np.vander(u, order + 1, increasing=True)
    sol, *_ = np.linalg.lstsq(V, ys, rcond=None)
    local = (sol / scale ** np.arange(order + 1)[:, None]).T
    return TFoT.polynomial(shift_polynomial(local, -centre), window[0], window[1], id=id)


def fit_residual(traj: TFoT, times, values) -> float:
    """Sum of squared residuals of ``traj`` against measurements."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    return float(((traj.values(np.asarray(times, dtype=float)) - values) ** 2).sum())


def _stitch(pieces: List[PolyPiece], id: str) -> Optional[TFoT]:
    return TFoT(tuple(pieces), id=id) if pieces else None


def estimate_multitarget(log: MeasurementLog, spec: ScenarioSpec) -> TrajectorySet:
    """Sliding-window polynomial estimates, one stitched trajectory per detected target.

    The estimate starts at the first measurement time whose window holds
    ``order + 1`` points; earlier instants count as missed. Every later fit
    contributes its newest segment (previous sample to now).
    """
    estimates = []
    for tid, (times, values) in log.channels.items():
        pieces = []
        started = False
        for k in range(1, len(times)):
            t = times[k]
            window = (max(times[0], round(t - spec.fit_window, _GRID_DIGITS)), t)
            try:
                fit = fit_polynomial_ls((times, values), window, spec.order)
            except UnderdeterminedError:
                continue
            if started:
                pieces.append(PolyPiece(times[k - 1], t, fit.pieces[0].coeffs))
            started = True
        traj = _stitch(pieces, f"E{tid[1:]}" if tid.startswith("T") else f"E-{tid}")
        if traj is not None:
            estimates.append(traj)
    return TrajectorySet(2, tuple(estimates))


# --- maneuvering target with bearing-only sensors -------------------------

def _ct_step(pos, vel, omega, dt):
    if omega == 0.0:
        return pos + vel * dt, vel
    s, c = math.sin(omega * dt), math.cos(omega * dt)
    vx, vy = vel
    new_pos = pos + np.array([vx * s - vy * (1 - c), vx * (1 - c) + vy * s]) / omega
    new_vel = np.array([vx * c - vy * s, vx * s + vy * c])
    return new_pos, new_vel


def maneuvering_truth(mspec: ManeuverSpec) -> TFoT:
    """Deterministic truth: straight and constant-turn legs, Hermite-interpolated."""
    times = mspec.times
    rates = []
    for n, omega in mspec.legs:
        rates.extend([float(omega)] * int(n))
    while len(rates) < len(times) - 1:
        rates.append(rates[-1] if rates else 0.0)
    pos = np.array(mspec.start, dtype=float)
    vel = mspec.speed * np.array([math.cos(mspec.heading), math.sin(mspec.heading)])
    positions, velocities = [pos], [vel]
    for k in range(len(times) - 1):
        pos, vel = _ct_step(pos, vel, rates[k], times[k + 1] - times[k])
        positions.append(pos)
        velocities.append(vel)
    return piecewise_from_samples(times, positions, velocities, id="T1")


def bearing_measurements(truth: TFoT, sensors: Sequence[Sensor], times, rng) -> MeasurementLog:
    pos = truth.values(np.asarray(times, dtype=float))
    channels = {}
    for i, s in enumerate(sensors):
        clean = np.arctan2(pos[:, 1] - s.position[1], pos[:, 0] - s.position[0])
        noise = rng.normal(0.0, math.sqrt(s.bearing_noise_var), size=len(clean)) if s.bearing_noise_var > 0 else 0.0
        channels[f"S{i + 1}"] = (np.asarray(times, dtype=float), wrap_angle(clean + noise)[:, None])
    return MeasurementLog("bearing", channels, target=truth.id)


def gen_maneuvering(mspec: ManeuverSpec, rng: Optional[np.random.Generator] = None):
    rng = np.random.default_rng(mspec.seed) if rng is None else rng
    truth = maneuvering_truth(mspec)
    return TrajectorySet(2, (truth,)), bearing_measurements(truth, mspec.sensors, mspec.times, rng)


@dataclass(frozen=True)
class BearingFit:
    tfot: TFoT
    converged: bool
    iterations: int
    cost: float
    degenerate: bool


def _triangulate(bearings, sensors) -> Optional[np.ndarray]:
    """Least-squares intersection of bearing lines; ``None`` if ill-posed."""
    A = np.column_stack([np.sin(bearings), -np.cos(bearings)])
    b = (A * sensors).sum(axis=1)
    if np.linalg.matrix_rank(A, tol=1e-9) < 2:
        return None
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return sol


def fit_bearing_tfot(
    meas: MeasurementLog,
    sensors: Sequence[Sensor],
    window,
    order: int = 1,
    max_iter: int = 100,
    step_tol: float = 1e-9,
    id: str = "",
) -> BearingFit:
    """Fit a straight-line trajectory to bearing measurements by Levenberg-Marquardt.

    Minimizes the sum over window times and sensors of the squared wrapped
    bearing residual. The starting point comes from triangulating the first
    and last instants of the window.

    Raises :class:`DegenerateGeometryError` when fewer than two distinct
    sensor positions are available and :class:`ConvergenceError` (carrying
    the best iterate) if the step criterion is not met in ``max_iter``
    iterations.
    """
    if order != 1:
        raise ValueError("bearing fits support order 1 only")
    S = np.array([s.position for s in sensors], dtype=float)
    if len({tuple(p) for p in S}) < 2:
        raise DegenerateGeometryError("bearing-only fitting needs at least two distinct sensor positions")
    channel_ids = list(meas.channels)
    if len(channel_ids) != len(sensors):
        raise ValueError("one measurement channel per sensor is required")
    times = None
    cols = []
    for sid in channel_ids:
        ts, ys = _select(*meas.channels[sid], window)
        if times is None:
            times = ts
        elif not np.array_equal(times, ts):
            raise ValueError("sensors must be synchronous")
        cols.append(ys[:, 0])
    Y = np.column_stack(cols)  # (N, sensors)
    if len(times) < 2:
        raise UnderdeterminedError("bearing fit needs at least two measurement times")

    centre = 0.5 * (times[0] + times[-1])
    tau = times - centre
    p0 = _triangulate(Y[0], S)
    p1 = _triangulate(Y[-1], S)
    if p0 is None or p1 is None:
        raise DegenerateGeometryError("bearing lines do not intersect")
    slope = (p1 - p0) / (times[-1] - times[0])
    mid = p0 + slope * (centre - times[0])
    beta = np.array([mid[0], slope[0], mid[1], slope[1]])

    def residuals(b):
        x = b[0] + b[1] * tau
        y = b[2] + b[3] * tau
        dx = x[:, None] - S[None, :, 0]
        dy = y[:, None] - S[None, :, 1]
        return wrap_angle(Y - np.arctan2(dy, dx)), dx, dy

    def jacobian(dx, dy):
        rho2 = dx * dx + dy * dy
        gx = (dy / rho2).reshape(-1)   # d residual / d x
        gy = (-dx / rho2).reshape(-1)  # d residual / d y
        tt = np.repeat(tau, S.shape[0])
        return np.column_stack([gx, gx * tt, gy, gy * tt])

    r, dx, dy = residuals(beta)
    cost = float((r * r).sum())
    lam = 1e-3
    converged = False
    it = 0
    J = jacobian(dx, dy)
    for it in range(1, max_iter + 1):
        g = J.T @ r.reshape(-1)
        H = J.T @ J
        accepted = False
        while lam < 1e12:
            A = H + lam * np.diag(np.maximum(np.diag(H), 1e-12))
            try:
                delta = -np.linalg.solve(A, g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            cand = beta + delta
            rc, dxc, dyc = residuals(cand)
            cc = float((rc * rc).sum())
            if cc <= cost:
                beta, r, dx, dy, cost = cand, rc, dxc, dyc, cc
                J = jacobian(dx, dy)
                lam = max(lam / 3, 1e-12)
                accepted = True
                break
            lam *= 4
        if not accepted:
            # no descent direction left at float resolution
            converged = True
            break
        if np.linalg.norm(delta) <= step_tol * (np.linalg.norm(beta) + step_tol):
            converged = True
            break

    H = J.T @ J
    degenerate = bool(np.linalg.cond(H) > 1e12)
    coeffs = shift_polynomial(np.array([[beta[0], beta[1]], [beta[2], beta[3]]]), -centre)
    tfot = TFoT.polynomial(coeffs, window[0], window[1], id=id)
    fit = BearingFit(tfot, converged, it, cost, degenerate)
    if not converged:
        raise ConvergenceError(f"bearing fit did not converge in {max_iter} iterations", best=fit, error=cost)
    return fit


def estimate_bearing_track(log: MeasurementLog, mspec: ManeuverSpec) -> TrajectorySet:
    """Sliding-window bearing fits stitched into one estimated trajectory.

    The first fit needs ``order + 1`` sampling instants, so the estimate
    starts at the instant of that fit and the earlier ones count as missed.
    """
    times = mspec.times
    pieces = []
    for k in range(mspec.order + 1, len(times)):
        t = times[k]
        window = (max(times[0], round(t - mspec.fit_window, _GRID_DIGITS)), t)
        try:
            fit = fit_bearing_tfot(log, mspec.sensors, window, mspec.order)
        except ConvergenceError as exc:
            fit = exc.best
        pieces.append(PolyPiece(times[k - 1], t, fit.tfot.pieces[0].coeffs))
    return TrajectorySet(2, (_stitch(pieces, "E1"),))


# --- Monte Carlo -----------------------------------------------------------

def _run_seeds(master: int, runs: int) -> List[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(master).spawn(runs)]


def _accumulate(acc, per_cfg):
    if acc is None:
        return [{k: np.array(s.values) for k, s in d.items()} for d in per_cfg]
    for a, d in zip(acc, per_cfg):
        for k, s in d.items():
            a[k] = a[k] + np.array(s.values)
    return acc


def monte_carlo(
    runs: int,
    spec: ScenarioSpec,
    cfgs: Sequence[MetricConfig],
    kinds: Sequence[str] = ("star_id", "ta_star_id"),
    eval_times: Optional[Sequence[float]] = None,
    policy: WindowPolicy = WindowPolicy(),
    base: BaselineParams = BaselineParams(),
) -> List[Dict[str, MetricSeries]]:
    """Mean metric series of the multi-target scenario over ``runs`` noise realizations.

    Run ``r`` draws its noise from the ``r``-th child of ``SeedSequence(spec.seed)``,
    so results do not depend on evaluation order. Returns one
    ``{kind: MetricSeries}`` per configuration.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if eval_times is None:
        t0, t1 = spec.horizon
        eval_times = np.arange(math.floor(t0) + 1, math.floor(t1) + 1, dtype=float)
    acc = None
    for rng in _run_seeds(spec.seed, runs):
        truth, log = gen_multitarget(spec, rng)
        est = estimate_multitarget(log, spec)
        acc = _accumulate(acc, windowed_sweep(truth, est, cfgs, eval_times, policy, kinds, base))
    times = tuple(float(t) for t in eval_times)
    return [{k: MetricSeries(times, tuple(v / runs), k) for k, v in a.items()} for a in acc]


def monte_carlo_maneuvering(
    runs: int,
    mspec: ManeuverSpec,
    cfg: MetricConfig,
    kinds: Sequence[str] = ("ta_star_id", "ospa", "imta"),
    base: BaselineParams = BaselineParams(),
) -> Dict[str, MetricSeries]:
    """Mean metric series of the bearing-only scenario; the truth is fixed across runs."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    truth_traj = maneuvering_truth(mspec)
    truth = TrajectorySet(2, (truth_traj,))
    times = mspec.times
    policy = WindowPolicy(length=mspec.fit_window, start_clamp=float(times[0]))
    base = replace(base, sample_step=mspec.step)
    eval_times = times[1:]
    acc = None
    for rng in _run_seeds(mspec.seed, runs):
        log = bearing_measurements(truth_traj, mspec.sensors, times, rng)
        est = estimate_bearing_track(log, mspec)
        acc = _accumulate(acc, windowed_sweep(truth, est, [cfg], eval_times, policy, kinds, base))
    return {k: MetricSeries(tuple(eval_times), tuple(v / runs), k) for k, v in acc[0].items()}


def load_scenario_spec(path) -> ScenarioSpec:
    """Read a multi-target scenario spec from JSON or TOML."""
    path = Path(path)
    text = path.read_text()
    try:
        if path.suffix.lower() == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            data = tomllib.loads(text)
        else:
            data = json.loads(text)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError(f"{path}: top level must be a table/object")
    return ScenarioSpec.from_dict(data)
