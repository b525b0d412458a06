"""Randomized checks of the distance axioms and related properties.

Each check draws its own inputs from a seeded generator and returns an
:class:`AxiomReport` counting failures. The same routines back the
``starid axioms`` command and the test suite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .assignment import AssignmentProblem, brute_force, solve
from .metric import star_id
from .pairwise import MetricConfig, capped_pair_distance, minkowski_combine, pair_distance
from .trajectory import PolyPiece, TFoT, TrajectorySet

__all__ = [
    "AxiomReport",
    "random_tfot",
    "random_set",
    "random_triple",
    "random_problem",
    "check_pair_axioms",
    "check_set_axioms",
    "check_minkowski",
    "check_assignment",
    "check_cap_dominance",
    "run_all",
]


@dataclass
class AxiomReport:
    name: str
    trials: int = 0
    failures: int = 0
    worst: float = 0.0
    examples: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.trials > 0 and self.failures == 0

    def record(self, ok: bool, excess: float = 0.0, detail: Optional[dict] = None, keep: int = 3):
        self.trials += 1
        self.worst = max(self.worst, excess)
        if not ok:
            self.failures += 1
            if detail is not None and len(self.examples) < keep:
                self.examples.append(detail)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.failures}/{self.trials} failures, worst excess {self.worst:.3e}"


def random_tfot(
    rng: np.random.Generator,
    dim: int,
    id: str = "",
    horizon: float = 10.0,
    max_pieces: int = 3,
    max_order: int = 2,
    scale: float = 3.0,
) -> TFoT:
    """Random piecewise polynomial on a random sub-interval of ``[0, horizon]``.

    Coefficients are drawn in time local to each piece and shifted to
    absolute time, which keeps values moderate far from the origin.
    """
    t0 = float(rng.uniform(0, 0.8 * horizon))
    t1 = float(t0 + rng.uniform(0.05 * horizon, horizon - t0))
    n = int(rng.integers(1, max_pieces + 1))
    edges = [t0, *np.sort(rng.uniform(t0, t1, n - 1)), t1]
    edges = [e for i, e in enumerate(edges) if i == 0 or e > edges[i - 1]]
    order = int(rng.integers(0, max_order + 1))
    pieces = []
    for a, b in zip(edges, edges[1:]):
        local = rng.normal(0, scale, (dim, order + 1))
        local[:, 1:] /= max(b - a, 1.0) ** np.arange(1, order + 1)
        # p(t) = local(t - a)
        powers = np.zeros((dim, order + 1))
        for j in range(order + 1):
            for k in range(j + 1):
                powers[:, k] += local[:, j] * math.comb(j, k) * (-a) ** (j - k)
        pieces.append(PolyPiece(float(a), float(b), powers))
    return TFoT(tuple(pieces), id=id)


def random_set(rng: np.random.Generator, dim: int, max_size: int = 4, prefix: str = "x") -> TrajectorySet:
    size = int(rng.integers(0, max_size + 1))
    return TrajectorySet(dim, tuple(random_tfot(rng, dim, id=f"{prefix}{k}") for k in range(size)))


def _related(rng: np.random.Generator, f: TFoT, dim: int) -> TFoT:
    """Something close to ``f`` in time or value, so triangles are not trivially loose."""
    u = rng.random()
    if u < 0.4:
        a, b = sorted(rng.uniform(f.t_start, f.t_end, 2))
        if b - a > 1e-3:
            return f.clip(a, b)
    if u < 0.7:
        bump = rng.normal(0, 1.0, (dim, 1))
        return TFoT(tuple(PolyPiece(p.t_start, p.t_end, p.coeffs + np.pad(bump, ((0, 0), (0, p.coeffs.shape[1] - 1))))
                          for p in f.pieces), id=f.id)
    return random_tfot(rng, dim)


def random_triple(rng: np.random.Generator, dim: int):
    f = random_tfot(rng, dim, id="f")
    g = random_tfot(rng, dim, id="g") if rng.random() < 0.5 else _related(rng, f, dim).with_id("g")
    h = _related(rng, f if rng.random() < 0.5 else g, dim).with_id("h")
    return f, g, h


def random_problem(rng: np.random.Generator, max_m: int = 5, max_n: int = 5, integer: bool = False) -> AssignmentProblem:
    m, n = int(rng.integers(0, max_m + 1)), int(rng.integers(0, max_n + 1))
    if integer:
        draw = lambda *shape: rng.integers(0, 20, shape).astype(float)  # noqa: E731
    else:
        draw = lambda *shape: rng.uniform(0, 10, shape)  # noqa: E731
    return AssignmentProblem(draw(m, n), draw(m), draw(n))


def _triangle(report, d_ac, d_ab, d_bc, slack, detail):
    excess = d_ac - (d_ab + d_bc)
    bound = slack * max(d_ac, d_ab + d_bc, 1e-300)
    report.record(excess <= bound, max(excess, 0.0) / max(d_ac, 1e-300), detail)


def check_pair_axioms(
    trials: int = 1000,
    seed: int = 0,
    dims: Sequence[int] = (1, 2),
    ps: Sequence[float] = (1.0, 2.0),
    cutoffs: Sequence[float] = (1.0, 10.0),
    sym_tol: float = 1e-9,
    tri_slack: float = 1e-6,
) -> Dict[str, AxiomReport]:
    """Non-negativity, identity, symmetry and triangle inequality of the pair distance."""
    rng = np.random.default_rng(seed)
    reps = {k: AxiomReport(f"pair {k}") for k in ("non-negativity", "identity", "symmetry", "triangle")}
    for _ in range(trials):
        dim = int(rng.choice(dims))
        p = float(rng.choice(ps))
        c = float(rng.choice(cutoffs))
        cfg = MetricConfig.symmetric(c, c, p=p)
        f, g, h = random_triple(rng, dim)
        d_fg, d_gf = pair_distance(f, g, cfg), pair_distance(g, f, cfg)
        d_fh, d_hg = pair_distance(f, h, cfg), pair_distance(h, g, cfg)
        info = {"dim": dim, "p": p, "c": c, "f": f.to_dict(), "g": g.to_dict(), "h": h.to_dict()}
        reps["non-negativity"].record(min(d_fg, d_fh, d_hg) >= 0, max(0.0, -min(d_fg, d_fh, d_hg)), info)
        d_ff = pair_distance(f, f, cfg)
        reps["identity"].record(d_ff == 0.0, d_ff, info)
        asym = abs(d_fg - d_gf)
        reps["symmetry"].record(asym <= sym_tol * max(1.0, d_fg), asym, info)
        _triangle(reps["triangle"], d_fg, d_fh, d_hg, tri_slack, dict(info, d_fg=d_fg, d_fh=d_fh, d_hg=d_hg))
    return reps


def check_set_axioms(
    trials: int = 300,
    seed: int = 0,
    dims: Sequence[int] = (1, 2),
    ps: Sequence[float] = (1.0, 2.0),
    c_s_values: Sequence[float] = (1.0, 10.0),
    c_t_values: Sequence[float] = (1.0, 10.0),
    max_size: int = 4,
    slack: float = 1e-6,
) -> Dict[str, AxiomReport]:
    """The four distance axioms for set-level Star-ID; ``c_S`` and ``c_T`` are drawn independently."""
    rng = np.random.default_rng(seed)
    reps = {k: AxiomReport(f"set {k}") for k in ("non-negativity", "identity", "symmetry", "triangle")}
    for _ in range(trials):
        dim = int(rng.choice(dims))
        p = float(rng.choice(ps))
        cfg = MetricConfig.symmetric(float(rng.choice(c_s_values)), float(rng.choice(c_t_values)), p=p)
        F = random_set(rng, dim, max_size, "f")
        G = random_set(rng, dim, max_size, "g")
        H = random_set(rng, dim, max_size, "h")
        if len(F) and rng.random() < 0.5:
            # share members so the triangle is tested near tightness
            shared = (list(F) + list(H))[:max_size]
            H = TrajectorySet(dim, tuple(tr.with_id(f"h{k}") for k, tr in enumerate(shared)))
        d_fg, d_gf = star_id(F, G, cfg), star_id(G, F, cfg)
        d_fh, d_hg = star_id(F, H, cfg), star_id(H, G, cfg)
        info = {"dim": dim, "p": p, "c_s": cfg.c_sfa, "c_t": cfg.c_tfa,
                "F": F.to_dict(), "G": G.to_dict(), "H": H.to_dict()}
        reps["non-negativity"].record(min(d_fg, d_fh, d_hg) >= 0, max(0.0, -min(d_fg, d_fh, d_hg)), info)
        d_ff = star_id(F, F, cfg)
        reps["identity"].record(d_ff == 0.0, d_ff, info)
        asym = abs(d_fg - d_gf)
        reps["symmetry"].record(asym <= slack * max(1.0, d_fg), asym, info)
        _triangle(reps["triangle"], d_fg, d_fh, d_hg, slack, dict(info, d_fg=d_fg, d_fh=d_fh, d_hg=d_hg))
    return reps


def check_minkowski(trials: int = 1000, seed: int = 0, tol: float = 1e-12) -> Dict[str, AxiomReport]:
    """Triangle inequality of the Minkowski combination of two pseudo-metrics.

    Points are pairs ``(x, y)`` of reals; the two components are the absolute
    differences of the first and of the second coordinate, each a pseudo-metric
    on the pairs.
    """
    rng = np.random.default_rng(seed)
    rep = AxiomReport("minkowski triangle")
    for _ in range(trials):
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        a, b, c = rng.normal(0, 5, (3, 2))
        d1 = lambda u, v: abs(u[0] - v[0])  # noqa: E731
        d2 = lambda u, v: abs(u[1] - v[1])  # noqa: E731
        ac = float(minkowski_combine(d1(a, c), d2(a, c), p))
        ab = float(minkowski_combine(d1(a, b), d2(a, b), p))
        bc = float(minkowski_combine(d1(b, c), d2(b, c), p))
        excess = ac - ab - bc
        rep.record(excess <= tol, max(excess, 0.0), {"p": p, "a": a.tolist(), "b": b.tolist(), "c": c.tolist()})
    return {"minkowski": rep}


def check_assignment(trials: int = 200, seed: int = 0, max_size: int = 5) -> Dict[str, AxiomReport]:
    """Hungarian optimum equals exhaustive enumeration."""
    rng = np.random.default_rng(seed)
    rep = AxiomReport("assignment optimality")
    for k in range(trials):
        prob = random_problem(rng, max_size, max_size, integer=bool(k % 2))
        fast, slow = solve(prob).total_cost, brute_force(prob).total_cost
        rep.record(fast == slow, abs(fast - slow), {"pair_cost": prob.pair_cost.tolist(),
                                                    "row_unassigned": prob.row_unassigned.tolist(),
                                                    "col_unassigned": prob.col_unassigned.tolist()})
    return {"assignment": rep}


def check_cap_dominance(trials: int = 10_000, seed: int = 0) -> Dict[str, AxiomReport]:
    """``capped_pair_distance**p`` never exceeds the cost of leaving both unassigned."""
    rng = np.random.default_rng(seed)
    rep = AxiomReport("cap dominance")
    for _ in range(trials):
        dim = int(rng.integers(1, 4))
        p = float(rng.choice([1.0, 2.0, 3.0]))
        c_t = float(rng.choice([0.1, 1.0, 10.0]))
        cfg = MetricConfig.symmetric(float(rng.choice([1.0, 10.0, 100.0])), c_t, p=p)
        f, g = random_tfot(rng, dim), random_tfot(rng, dim)
        cap = dim * (cfg.c_tfa * g.duration) ** p + dim * (cfg.c_tmd * f.duration) ** p
        d = capped_pair_distance(f, g, cfg)
        rep.record(d ** p <= cap, max(0.0, d ** p - cap), {"p": p, "dim": dim})
    return {"cap": rep}


CHECKS: Dict[str, Callable[..., Dict[str, AxiomReport]]] = {
    "pair": check_pair_axioms,
    "set": check_set_axioms,
    "minkowski": check_minkowski,
    "assignment": check_assignment,
    "cap": check_cap_dominance,
}


def run_all(seed: int = 0, scale: float = 1.0, only: Optional[Sequence[str]] = None) -> List[AxiomReport]:
    """Run every check (or those named in ``only``) with trial counts multiplied by ``scale``."""
    defaults = {"pair": 1000, "set": 300, "minkowski": 1000, "assignment": 200, "cap": 10_000}
    out = []
    for name, fn in CHECKS.items():
        if only and name not in only:
            continue
        trials = max(1, int(round(defaults[name] * scale)))
        out.extend(fn(trials=trials, seed=seed).values())
    return out
