"""Adaptive quadrature of the spatial divergence between two trajectories.

The interval is first split at every piece boundary of either trajectory so
each panel sees smooth polynomials. For the l_p integrand the panels are also
split where a component of ``f - g`` changes sign, since the absolute value
puts a kink there that the error estimator can miss. Panels are then refined
with a nested Gauss-Kronrod 7/15 pair until the summed error estimate meets
``max(abs_tol, rel_tol * |result|, floor)``. For the l_p integrand ``floor``
is the roundoff level of evaluating ``f - g`` in absolute-time monomials; when
the trajectories agree to within that level no tolerance can be met otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConvergenceError, DimensionMismatchError, DomainError
from .trajectory import TFoT

__all__ = ["QuadConfig", "integrate_lp", "integrate_sq", "adaptive_integrate", "lp_norm"]

# Kronrod 15-point abscissae on [-1, 1] (symmetric half incl. centre) and weights.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
# Gauss 7-point weights at the odd-indexed Kronrod nodes (1, 3, 5, 7).
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
_KW = np.concatenate([_WK[:-1], _WK[::-1]])
_GW = np.zeros(15)
_GW[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])

_MAX_PANELS = 200_000


@dataclass(frozen=True)
class QuadConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_depth: int = 40

    def __post_init__(self):
        if not self.rel_tol > 0 or not self.abs_tol > 0:
            raise ValueError("tolerances must be positive")
        if int(self.max_depth) < 1:
            raise ValueError("max_depth must be >= 1")


def lp_norm(diff: np.ndarray, p: float) -> np.ndarray:
    """Row-wise l_p norm over the last axis."""
    a = np.abs(diff)
    if p == 1:
        return a.sum(axis=-1)
    if p == 2:
        return np.sqrt((a * a).sum(axis=-1))
    return (a ** p).sum(axis=-1) ** (1.0 / p)


def adaptive_integrate(fun: Callable[[np.ndarray], np.ndarray], breakpoints, cfg: QuadConfig = QuadConfig(),
                       floor: float = 0.0) -> float:
    """Integrate a vectorized ``fun`` over consecutive ``breakpoints``.

    ``fun`` receives an array of times of shape ``(panels, 15)`` and must
    return values of the same shape.
    """
    bp = np.asarray(breakpoints, dtype=float)
    if len(bp) < 2:
        return 0.0
    a, b = bp[:-1], bp[1:]
    keep = b > a
    a, b = a[keep], b[keep]
    if len(a) == 0:
        return 0.0
    depth = np.zeros(len(a), dtype=int)
    total_len = float(b[-1] - bp[0])
    k_est, e_est = _gk15(fun, a, b)
    while True:
        result = math.fsum(k_est)
        err = math.fsum(e_est)
        tol = max(cfg.abs_tol, cfg.rel_tol * abs(result), floor)
        if err <= tol:
            return result
        refine = (e_est > tol * (b - a) / total_len) & (depth < cfg.max_depth)
        if not np.any(refine):
            raise ConvergenceError(
                f"quadrature error estimate {err:.3e} exceeds tolerance {tol:.3e} at max depth",
                best=result,
                error=err,
            )
        if len(a) + int(refine.sum()) > _MAX_PANELS:
            raise ConvergenceError("quadrature panel budget exhausted", best=result, error=err)
        ra, rb, rd = a[refine], b[refine], depth[refine]
        mid = 0.5 * (ra + rb)
        na = np.concatenate([ra, mid])
        nb = np.concatenate([mid, rb])
        nk, ne = _gk15(fun, na, nb)
        keep = ~refine
        a = np.concatenate([a[keep], na])
        b = np.concatenate([b[keep], nb])
        depth = np.concatenate([depth[keep], rd + 1, rd + 1])
        k_est = np.concatenate([k_est[keep], nk])
        e_est = np.concatenate([e_est[keep], ne])


def _gk15(fun, a, b):
    half = 0.5 * (b - a)
    centre = 0.5 * (a + b)
    ts = centre[:, None] + half[:, None] * _NODES[None, :]
    vals = fun(ts)
    k = half * (vals @ _KW)
    g = half * (vals @ _GW)
    return k, np.abs(k - g)


def _check_pair(f: TFoT, g: TFoT, interval):
    if f.dim != g.dim:
        raise DimensionMismatchError(f"dimension mismatch: {f.dim} vs {g.dim}")
    t1, t2 = float(interval[0]), float(interval[1])
    if t1 > t2:
        raise DomainError(f"interval [{t1}, {t2}] is reversed")
    if t1 < max(f.t_start, g.t_start) or t2 > min(f.t_end, g.t_end):
        raise DomainError(f"interval [{t1}, {t2}] outside the common domain")
    return t1, t2


def _panels(f: TFoT, g: TFoT, t1: float, t2: float) -> np.ndarray:
    inner = np.concatenate([f.breakpoints, g.breakpoints])
    inner = inner[(inner > t1) & (inner < t2)]
    return np.unique(np.concatenate([[t1, t2], inner]))


def _stack_at(traj: TFoT, ts: np.ndarray, width: int) -> np.ndarray:
    idx = np.clip(np.searchsorted(traj._starts, ts, side="right") - 1, 0, len(traj.pieces) - 1)
    st = traj._stack[idx]
    if st.shape[-1] < width:
        st = np.concatenate([st, np.zeros(st.shape[:-1] + (width - st.shape[-1],))], axis=-1)
    return st


def _real_roots(poly: np.ndarray) -> list:
    """Real roots of ``sum_j poly[j] * s**j`` with a nonzero leading term."""
    deg = len(poly) - 1
    if deg < 1:
        return []
    if deg == 1:
        return [-poly[0] / poly[1]]
    if deg == 2:
        c, b, a = poly
        disc = b * b - 4 * a * c
        if disc < 0:
            return []
        q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
        return [q / a] if q == 0 else [q / a, c / q]
    zs = np.roots(poly[::-1])
    return [z.real for z in zs if abs(z.imag) <= 1e-9 * (1 + abs(z.real))]


def _component_roots(f: TFoT, g: TFoT, edges: np.ndarray) -> np.ndarray:
    """Real roots of each component of ``f - g`` strictly inside each panel."""
    width = max(f._stack.shape[-1], g._stack.shape[-1])
    if width < 2:
        return np.zeros(0)
    centre = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    diff = _stack_at(f, centre, width) - _stack_at(g, centre, width)  # (P, dim, W)
    # local variable s in [-1, 1] with t = centre + half * s:
    # local[j] = half**j * sum_k diff[k] * C(k, j) * centre**(k - j)
    k = np.arange(width)
    binom = np.array([[math.comb(a, b) for b in range(width)] for a in range(width)], dtype=float)
    expo = np.clip(k[:, None] - k[None, :], 0, None)
    trans = binom[None] * centre[:, None, None] ** expo[None] * half[:, None, None] ** k[None, None, :]
    local = np.einsum("pdk,pkj->pdj", diff, trans)
    scale = np.abs(local).max(axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        poly = local / scale
    # |c0| > sum |c_j| rules out a root with |s| <= 1
    maybe = (scale[..., 0] > 0) & ~(np.abs(poly[..., 0]) > np.abs(poly[..., 1:]).sum(axis=-1))
    found = []
    for pi, di in zip(*np.nonzero(maybe)):
        row = poly[pi, di]
        # negligible leading terms only move roots far outside [-1, 1]
        nz = np.nonzero(np.abs(row) > 1e-13)[0]
        for z in _real_roots(row[: nz[-1] + 1]):
            if -1 < z < 1:
                found.append(centre[pi] + half[pi] * z)
    return np.asarray(found, dtype=float)


_ROUNDOFF_ULPS = 64


def _condition_magnitude(traj: TFoT, ts: np.ndarray) -> np.ndarray:
    """``sum_j |c_j| |t|^j`` per component: bounds the rounding error of evaluation."""
    st = np.abs(_stack_at(traj, ts, traj._stack.shape[-1]))
    powers = np.abs(ts)[:, None] ** np.arange(st.shape[-1])[None, :]
    return np.einsum("ndk,nk->nd", st, powers)


def _roundoff_floor(f: TFoT, g: TFoT, edges: np.ndarray, p: float) -> float:
    ts = np.concatenate([edges, 0.5 * (edges[:-1] + edges[1:])])
    mag = (_condition_magnitude(f, ts) + _condition_magnitude(g, ts)).max()
    return _ROUNDOFF_ULPS * np.finfo(float).eps * mag * f.dim ** (1.0 / p) * (edges[-1] - edges[0])


def integrate_lp(f: TFoT, g: TFoT, interval, p: float, cfg: QuadConfig = QuadConfig()) -> float:
    """Integral of ``||f(t) - g(t)||_p`` over ``interval`` (meter-seconds)."""
    if not 1 <= p < math.inf:
        raise ValueError("p must satisfy 1 <= p < inf")
    t1, t2 = _check_pair(f, g, interval)
    if t1 == t2:
        return 0.0

    def integrand(ts):
        return lp_norm(f.values(ts) - g.values(ts), p)

    edges = _panels(f, g, t1, t2)
    roots = _component_roots(f, g, edges)
    if len(roots):
        roots = roots[(roots > t1) & (roots < t2)]
        edges = np.unique(np.concatenate([edges, roots]))
    return adaptive_integrate(integrand, edges, cfg, _roundoff_floor(f, g, edges, p))


def integrate_sq(f: TFoT, g: TFoT, interval, cfg: QuadConfig = QuadConfig()) -> float:
    """Integral of the squared Euclidean difference ``(f-g)^T (f-g)``."""
    t1, t2 = _check_pair(f, g, interval)
    if t1 == t2:
        return 0.0

    def integrand(ts):
        d = f.values(ts) - g.values(ts)
        return (d * d).sum(axis=-1)

    return adaptive_integrate(integrand, _panels(f, g, t1, t2), cfg)
