"""Rectangular assignment with per-item unassignment costs.

Rows are truths, columns are estimates. Leaving truth ``j`` unmatched costs
``row_unassigned[j]`` and leaving estimate ``i`` unmatched costs
``col_unassigned[i]``. The problem is padded to an ``(m+n) x (m+n)`` square
matrix and solved with the Kuhn-Munkres (Hungarian) method using row/column
potentials and shortest augmenting paths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import SizeError

__all__ = ["AssignmentProblem", "AssignmentResult", "solve", "brute_force", "hungarian"]

BRUTE_FORCE_LIMIT = 12


@dataclass(frozen=True, eq=False)
class AssignmentProblem:
    pair_cost: np.ndarray
    row_unassigned: np.ndarray
    col_unassigned: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.row_unassigned, dtype=float).reshape(-1)
        cols = np.asarray(self.col_unassigned, dtype=float).reshape(-1)
        cost = np.asarray(self.pair_cost, dtype=float)
        if cost.size == 0:
            cost = cost.reshape(len(rows), len(cols))
        if cost.shape != (len(rows), len(cols)):
            raise ValueError(f"pair_cost shape {cost.shape} != ({len(rows)}, {len(cols)})")
        for name, arr in (("pair_cost", cost), ("row_unassigned", rows), ("col_unassigned", cols)):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError(f"{name} must be finite and non-negative")
        for name, arr in (("pair_cost", cost), ("row_unassigned", rows), ("col_unassigned", cols)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def m(self) -> int:
        return len(self.row_unassigned)

    @property
    def n(self) -> int:
        return len(self.col_unassigned)

    def cost_of(self, matches: Sequence[Tuple[int, int]]) -> float:
        """Exact total of a partial matching (correctly rounded sum)."""
        matched_rows = {j for j, _ in matches}
        matched_cols = {i for _, i in matches}
        terms = [self.pair_cost[j, i] for j, i in sorted(matches)]
        terms += [self.row_unassigned[j] for j in range(self.m) if j not in matched_rows]
        terms += [self.col_unassigned[i] for i in range(self.n) if i not in matched_cols]
        return math.fsum(terms)


@dataclass(frozen=True)
class AssignmentResult:
    matches: tuple
    unmatched_truth: tuple
    unmatched_estimates: tuple
    total_cost: float


def _result(problem: AssignmentProblem, matches) -> AssignmentResult:
    matches = tuple(sorted((int(j), int(i)) for j, i in matches))
    rows = {j for j, _ in matches}
    cols = {i for _, i in matches}
    return AssignmentResult(
        matches=matches,
        unmatched_truth=tuple(j for j in range(problem.m) if j not in rows),
        unmatched_estimates=tuple(i for i in range(problem.n) if i not in cols),
        total_cost=problem.cost_of(matches),
    )


def hungarian(cost: List[List[float]]) -> List[int]:
    """Minimum-cost perfect matching of a square matrix; returns row -> column.

    Shortest-augmenting-path form with dual potentials, O(N^3). Ties resolve
    toward the lowest column index.
    """
    n = len(cost)
    if n == 0:
        return []
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    owner = [0] * (n + 1)  # owner[j]: 1-based row assigned to column j
    way = [0] * (n + 1)
    for row in range(1, n + 1):
        owner[0] = row
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = owner[j0]
            crow = cost[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, n + 1):
                if not used[j]:
                    cur = crow[j - 1] - ui0 - v[j]
                    if cur < minv[j]:
                        minv[j] = cur
                        way[j] = j0
                    if minv[j] < delta:
                        delta = minv[j]
                        j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[owner[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if owner[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
    assign = [0] * n
    for j in range(1, n + 1):
        assign[owner[j] - 1] = j - 1
    return assign


def _padded(problem: AssignmentProblem) -> List[List[float]]:
    # Truth j may take any dummy column at its own unassignment cost and
    # every dummy row takes estimate i at that estimate's cost; this is
    # equivalent to the diagonal-only padding and keeps every cell finite.
    m, n = problem.m, problem.n
    rows = []
    for j in range(m):
        rows.append(list(problem.pair_cost[j]) + [float(problem.row_unassigned[j])] * m)
    dummy = [float(c) for c in problem.col_unassigned] + [0.0] * m
    rows.extend(list(dummy) for _ in range(n))
    return rows


def solve(problem: AssignmentProblem) -> AssignmentResult:
    """Optimal injective partial matching."""
    m, n = problem.m, problem.n
    if m == 0 or n == 0:
        return _result(problem, ())
    assign = _padded(problem)
    cols = hungarian(assign)
    matches = [(j, cols[j]) for j in range(m) if cols[j] < n]
    return _result(problem, matches)


def brute_force(problem: AssignmentProblem) -> AssignmentResult:
    """Exhaustive search over all injective partial matchings (test oracle)."""
    m, n = problem.m, problem.n
    if m + n > BRUTE_FORCE_LIMIT:
        raise SizeError(f"brute force limited to m + n <= {BRUTE_FORCE_LIMIT}, got {m + n}")
    best = None

    def recurse(j, used, chosen):
        nonlocal best
        if j == m:
            cost = problem.cost_of(chosen)
            if best is None or cost < best[0]:
                best = (cost, tuple(chosen))
            return
        recurse(j + 1, used, chosen)
        for i in range(n):
            if not used[i]:
                used[i] = True
                chosen.append((j, i))
                recurse(j + 1, used, chosen)
                chosen.pop()
                used[i] = False

    recurse(0, [False] * n, [])
    return _result(problem, best[1])
