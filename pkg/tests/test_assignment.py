import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from starid.assignment import AssignmentProblem, brute_force, hungarian, solve
from starid.errors import SizeError


def problem(cost, rows, cols):
    return AssignmentProblem(np.asarray(cost, dtype=float).reshape(len(rows), len(cols)), rows, cols)


class TestExamples:
    def test_zero_diagonal(self):
        res = solve(problem([[0, 1], [1, 0]], [100, 100], [100, 100]))
        assert res.matches == ((0, 0), (1, 1)) and res.total_cost == 0

    def test_leave_unassigned(self):
        res = solve(problem([[5]], [2], [2]))
        assert res.matches == () and res.total_cost == 4
        assert res.unmatched_truth == (0,) and res.unmatched_estimates == (0,)

    def test_brute_force_agrees_on_examples(self):
        for pr in (problem([[0, 1], [1, 0]], [100, 100], [100, 100]), problem([[5]], [2], [2])):
            assert brute_force(pr).total_cost == solve(pr).total_cost

    def test_empty(self):
        assert solve(problem([], [], [])).total_cost == 0

    def test_no_truth(self):
        pr = problem([], [], [1.5, 2.5, 3.0])
        assert solve(pr).total_cost == brute_force(pr).total_cost == 7.0

    def test_no_estimates(self):
        pr = problem([], [4.0], [])
        assert solve(pr).total_cost == brute_force(pr).total_cost == 4.0

    def test_rectangular(self):
        # 2 truths, 3 estimates: best is (0,2),(1,0) cost 1+1, leaving estimate 1 at 3
        pr = problem([[9, 9, 1], [1, 9, 9]], [50, 50], [3, 3, 3])
        res = solve(pr)
        assert res.matches == ((0, 2), (1, 0)) and res.total_cost == 5


class TestValidation:
    def test_shape(self):
        with pytest.raises(ValueError):
            AssignmentProblem(np.zeros((2, 2)), [1, 1], [1])

    @pytest.mark.parametrize("bad", [-1.0, np.inf, np.nan])
    def test_values(self, bad):
        with pytest.raises(ValueError):
            AssignmentProblem([[bad]], [1], [1])

    def test_brute_force_guard(self):
        with pytest.raises(SizeError):
            brute_force(problem(np.zeros((7, 6)), [1] * 7, [1] * 6))

    def test_frozen_arrays(self):
        pr = problem([[1]], [1], [1])
        with pytest.raises(ValueError):
            pr.pair_cost[0, 0] = 0


def test_hungarian_square():
    cost = [[4, 1, 3], [2, 0, 5], [3, 2, 2]]
    assign = hungarian(cost)
    best = min(sum(cost[r][c] for r, c in enumerate(perm)) for perm in itertools.permutations(range(3)))
    assert sum(cost[r][c] for r, c in enumerate(assign)) == best


def test_brute_force_agreement_random():
    rng = np.random.default_rng(3)
    for _ in range(200):
        m, n = rng.integers(0, 6, 2)
        pr = AssignmentProblem(rng.uniform(0, 10, (m, n)), rng.uniform(0, 10, m), rng.uniform(0, 10, n))
        assert solve(pr).total_cost == brute_force(pr).total_cost


@st.composite
def problems(draw, max_size=4):
    m = draw(st.integers(0, max_size))
    n = draw(st.integers(0, max_size))
    vals = st.floats(0, 100, allow_nan=False)
    return AssignmentProblem(
        draw(arrays(float, (m, n), elements=vals)),
        draw(arrays(float, (m,), elements=vals)),
        draw(arrays(float, (n,), elements=vals)),
    )


@given(problems())
def test_result_is_injective_and_consistent(pr):
    res = solve(pr)
    rows = [j for j, _ in res.matches]
    cols = [i for _, i in res.matches]
    assert len(set(rows)) == len(rows) and len(set(cols)) == len(cols)
    assert sorted(rows + list(res.unmatched_truth)) == list(range(pr.m))
    assert sorted(cols + list(res.unmatched_estimates)) == list(range(pr.n))
    assert res.total_cost == pr.cost_of(res.matches)


@given(problems())
def test_matches_brute_force(pr):
    assert solve(pr).total_cost == pytest.approx(brute_force(pr).total_cost, rel=1e-12, abs=1e-12)


@given(problems(), st.randoms(use_true_random=False))
def test_permutation_invariance(pr, rnd):
    rp = list(range(pr.m))
    cp = list(range(pr.n))
    rnd.shuffle(rp)
    rnd.shuffle(cp)
    shuffled = AssignmentProblem(pr.pair_cost[np.ix_(rp, cp)], pr.row_unassigned[rp], pr.col_unassigned[cp])
    assert solve(shuffled).total_cost == pytest.approx(solve(pr).total_cost, rel=1e-12, abs=1e-12)


@given(problems())
def test_capped_costs_never_worse_than_all_unassigned(pr):
    capped = np.minimum(pr.pair_cost, pr.row_unassigned[:, None] + pr.col_unassigned[None, :])
    pr = AssignmentProblem(capped, pr.row_unassigned, pr.col_unassigned)
    assert solve(pr).total_cost <= pr.cost_of(()) * (1 + 1e-12)
