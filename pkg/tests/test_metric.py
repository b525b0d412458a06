import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from starid.axioms import random_set
from starid.errors import DegenerateWindowError, DimensionMismatchError, FormatError
from starid.metric import (
    MetricSeries,
    WindowPolicy,
    star_id,
    star_id_result,
    ta_star_id,
    windowed_series,
    windowed_sweep,
)
from starid.pairwise import MetricConfig
from starid.trajectory import TFoT, TrajectorySet

from conftest import const, tset

P1 = MetricConfig.symmetric(10, 10, p=1)


def empty(dim=1):
    return TrajectorySet(dim, ())


class TestStarID:
    def test_identical_sets(self):
        s = tset(const(0, 0, 10), TFoT.polynomial([[1, 2]], 3, 7))
        assert star_id(s, s, MetricConfig()) == 0.0

    def test_missed_only(self):
        assert star_id(tset(const(0, 0, 10)), empty(), P1) == pytest.approx(100)

    def test_false_alarm_only(self):
        assert star_id(empty(), tset(const(0, 0, 10)), P1) == pytest.approx(100)

    def test_both_empty(self):
        assert star_id(empty(), empty(), P1) == 0.0

    def test_single_pair_reduction(self):
        assert star_id(tset(const(0, 0, 10)), tset(const(5, 2, 12)), P1) == pytest.approx(80, rel=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            star_id(empty(1), empty(2), P1)

    @pytest.mark.parametrize("p", [1.0, 2.0, 3.0])
    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_scale_consistency(self, p, r):
        cfg = MetricConfig.symmetric(10, 7, p=p)
        f = const(np.zeros(r), 2, 9)
        expected = r ** (1 / p) * 7 * 7
        assert star_id(tset(f), empty(r), cfg) == pytest.approx(expected, rel=1e-14)

    def test_far_estimate_is_left_unassigned(self):
        cfg = MetricConfig.symmetric(10, 1, p=1)
        res = star_id_result(tset(const(0, 0, 1)), tset(const(1e6, 0, 1)), cfg)
        assert res.value == pytest.approx(2)
        # cap equals the unassigned cost, so either association is optimal
        assert res.assignment.total_cost == pytest.approx(2)

    def test_association_prefers_close_pairs(self):
        truth = tset(const(0, 0, 10, id="a"), const(100, 0, 10, id="b"))
        est = tset(const(101, 0, 10, id="x"), const(1, 0, 10, id="y"))
        res = star_id_result(truth, est, MetricConfig.symmetric(10, 10, p=1))
        assert res.assignment.matches == ((0, 1), (1, 0))
        assert res.value == pytest.approx(20)
        assert not res.has_trajectory_fa_md

    def test_p2_two_pairs(self):
        truth = tset(const(0, 0, 10, id="a"), const(100, 0, 10, id="b"))
        est = tset(const(3, 0, 10, id="x"), const(104, 0, 10, id="y"))
        cfg = MetricConfig.symmetric(10, 10, p=2)
        assert star_id(truth, est, cfg) == pytest.approx(math.sqrt(30 ** 2 + 40 ** 2), rel=1e-12)


class TestTAStarID:
    def test_identical(self):
        s = tset(const(1, 0, 10))
        assert ta_star_id(s, s, P1, (0, 10)) == 0.0

    def test_division(self):
        assert ta_star_id(tset(const(0, 0, 10)), empty(), P1, (0, 10)) == pytest.approx(10)

    def test_missed_full_window(self):
        truth = tset(const(0, -50, 50))
        assert ta_star_id(truth, empty(), P1, (3, 8)) == pytest.approx(10)

    def test_clips_before_comparing(self):
        truth = tset(const(0, 0, 20))
        est = tset(const(0, 5, 20))
        # window [0, 10]: SMD 5 s
        assert ta_star_id(truth, est, P1, (0, 10)) == pytest.approx(50 / 10)

    def test_degenerate_window(self):
        with pytest.raises(DegenerateWindowError):
            ta_star_id(empty(), empty(), P1, (4, 4))


class TestWindowPolicy:
    def test_clamped_start(self):
        assert WindowPolicy().window(5) == (1, 5)

    def test_sliding(self):
        assert WindowPolicy().window(42) == (32, 42)

    def test_fractional_step_rounding(self):
        assert WindowPolicy(length=1.0, start_clamp=0.1).window(0.1 * 23) == (1.3, 2.3000000000000003)

    def test_invalid(self):
        with pytest.raises(ValueError):
            WindowPolicy(length=0)


class TestWindowedSeries:
    def test_constant_offset_saturates(self):
        truth, est = tset(const(0, 0, 50)), tset(const(3, 0, 50))
        s = windowed_series(truth, est, P1, range(2, 51), WindowPolicy(10, 0), "ta_star_id")
        assert all(v == pytest.approx(3, rel=1e-12) for v in s.values)

    def test_empty_estimates(self):
        truth = tset(const(0, 0, 30, id="a"), const(0, 5, 20, id="b"))
        s = windowed_series(truth, empty(), P1, [4, 12, 25], WindowPolicy(10, 1), "ta_star_id")
        windows = [(1, 4), (2, 12), (15, 25)]
        for (k0, k1), v in zip(windows, s.values):
            durations = [max(0.0, min(k1, b) - max(k0, a)) for a, b in ((0, 30), (5, 20))]
            assert v == pytest.approx(10 * sum(durations) / (k1 - k0), rel=1e-12)

    def test_empty_estimates_p2(self):
        truth = tset(const([0, 0], 0, 30, id="a"), const([0, 0], 5, 20, id="b"))
        cfg = MetricConfig.symmetric(10, 10, p=2)
        s = windowed_series(truth, empty(2), cfg, [12], WindowPolicy(10, 1), "ta_star_id")
        expected = 2 ** 0.5 * 10 * (10 ** 2 + 7 ** 2) ** 0.5 / 10
        assert s.values[0] == pytest.approx(expected, rel=1e-12)

    def test_trajectory_outside_window_is_ignored(self):
        truth = tset(const(0, 0, 5, id="old"), const(0, 10, 30, id="new"))
        est = tset(const(0, 10, 30))
        s = windowed_series(truth, est, P1, [25], WindowPolicy(10, 0), "star_id")
        assert s.values == (0.0,)

    def test_decreases_after_death(self):
        truth = tset(const(0, 0, 100, id="a"), const(0, 10, 75, id="b"))
        est = tset(const(1, 1, 100))
        s = windowed_series(truth, est, MetricConfig.symmetric(10, 10, p=2), range(76, 100), WindowPolicy(), "star_id")
        v = np.array(s.values)
        assert np.all(np.diff(v[:10]) < 0)
        assert np.allclose(v[9:], v[9])

    def test_sweep_matches_individual(self):
        rng = np.random.default_rng(4)
        truth = random_set(rng, 2, 3, "t")
        est = random_set(rng, 2, 3, "e")
        cfgs = [MetricConfig.symmetric(c, 5, p=2) for c in (1, 3, 9)]
        times = [2, 4, 6, 8, 10]
        swept = windowed_sweep(truth, est, cfgs, times, WindowPolicy(3, 0), ("star_id", "ospa"))
        for cfg, res in zip(cfgs, swept):
            single = windowed_series(truth, est, cfg, times, WindowPolicy(3, 0), "star_id")
            assert res["star_id"] == single

    def test_sweep_rejects_mixed_p(self):
        cfgs = [MetricConfig(p=1), MetricConfig(p=2)]
        with pytest.raises(ValueError):
            windowed_sweep(empty(), empty(), cfgs, [1], WindowPolicy())

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            windowed_series(empty(), empty(), P1, [1], WindowPolicy(), "bogus")

    def test_unsorted_times(self):
        with pytest.raises(ValueError):
            windowed_series(empty(), empty(), P1, [3, 2], WindowPolicy())

    def test_all_kinds_run(self):
        truth = tset(const([0, 0], 0, 20))
        est = tset(const([1, 0], 2, 20))
        for kind in ("star_id", "ta_star_id", "ospa", "gospa", "ospa2", "imta"):
            s = windowed_series(truth, est, MetricConfig(), [5, 10, 15], WindowPolicy(), kind)
            assert len(s) == 3 and all(np.isfinite(s.values))


class TestMetricSeries:
    def test_csv_round_trip(self, tmp_path):
        s = MetricSeries((1, 2, 3.5), (0.1, 2 / 3, 7), "ospa")
        s.to_csv(tmp_path / "s.csv")
        text = (tmp_path / "s.csv").read_text().splitlines()
        assert text[0] == "time,value,kind"
        assert text[2] == "2.000000000,0.666666667,ospa"
        back = MetricSeries.from_csv(tmp_path / "s.csv")
        assert back.kind == "ospa" and back.times == s.times
        np.testing.assert_allclose(back.values, s.values, atol=5e-10)

    def test_json_round_trip(self, tmp_path):
        s = MetricSeries((1, 2), (1 / 3, 2 / 7), "star_id")
        s.to_json(tmp_path / "s.json")
        assert MetricSeries.from_json(tmp_path / "s.json") == s

    def test_validation(self):
        with pytest.raises(ValueError):
            MetricSeries((1, 2), (1,), "ospa")
        with pytest.raises(ValueError):
            MetricSeries((2, 1), (1, 1), "ospa")
        with pytest.raises(ValueError):
            MetricSeries((1,), (1,), "bogus")

    def test_bad_header(self, tmp_path):
        (tmp_path / "s.csv").write_text("t,v\n1,2\n")
        with pytest.raises(FormatError):
            MetricSeries.from_csv(tmp_path / "s.csv")


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 2.0]))
def test_symmetry_with_equal_cutoffs(seed, p):
    rng = np.random.default_rng(seed)
    a, b = random_set(rng, 2, 3, "a"), random_set(rng, 2, 3, "b")
    cfg = MetricConfig.symmetric(2, 5, p=p)
    assert star_id(a, b, cfg) == pytest.approx(star_id(b, a, cfg), rel=1e-9, abs=1e-12)


@given(st.integers(0, 2 ** 32 - 1))
def test_monotone_in_trajectory_cutoff(seed):
    rng = np.random.default_rng(seed)
    a, b = random_set(rng, 1, 3, "a"), random_set(rng, 1, 3, "b")
    values = [star_id(a, b, MetricConfig.symmetric(2, c, p=2)) for c in (0.5, 1, 2, 4)]
    assert all(y >= x * (1 - 1e-12) for x, y in zip(values, values[1:]))


@given(st.integers(0, 2 ** 32 - 1))
def test_monotone_in_segment_cutoff(seed):
    rng = np.random.default_rng(seed)
    a, b = random_set(rng, 1, 3, "a"), random_set(rng, 1, 3, "b")
    values = [star_id(a, b, MetricConfig.symmetric(c, 2, p=1)) for c in (0.5, 1, 2, 4)]
    assert all(y >= x * (1 - 1e-12) for x, y in zip(values, values[1:]))


def test_set_triangle_counterexample_when_trajectory_cutoff_exceeds_segment_cutoff():
    f = const(0, 0, 10, id="f")
    h = const(0, 0, 1, id="h")
    cfg = MetricConfig.symmetric(1, 10, p=1)
    F, H, G = tset(f), tset(h), empty()
    assert star_id(F, G, cfg) == pytest.approx(100)
    assert star_id(F, H, cfg) == pytest.approx(9)
    assert star_id(H, G, cfg) == pytest.approx(10)
