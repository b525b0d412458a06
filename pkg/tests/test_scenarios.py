import json
import math
from dataclasses import replace

import numpy as np
import pytest

from starid.errors import ConvergenceError, DegenerateGeometryError, FormatError, UnderdeterminedError
from starid.metric import WindowPolicy, windowed_sweep
from starid.pairwise import MetricConfig
from starid.scenarios import (
    ManeuverSpec,
    MeasurementLog,
    ScenarioSpec,
    Sensor,
    TargetSpec,
    bearing_measurements,
    estimate_bearing_track,
    estimate_multitarget,
    fit_bearing_tfot,
    fit_polynomial_ls,
    fit_residual,
    gen_maneuvering,
    gen_multitarget,
    load_scenario_spec,
    maneuvering_truth,
    monte_carlo,
    monte_carlo_maneuvering,
    wrap_angle,
)
from starid.trajectory import TFoT


class TestSpecs:
    def test_defaults(self):
        spec = ScenarioSpec()
        assert [(t.t_birth, t.t_death) for t in spec.targets] == [(1, 100), (10, 75), (1, 90), (5, 85)]
        assert [t.detected for t in spec.targets] == [True, True, True, False]
        assert spec.noise_var == 10000 and spec.order == 2 and spec.step == 1

    def test_targets_inside_area(self):
        spec = ScenarioSpec()
        (x0, x1), (y0, y1) = spec.area
        for t in spec.targets:
            for x, y in (t.start, t.end):
                assert x0 <= x <= x1 and y0 <= y <= y1

    @pytest.mark.parametrize("kw", [{"step": 0}, {"noise_var": -1}, {"order": -1}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            ScenarioSpec(**kw)

    def test_birth_before_death(self):
        with pytest.raises(ValueError):
            TargetSpec(5, 5, (0, 0), (1, 1))

    def test_sensor_noise(self):
        with pytest.raises(ValueError):
            Sensor((0, 0), -0.1)

    def test_json_and_toml(self, tmp_path):
        spec = ScenarioSpec(seed=9, noise_var=4.0)
        (tmp_path / "s.json").write_text(json.dumps(spec.to_dict()))
        assert load_scenario_spec(tmp_path / "s.json") == spec
        (tmp_path / "s.toml").write_text(
            "seed = 9\nnoise_var = 4.0\n"
            "[[targets]]\nt_birth = 0\nt_death = 5\nstart = [0, 0]\nend = [5, 5]\n"
        )
        loaded = load_scenario_spec(tmp_path / "s.toml")
        assert loaded.seed == 9 and len(loaded.targets) == 1

    def test_bad_spec(self, tmp_path):
        (tmp_path / "s.json").write_text('{"targets": [{"t_birth": 3}]}')
        with pytest.raises(FormatError):
            load_scenario_spec(tmp_path / "s.json")
        (tmp_path / "b.json").write_text("{oops")
        with pytest.raises(FormatError):
            load_scenario_spec(tmp_path / "b.json")


class TestMultitarget:
    def test_truth_durations(self):
        truth, _ = gen_multitarget(ScenarioSpec())
        assert [tr.duration for tr in truth] == [99, 65, 89, 80]

    def test_truth_is_quadratic_with_zero_curvature(self):
        truth, _ = gen_multitarget(ScenarioSpec())
        for tr in truth:
            assert tr.pieces[0].coeffs.shape == (2, 3)
            assert np.all(tr.pieces[0].coeffs[:, 2] == 0)

    def test_truth_hits_endpoints(self):
        spec = ScenarioSpec()
        truth, _ = gen_multitarget(spec)
        for tr, tgt in zip(truth, spec.targets):
            np.testing.assert_allclose(tr.values(tgt.t_birth), tgt.start, atol=1e-9)
            np.testing.assert_allclose(tr.values(tgt.t_death), tgt.end, atol=1e-9)

    def test_missed_target_has_no_measurements(self):
        _, log = gen_multitarget(ScenarioSpec())
        assert sorted(log.channels) == ["T1", "T2", "T3"]

    def test_measurement_grid(self):
        _, log = gen_multitarget(ScenarioSpec())
        times = log.channels["T2"][0]
        assert times[0] == 10 and times[-1] == 75 and len(times) == 66

    def test_zero_noise_on_polynomial(self):
        truth, log = gen_multitarget(ScenarioSpec(noise_var=0))
        for tr in truth:
            if tr.id in log.channels:
                ts, ys = log.channels[tr.id]
                np.testing.assert_array_equal(ys, tr.values(ts))

    def test_noise_statistics(self):
        truth, log = gen_multitarget(ScenarioSpec(seed=5))
        res = np.concatenate([ys - truth[int(k[1:]) - 1].values(ts) for k, (ts, ys) in log.channels.items()])
        assert res.std() == pytest.approx(100, rel=0.1)
        assert abs(res.mean()) < 15

    def test_deterministic(self):
        a = gen_multitarget(ScenarioSpec(seed=3))
        b = gen_multitarget(ScenarioSpec(seed=3))
        assert a[0] == b[0] and a[1] == b[1]
        assert a[1].csv_text() == b[1].csv_text()

    def test_seed_changes_noise(self):
        assert gen_multitarget(ScenarioSpec(seed=3))[1] != gen_multitarget(ScenarioSpec(seed=4))[1]

    def test_estimates_zero_noise_exact(self):
        spec = ScenarioSpec(noise_var=0)
        truth, log = gen_multitarget(spec)
        est = estimate_multitarget(log, spec)
        assert len(est) == 3
        for e in est:
            tr = truth[int(e.id[1:]) - 1]
            ts = np.linspace(e.t_start, e.t_end, 50)
            np.testing.assert_allclose(e.values(ts), tr.values(ts), atol=1e-6)

    def test_estimate_starts_after_enough_points(self):
        spec = ScenarioSpec()
        _, log = gen_multitarget(spec)
        est = estimate_multitarget(log, spec)
        # three points are needed for a quadratic, so the first two instants are missed
        starts = {e.id: e.t_start for e in est}
        assert starts == {"E1": 3.0, "E2": 12.0, "E3": 3.0}

    def test_csv_export(self, tmp_path):
        _, log = gen_multitarget(ScenarioSpec())
        log.to_csv(tmp_path / "m.csv")
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "sensor_id,time,value1,value2"
        sid, t, *vals = lines[1].split(",")
        assert sid == "T1" and float(t) == 1.0 and len(vals) == 2


class TestPolynomialFit:
    def test_recovers_quadratic(self):
        ts = np.arange(20.0, 31.0)
        c = np.array([[1.5, -0.2, 0.03], [-4.0, 2.0, -0.01]])
        ys = TFoT.polynomial(c, 0, 100).values(ts)
        fit = fit_polynomial_ls((ts, ys), (20, 30), 2)
        np.testing.assert_allclose(fit.pieces[0].coeffs, c, rtol=1e-9, atol=1e-9)
        assert fit.interval == (20, 30)

    def test_line_through_two_points(self):
        fit = fit_polynomial_ls((np.array([1.0, 3.0]), np.array([[2.0], [6.0]])), (1, 3), 1)
        np.testing.assert_allclose(fit.pieces[0].coeffs, [[0, 2]], atol=1e-12)

    def test_underdetermined(self):
        with pytest.raises(UnderdeterminedError):
            fit_polynomial_ls((np.array([1.0]), np.array([[2.0]])), (0, 3), 1)

    def test_window_selection(self):
        ts = np.arange(0.0, 10.0)
        ys = np.where(ts < 5, 0.0, 100.0)[:, None]
        fit = fit_polynomial_ls((ts, ys), (5, 9), 0)
        np.testing.assert_allclose(fit.pieces[0].coeffs, [[100]])

    def test_from_log_channel(self):
        spec = ScenarioSpec(noise_var=0)
        truth, log = gen_multitarget(spec)
        fit = fit_polynomial_ls(log, (20, 30), 2, source="T1")
        np.testing.assert_allclose(fit.values(25.0), truth[0].values(25.0), atol=1e-8)

    def test_residual_non_increasing_in_order(self):
        rng = np.random.default_rng(1)
        ts = np.arange(0.0, 12.0)
        ys = rng.normal(0, 1, (12, 2)) + ts[:, None] ** 1.5
        res = [fit_residual(fit_polynomial_ls((ts, ys), (0, 11), g), ts, ys) for g in range(6)]
        assert all(b <= a * (1 + 1e-9) for a, b in zip(res, res[1:]))


class TestBearing:
    def line(self):
        return TFoT.polynomial([[0.1, 0.2], [-0.3, 0.15]], 0.1, 1.0)

    def test_wrap(self):
        np.testing.assert_allclose(wrap_angle([math.pi, -math.pi, 3 * math.pi / 2, 0.1]),
                                   [math.pi, math.pi, -math.pi / 2, 0.1])

    def test_noiseless_recovery(self):
        sensors = tuple(Sensor(s.position, 0.0) for s in ManeuverSpec().sensors)
        ts = np.round(0.1 * np.arange(1, 11), 12)
        log = bearing_measurements(self.line(), sensors, ts, np.random.default_rng(0))
        fit = fit_bearing_tfot(log, sensors, (0.1, 1.0))
        assert fit.converged and not fit.degenerate
        err = np.linalg.norm(fit.tfot.values(0.55) - self.line().values(0.55))
        assert err < 1e-6

    def test_noisy_converges(self):
        sensors = ManeuverSpec().sensors
        ts = np.round(0.1 * np.arange(1, 11), 12)
        log = bearing_measurements(self.line(), sensors, ts, np.random.default_rng(2))
        fit = fit_bearing_tfot(log, sensors, (0.1, 1.0))
        assert fit.converged and math.isfinite(fit.cost) and fit.cost > 0

    def test_residuals_wrapped(self):
        # target due west of a sensor sits on the branch cut
        sensors = (Sensor((1.0, 0.0), 0.0), Sensor((1.0, -3.0), 0.0))
        line = TFoT.polynomial([[-1.0, 0.0], [0.0, 0.0]], 0, 1)
        ts = np.linspace(0, 1, 6)
        log = bearing_measurements(line, sensors, ts, np.random.default_rng(0))
        fit = fit_bearing_tfot(log, sensors, (0, 1))
        assert fit.cost < 1e-12

    def test_single_sensor(self):
        sensor = Sensor((0.0, 0.0))
        ts = np.linspace(0.1, 1, 10)
        log = bearing_measurements(self.line(), [sensor], ts, np.random.default_rng(0))
        with pytest.raises(DegenerateGeometryError):
            fit_bearing_tfot(log, [sensor], (0.1, 1.0))

    def test_non_convergence_has_best(self):
        sensors = ManeuverSpec().sensors
        ts = np.round(0.1 * np.arange(1, 11), 12)
        log = bearing_measurements(self.line(), sensors, ts, np.random.default_rng(2))
        with pytest.raises(ConvergenceError) as info:
            fit_bearing_tfot(log, sensors, (0.1, 1.0), max_iter=1, step_tol=0.0)
        assert info.value.best is not None

    def test_needs_two_times(self):
        sensors = ManeuverSpec().sensors
        log = bearing_measurements(self.line(), sensors, np.array([0.5]), np.random.default_rng(0))
        with pytest.raises(UnderdeterminedError):
            fit_bearing_tfot(log, sensors, (0.1, 1.0))


class TestManeuvering:
    def test_truth_is_smooth(self):
        mspec = ManeuverSpec()
        truth = maneuvering_truth(mspec)
        knots = mspec.times[1:-1]
        left = np.array([p.__call__(t) for p, t in zip(truth.pieces[:-1], knots)])
        np.testing.assert_allclose(left, truth.values(knots), atol=1e-10)

    def test_truth_stays_inside_sensor_box(self):
        truth = maneuvering_truth(ManeuverSpec())
        v = truth.values(np.linspace(truth.t_start, truth.t_end, 500))
        assert np.all(np.abs(v) < 2)

    def test_first_instant_missed(self):
        mspec = ManeuverSpec(n_steps=30)
        _, log = gen_maneuvering(mspec)
        est = estimate_bearing_track(log, mspec)[0]
        assert (est.t_start, est.t_end) == (mspec.times[1], mspec.times[-1])

    def test_generation_deterministic(self):
        a = gen_maneuvering(ManeuverSpec(seed=1))[1]
        b = gen_maneuvering(ManeuverSpec(seed=1))[1]
        assert a == b and a.kind == "bearing" and len(a.channels) == 4


class TestMonteCarlo:
    def test_single_run_zero_noise_matches_direct(self):
        spec = ScenarioSpec(noise_var=0)
        cfg = MetricConfig.symmetric(1000, 1000)
        times = [5.0, 20.0, 80.0]
        mc = monte_carlo(1, spec, [cfg], ("star_id",), times)
        truth, log = gen_multitarget(spec)
        est = estimate_multitarget(log, spec)
        direct = windowed_sweep(truth, est, [cfg], times, WindowPolicy(), ("star_id",))[0]["star_id"]
        assert mc[0]["star_id"].values == pytest.approx(direct.values, rel=1e-12)

    def test_reproducible(self):
        spec = ScenarioSpec(seed=11)
        cfg = MetricConfig.symmetric(1000, 1000)
        a = monte_carlo(2, spec, [cfg], ("ta_star_id",), [30.0, 60.0])
        b = monte_carlo(2, spec, [cfg], ("ta_star_id",), [30.0, 60.0])
        assert a[0]["ta_star_id"] == b[0]["ta_star_id"]

    def test_runs_validation(self):
        with pytest.raises(ValueError):
            monte_carlo(0, ScenarioSpec(), [MetricConfig()])

    def test_maneuvering_runs(self):
        mspec = replace(ManeuverSpec(), n_steps=40)
        out = monte_carlo_maneuvering(2, mspec, MetricConfig())
        assert set(out) == {"ta_star_id", "ospa", "imta"}
        assert all(len(s) == 39 and np.all(np.isfinite(s.values)) for s in out.values())


def test_measurement_log_equality():
    a = MeasurementLog("position", {"T1": (np.array([1.0]), np.array([[1.0, 2.0]]))})
    b = MeasurementLog("position", {"T1": (np.array([1.0]), np.array([[1.0, 2.5]]))})
    assert a != b and a == a
