import json
from dataclasses import replace

import numpy as np
import pytest

from ddmetapop.analysis import PeriodClass, detect_period
from ddmetapop.errors import ConfigurationError
from ddmetapop.scenario import Axis, SimSettings, load_bundled
from ddmetapop.sweep import SweepSpec, run_sweep, sweep_1d, sweep_2d


def small_grid(k=6, T=4000, burn=3000):
    sc = load_bundled("fig8_grid")
    axes = tuple(replace(a, resolution=k) for a in sc.sweep.axes)
    return SweepSpec(sc, axes, SimSettings((131.0, 19.0), T=T, burn_in=burn, window=100))


def small_slice(k=8):
    sc = load_bundled("fig9_a1_10")
    ax = replace(sc.sweep.axes[0], resolution=k)
    return SweepSpec(sc, (ax,), SimSettings((20.0, 10.0), T=4000, burn_in=3000, window=100))


class TestSpec:
    def test_from_scenario(self):
        spec = SweepSpec.from_scenario(load_bundled("fig8_grid"))
        assert spec.shape == (60, 60)
        assert spec.sim.T == 20000 and spec.sim.effective_burn_in == 19000

    def test_overrides_reset_burn_in(self):
        spec = SweepSpec.from_scenario(load_bundled("fig8_grid"), T=5000)
        assert spec.sim.T == 5000 and spec.sim.effective_burn_in == 4750

    def test_resolution_one_rejected(self):
        sc = load_bundled("fig8_grid")
        with pytest.raises(ConfigurationError, match="resolution"):
            SweepSpec(sc, (replace(sc.sweep.axes[0], resolution=1),), sc.sweep.sim)

    def test_duplicate_paths_rejected(self):
        sc = load_bundled("fig8_grid")
        a = sc.sweep.axes[0]
        with pytest.raises(ConfigurationError):
            SweepSpec(sc, (a, a), sc.sweep.sim)

    def test_window_must_fit(self):
        sc = load_bundled("fig8_grid")
        with pytest.raises(ConfigurationError, match="window"):
            SweepSpec(sc, sc.sweep.axes, SimSettings((1.0, 1.0), T=100, burn_in=50, window=80))

    def test_no_sweep_section(self):
        with pytest.raises(ConfigurationError):
            SweepSpec.from_scenario(load_bundled("fig3_ex5"))


class TestRun:
    def test_row_major_and_shape(self):
        res = sweep_2d(small_grid(4), threads=1)
        assert res.classes().shape == (4, 4)
        assert [c.index for c in res.cells[:2]] == [(0, 0), (0, 1)]
        assert sum(res.counts().values()) == 16

    def test_thread_count_does_not_change_output(self):
        spec = small_grid(5)
        one = run_sweep(spec, threads=1)
        four = run_sweep(spec, threads=4)
        assert one.to_csv() == four.to_csv()
        assert one.to_json() == four.to_json()

    def test_cell_matches_direct_detection(self):
        spec = small_grid(3)
        res = run_sweep(spec, threads=1)
        cell = res.cells[4]
        model = spec.template.with_values(
            {a.paths: v for a, v in zip(spec.axes, cell.values)}).model()
        s = detect_period(model, spec.sim.x0, spec.sim.T, spec.sim.effective_burn_in,
                          spec.sim.window, spec.sim.tol)
        assert s.period_class is cell.period_class

    def test_invalid_cells(self):
        # pushing retention past the cost limit makes some cells inadmissible
        sc = load_bundled("fig9_a1_10")
        ax = Axis(sc.sweep.axes[0].paths, 0.1, 0.2, 2)
        bad = Axis((sc.sweep.axes[0].paths[0].parse("dispersal.1.1.r"),), 0.2, 0.5, 2)
        spec = SweepSpec(sc, (ax, bad), SimSettings((20.0, 10.0), T=300, burn_in=100, window=100))
        res = run_sweep(spec, threads=1)
        kinds = {c.values[1]: c.period_class for c in res.cells}
        assert kinds[0.5] is PeriodClass.INVALID
        assert kinds[0.2] is not PeriodClass.INVALID
        invalid = [c for c in res.cells if c.period_class is PeriodClass.INVALID]
        assert all(c.tail_mean is None and c.note for c in invalid)
        row = [l for l in res.to_csv().splitlines() if ",Invalid," in l][0]
        assert row.endswith(",,,")

    def test_degenerate_axis(self):
        sc = load_bundled("fig9_a1_10")
        ax = Axis(sc.sweep.axes[0].paths, 0.5, 0.5, 2)
        res = sweep_1d(SweepSpec(sc, (ax,), SimSettings((20.0, 10.0), T=300, burn_in=100, window=100)))
        assert len(res.cells) == 2
        assert res.cells[0].period_class is res.cells[1].period_class
        np.testing.assert_array_equal(res.cells[0].tail, res.cells[1].tail)

    def test_axis_count_guards(self):
        with pytest.raises(ConfigurationError):
            sweep_1d(small_grid(2))
        with pytest.raises(ConfigurationError):
            sweep_2d(small_slice(2))


class TestOutput:
    def test_csv_header_2d(self):
        head = run_sweep(small_grid(2), threads=1).to_csv().splitlines()[0]
        assert head == "axis1_value,axis2_value,period_class,tail_mean_1,tail_mean_2,converged_to_zero"

    def test_csv_header_1d(self):
        head = sweep_1d(small_slice(2)).to_csv().splitlines()[0]
        assert head == "axis1_value,period_class,tail_mean_1,tail_mean_2,converged_to_zero"

    def test_tails_csv(self):
        res = sweep_1d(small_slice(2))
        lines = res.tails_csv().splitlines()
        assert lines[0] == "axis1_value,k,x_1,x_2"
        assert len(lines) == 1 + 2 * 100

    def test_json_excludes_timing_by_default(self):
        res = run_sweep(small_grid(2), threads=1)
        doc = json.loads(res.to_json())
        assert "timing" not in doc and doc["shape"] == [2, 2]
        assert "timing" in json.loads(res.to_json(include_timing=True))

    def test_csv_values_round_trip(self):
        res = sweep_1d(small_slice(3))
        vals = [float(l.split(",")[0]) for l in res.to_csv().splitlines()[1:]]
        assert vals == [c.values[0] for c in res.cells]
