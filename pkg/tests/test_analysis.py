import math

import numpy as np
import pytest

from conftest import fig2_model, philopatric_model, random_model, remark_model, retention_model
from ddmetapop import DispersalFunction, DispersalMatrix, GrowthMap, build_model, simulate
from ddmetapop.analysis import (
    PeriodClass, PersistenceCertificate, PointStability, basin_sample, classify_extinction,
    detect_period, find_fixed_points, lyapunov_decrease_check, persistence_certificate,
    persistence_tail_stats, tail_period, total_population_compare,
)
from ddmetapop.errors import ConfigurationError
from ddmetapop.scenario import Axis, load_bundled
from ddmetapop.spectral import Refusal

C = DispersalFunction.constant


def _check_verdict_invariants(v):
    if v.extinction_gas_monotone:
        assert v.extinction_las_linearization
    assert v.positive_fixed_point_exists == (v.rho0 > 1 + 1e-9) == v.persistence_certified
    if v.extinction_unstable_index:
        assert v.extinction_unstable_linearization
    if v.extinction_las_growth_bound:
        assert v.rho0 < 1
    assert v.indeterminate == (not v.extinction_las_linearization and not v.extinction_unstable_linearization)


class TestClassify:
    def test_low_growth_source(self):
        v = classify_extinction(fig2_model(50, 0.4))
        assert v.rho0 == pytest.approx(0.1051, abs=5e-4)
        assert v.extinction_las_linearization
        assert not v.extinction_las_growth_bound
        assert not v.positive_fixed_point_exists
        assert v.evidence["certificate"]["direction"] == "contract"

    def test_high_growth_source(self):
        v = classify_extinction(fig2_model(750, 0.4))
        assert v.rho0 == pytest.approx(1.058, abs=5e-4)
        assert v.positive_fixed_point_exists and v.persistence_certified
        assert v.evidence["persistence"]["r0"] > 1

    def test_two_sinks(self):
        v = classify_extinction(philopatric_model(0.9, 0.5))
        assert v.extinction_las_growth_bound and v.extinction_las_linearization
        assert not v.extinction_gas_monotone  # Richards exchange is increasing

    def test_monotone_gas(self):
        m = build_model([GrowthMap.gbh(0.9, 2), GrowthMap.hassell(0.8, 0.5)],
                        DispersalMatrix([[C(0.6), C(0.2)], [C(0.3), C(0.7)]]))
        v = classify_extinction(m)
        assert v.extinction_gas_monotone

    def test_index_and_linearization(self):
        v = classify_extinction(remark_model())
        assert v.extinction_unstable_linearization and not v.extinction_unstable_index
        assert v.evidence["r_index"] == pytest.approx(0.001)

    def test_invariants_on_random_models(self, rng):
        for _ in range(200):
            v = classify_extinction(random_model(rng))
            _check_verdict_invariants(v)

    def test_serialises(self):
        import json
        json.dumps(classify_extinction(fig2_model(50, 0.4)).to_dict())


class TestPersistenceCertificate:
    def test_rescue_example(self):
        cert = persistence_certificate(philopatric_model(5.94, 0.68))
        assert isinstance(cert, PersistenceCertificate)
        assert cert.r0 > 1 and np.all(cert.vector > 0)
        A0 = philopatric_model(5.94, 0.68).jacobian_at_origin()
        assert np.all(A0.T @ cert.vector >= cert.r0 * cert.vector * (1 - 1e-12))

    def test_refusal_below_one(self):
        assert isinstance(persistence_certificate(philopatric_model(1.1, 0.6)), Refusal)

    def test_near_diagonal(self):
        m = build_model([GrowthMap.ricker(2.5, 1), GrowthMap.ricker(2.5, 1)],
                        DispersalMatrix([[C(0.8), C(1e-6)], [C(1e-6), C(0.8)]]))
        cert = persistence_certificate(m)
        assert cert.r0 == pytest.approx(2.0, abs=1e-5)


class TestFixedPoints:
    def test_example_equilibrium(self):
        pts = find_fixed_points(philopatric_model(4, 0.9))
        assert pts[0].point.tolist() == [0.0, 0.0]
        pos = [p for p in pts if p.classification is PointStability.STABLE and p.point.any()]
        assert len(pos) == 1
        assert pos[0].point == pytest.approx([28.17, 9.52], abs=0.01)
        assert pos[0].residual < 1e-10

    def test_all_residuals_small(self):
        m = philopatric_model(4, 0.9)
        for p in find_fixed_points(m):
            assert np.max(np.abs(m.step(p.point) - p.point)) < 1e-10

    def test_zero_seed(self):
        pts = find_fixed_points(fig2_model(50, 0.4), seeds=[[0, 0]])
        assert len(pts) == 1 and pts[0].residual == 0.0

    @pytest.mark.parametrize("d,a,b", [(0.9, 2.0, 1.0), (0.5, 7.0, 0.04), (0.3, 4.0, 0.2)])
    def test_single_region_closed_form(self, d, a, b):
        m = build_model([GrowthMap.ricker(a, b)], DispersalMatrix([[C(d)]]))
        pts = find_fixed_points(m)
        assert len(pts) == 2
        assert pts[1].point[0] == pytest.approx(math.log(d * a) / b, rel=1e-10)
        mult = 1 - math.log(d * a)
        assert pts[1].jacobian_radius == pytest.approx(abs(mult), abs=1e-6)

    def test_no_positive_point(self):
        m = build_model([GrowthMap.ricker(0.5, 1)], DispersalMatrix([[C(0.9)]]))
        assert len(find_fixed_points(m)) == 1


class TestPeriod:
    def test_tail_period_synthetic(self):
        t = np.arange(60)
        cyc = np.column_stack([np.sin(2 * np.pi * t / 3) + 5, np.cos(2 * np.pi * t / 3) + 5])
        assert tail_period(cyc) == 3
        assert tail_period(np.ones((20, 2))) == 1
        assert tail_period(np.random.default_rng(1).uniform(size=(40, 2))) is None
        six = np.tile([[1.0], [2.0], [3.0], [1.0], [2.0], [4.0]], (8, 1))
        assert tail_period(six) == 6

    def test_period_two(self):
        s = detect_period(fig2_model(50, 0.4), [92, 103], 100_000, 99_000)
        assert s.period_class is PeriodClass.P2
        assert s.recurrence_error < 1e-8
        assert tail_period(s.tail[:, :], max_period=1) is None  # minimality

    def test_aperiodic(self):
        s = detect_period(fig2_model(90, 0.14), [131, 19], 100_000, 99_000)
        assert s.period_class is PeriodClass.ABOVE8 and s.cycle_points == []

    def test_fixed_point(self):
        s = detect_period(philopatric_model(4, 0.9), [20, 10], 100_000)
        assert s.period_class is PeriodClass.P1
        assert s.cycle_points[0] == pytest.approx([28.17, 9.52], abs=0.01)

    def test_extinction(self):
        s = detect_period(fig2_model(50, 0.4), [1e-6, 1e-6], 20_000)
        assert s.converged_to_zero and s.period_class is PeriodClass.P1

    def test_window_precondition(self):
        with pytest.raises(ConfigurationError):
            detect_period(fig2_model(50, 0.4), [1, 1], 1000, 900, window=10)

    def test_minimal_period_on_sweep_cells(self):
        # period-4 orbit found in the scan: no proper divisor passes
        m = fig2_model(100, 0.9)
        s = detect_period(m, [20, 10], 20_000, 19_000, window=100)
        if s.period is not None:
            for q in range(1, s.period):
                if s.period % q == 0:
                    assert tail_period(s.tail, max_period=q) is None


class TestPersistence:
    def test_rescue_positive(self):
        st = persistence_tail_stats(philopatric_model(5.94, 0.68), [[84, 59]], 10_000)
        assert st.eta1 > 0 and st.l1 > 0 and st.sup > 0

    def test_near_zero_goes_extinct(self):
        st = persistence_tail_stats(fig2_model(50, 0.4), [[1e-6, 1e-6]], 20_000)
        assert st.eta1 < 1e-100

    def test_cycle_minimum(self):
        m = fig2_model(50, 0.4)
        s = detect_period(m, [92, 103], 100_000, 99_000)
        st = persistence_tail_stats(m, [s.cycle_points[0]], 1000, 0)
        assert st.eta1 == pytest.approx(min(p.min() for p in s.cycle_points), rel=1e-12)

    def test_certificate_implies_persistence(self, rng):
        seen = 0
        while seen < 50:
            m = random_model(rng, n=2)
            if not isinstance(persistence_certificate(m), PersistenceCertificate):
                continue
            seen += 1
            st = persistence_tail_stats(m, [rng.uniform(0.1, 10, 2)], 100_000, 90_000)
            assert st.eta1 > 0


class TestBasin:
    def test_labels(self):
        m = philopatric_model(4, 0.9)
        pts = basin_sample(m, [[20, 10], [1e-6, 1e-6]], 20_000, target=[28.169, 9.515])
        assert [p.label for p in pts] == ["fixed_point", "extinction"]
        assert pts[0].distance < 1e-2


class TestLyapunov:
    def _orbits(self, m, rng, k=100):
        return [simulate(m, rng.uniform(0, 50, m.n), 200, 0, 200) for _ in range(k)]

    def test_monotone_model(self, rng):
        m = build_model([GrowthMap.gbh(0.9, 2), GrowthMap.hassell(0.8, 0.5)],
                        DispersalMatrix([[C(0.6), C(0.2)], [C(0.3), C(0.7)]]))
        rep = lyapunov_decrease_check(m, self._orbits(m, rng))
        assert rep.ok and rep.steps_checked > 1000

    def test_refusal_for_increasing_dispersal(self, rng):
        m = philopatric_model(0.9, 0.5)
        assert isinstance(lyapunov_decrease_check(m, []), Refusal)

    def test_single_region(self, rng):
        m = build_model([GrowthMap.hassell(0.9, 1)], DispersalMatrix([[C(0.5)]]))
        rep = lyapunov_decrease_check(m, self._orbits(m, rng, 10))
        assert rep.ok


class TestTotalPopulation:
    def test_zero_width(self):
        sc = load_bundled("fig5_ex7")
        ax = Axis(sc.compare.axis.paths, 0.3, 0.3, 5)
        t = total_population_compare(sc, ax, (55, 54), 1000)
        assert len(t.values) == 1 and t.critical_value is None

    def test_crossing(self):
        sc = load_bundled("fig5_ex7")
        t = total_population_compare(sc, sc.compare.axis, (55, 54), 10_000)
        assert t.critical_value == pytest.approx(0.22, abs=0.02)
        beyond = [d for v, d in zip(t.values, t.difference) if v > t.critical_value]
        assert all(d > 0 for d in beyond)

    def test_two_sources(self):
        sc = load_bundled("fig6_sources")
        t = total_population_compare(sc, sc.compare.axis, (55, 54), 10_000)
        assert t.coupled_always_below and t.critical_value is None

    def test_csv(self):
        sc = load_bundled("fig5_ex7")
        ax = Axis(sc.compare.axis.paths, 0.1, 0.2, 3)
        lines = total_population_compare(sc, ax, (55, 54), 100).to_csv().splitlines()
        assert lines[0] == "dispersal.1.2.r,coupled_total,isolated_total,difference"
        assert len(lines) == 4


class TestDichotomyCounterexamples:
    def test_stable_origin_with_cycle(self):
        m = fig2_model(50, 0.4)
        assert classify_extinction(m).extinction_las_linearization
        assert detect_period(m, [92, 103], 100_000, 99_000).period_class is PeriodClass.P2

    def test_unstable_origin_with_cycle(self):
        m = fig2_model(750, 0.4)
        assert classify_extinction(m).extinction_unstable_linearization
        assert detect_period(m, [92, 103], 100_000, 99_000).period_class is PeriodClass.P2

    def test_positive_point_below_threshold(self):
        m = philopatric_model(4, 0.9)
        assert classify_extinction(m).rho0 == pytest.approx(0.81, abs=5e-3)
        assert any(p.point.any() and p.classification is PointStability.STABLE
                   for p in find_fixed_points(m))
