import math

import numpy as np
import pytest

from ddmetapop.errors import ConfigurationError, DomainError
from ddmetapop.growth_maps import (
    GrowthMap, MapKind, RegionClass, Stability, check_class_membership, classify_region,
    derivative_f, eval_f, eval_g, isolated_fixed_points, upper_bound,
)
from oracles import central_diff, grid_max

CATALOG = [
    GrowthMap.ricker(50, 0.04),
    GrowthMap.ricker(2, 1),
    GrowthMap.hassell(0.4, 0.01),
    GrowthMap.hassell(3, 0.2, 2.5),
    GrowthMap.gbh(4, 2),
    GrowthMap.gbh(6, 1.5, 3),
    GrowthMap.logistic(3.7),
    GrowthMap.gamma_gauss(3),
]


def _grid(m, n=1000):
    top = 1.0 if m.kind is MapKind.LOGISTIC else 5.0 * min(m.argmax(), 200.0) + 5.0
    return np.linspace(0.0, top, n)


class TestConstruction:
    def test_kind_aliases(self):
        assert GrowthMap("gbh", {"a": 2, "b": 1}).kind is MapKind.GBH
        assert GrowthMap("Generalized-Beverton-Holt", {"a": 2, "b": 1}).kind is MapKind.GBH

    def test_defaults_fill_exponent(self):
        assert GrowthMap.hassell(2, 1).params["c"] == 1.0

    @pytest.mark.parametrize("kind,params", [
        ("ricker", {"a": 0, "b": 1}),
        ("ricker", {"a": 1}),
        ("hassell", {"a": 1, "b": 1, "c": 0.5}),
        ("logistic", {"a": 4.5}),
        ("gamma_gauss", {"gamma": -1}),
        ("ricker", {"a": 1, "b": 1, "z": 3}),
        ("tent", {"a": 1}),
    ])
    def test_rejects_bad_parameters(self, kind, params):
        with pytest.raises(ConfigurationError):
            GrowthMap(kind, params)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            eval_f(GrowthMap.ricker(2, 1), -0.1)
        with pytest.raises(DomainError):
            eval_f(GrowthMap.logistic(3), 1.5)


class TestEvaluation:
    def test_examples(self):
        assert eval_f(GrowthMap.ricker(50, 0.04), 0.0) == 0.0
        assert eval_f(GrowthMap.hassell(0.9, 0.01), 10.0) == pytest.approx(9.0 / 1.1, rel=1e-12)
        assert eval_f(GrowthMap.gamma_gauss(3), 1.0) == 3.0

    def test_per_capita_at_zero(self):
        assert eval_g(GrowthMap.ricker(50, 0.04), 0.0) == 50.0
        assert eval_g(GrowthMap.hassell(0.4, 0.01), 0.0) == 0.4
        # the hump is centred at 1, so g(0) = gamma / e
        assert eval_g(GrowthMap.gamma_gauss(3), 0.0) == pytest.approx(3 / math.e, rel=1e-14)

    @pytest.mark.parametrize("m", CATALOG, ids=lambda m: m.kind.value)
    def test_f_is_g_times_x(self, m):
        for x in _grid(m)[1:]:
            assert eval_f(m, x) == pytest.approx(eval_g(m, x) * x, rel=1e-12, abs=1e-300)

    @pytest.mark.parametrize("m", CATALOG, ids=lambda m: m.kind.value)
    def test_derivative_matches_finite_differences(self, m):
        for x in _grid(m)[:-1]:
            fd = central_diff(m.f, x)
            d = derivative_f(m, x)
            assert d == pytest.approx(fd, rel=1e-6, abs=1e-7 * max(1.0, abs(m.f(x)))), x

    @pytest.mark.parametrize("m", CATALOG, ids=lambda m: m.kind.value)
    def test_derivative_at_zero_is_g0(self, m):
        assert derivative_f(m, 0.0) == pytest.approx(m.g0(), rel=1e-15)

    def test_derivative_examples(self):
        assert derivative_f(GrowthMap.gamma_gauss(3), 1.0) == 3.0
        assert derivative_f(GrowthMap.ricker(2, 1), 1.0) == 0.0


class TestBounds:
    def test_examples(self):
        assert upper_bound(GrowthMap.ricker(50, 0.04)) == pytest.approx(459.85, abs=5e-3)
        assert upper_bound(GrowthMap.logistic(4)) == 1.0
        assert GrowthMap.gamma_gauss(2).argmax() == pytest.approx((1 + math.sqrt(3)) / 2)

    @pytest.mark.parametrize("m", CATALOG, ids=lambda m: m.kind.value)
    def test_bound_dominates(self, m):
        for x in _grid(m):
            assert eval_f(m, x) <= upper_bound(m) + 1e-12

    @pytest.mark.parametrize("m", [GrowthMap.hassell(3, 0.2, 2.5), GrowthMap.gbh(6, 1.5, 3),
                                   GrowthMap.gbh(2, 4, 1.7), GrowthMap.ricker(7, 0.3)],
                             ids=lambda m: m.kind.value)
    def test_bound_is_attained_maximum(self, m):
        top = 10 * m.argmax()
        assert upper_bound(m) == pytest.approx(grid_max(m.f, 0, top), rel=1e-8)

    def test_saturating_bound_is_supremum(self):
        m = GrowthMap.gbh(4, 2)
        assert m.f(1e9) == pytest.approx(upper_bound(m), rel=1e-8)
        m = GrowthMap.hassell(4, 2)
        assert m.f(1e9) == pytest.approx(upper_bound(m), rel=1e-8)


class TestFixedPoints:
    def test_ricker_high_growth(self):
        pts = isolated_fixed_points(GrowthMap.ricker(50, 0.04))
        assert [p.stability for p in pts] == [Stability.UNSTABLE, Stability.UNSTABLE]
        assert pts[1].x == pytest.approx(97.80, abs=5e-3)

    def test_hassell_sink(self):
        pts = isolated_fixed_points(GrowthMap.hassell(0.4, 0.01))
        assert len(pts) == 1 and pts[0].stability is Stability.GAS

    def test_ricker_moderate_growth(self):
        pts = isolated_fixed_points(GrowthMap.ricker(2, 1))
        assert pts[0].stability is Stability.UNSTABLE
        assert pts[1].x == pytest.approx(math.log(2), rel=1e-15)
        assert pts[1].stability is Stability.LAS

    def test_ricker_stability_follows_multiplier(self):
        # multiplier 1 - ln a stays inside (-1, 1) until a = e^2
        assert isolated_fixed_points(GrowthMap.ricker(5, 1))[1].stability is Stability.LAS
        assert isolated_fixed_points(GrowthMap.ricker(8, 1))[1].stability is Stability.UNSTABLE

    def test_hassell_source_is_gas(self):
        pts = isolated_fixed_points(GrowthMap.hassell(2, 0.01))
        assert pts[1].x == pytest.approx(100.0)
        assert pts[1].stability is Stability.GAS

    @pytest.mark.parametrize("m", CATALOG + [GrowthMap.gamma_gauss(2)], ids=lambda m: m.kind.value)
    def test_positive_points_are_fixed(self, m):
        for eq in isolated_fixed_points(m)[1:]:
            assert abs(m.f(eq.x) - eq.x) < 1e-10

    def test_gamma_gauss_two_positive_points(self):
        xs = [e.x for e in isolated_fixed_points(GrowthMap.gamma_gauss(2))]
        w = math.sqrt(math.log(2))
        assert xs == pytest.approx([0.0, 1 - w, 1 + w])


class TestClassification:
    def test_examples(self):
        assert classify_region(GrowthMap.ricker(5.94, 0.04)) is RegionClass.SOURCE
        assert classify_region(GrowthMap.hassell(0.68, 0.01)) is RegionClass.SINK
        assert classify_region(GrowthMap.ricker(1, 0.5)) is RegionClass.INDETERMINATE

    def test_gamma_gauss_sink_needs_gamma_below_one(self):
        # g peaks at gamma (x = 1), not at g(0)
        assert classify_region(GrowthMap.gamma_gauss(0.9)) is RegionClass.SINK
        assert classify_region(GrowthMap.gamma_gauss(2)) is RegionClass.INDETERMINATE

    @pytest.mark.parametrize("m", [GrowthMap.ricker(0.9, 0.1), GrowthMap.hassell(0.68, 0.01),
                                   GrowthMap.gbh(0.5, 3, 2), GrowthMap.logistic(0.8),
                                   GrowthMap.gamma_gauss(0.95)], ids=lambda m: m.kind.value)
    def test_sinks_go_extinct(self, m):
        for x0 in (0.1, 1.0, 10.0):
            x = min(x0, m.domain_max)
            for _ in range(10_000):
                x = m.f(x)
            assert x < 1e-6


class TestMembership:
    def test_gamma_gauss_convex_near_origin(self):
        rep = check_class_membership(GrowthMap.gamma_gauss(3), np.arange(0, 3.0001, 0.01))
        assert rep.member
        first = rep.convex_intervals[0]
        assert first[0] <= 0.01 and first[1] >= 0.223

    def test_ricker_member(self):
        assert check_class_membership(GrowthMap.ricker(2, 1)).member

    def test_hassell_monotone(self):
        rep = check_class_membership(GrowthMap.hassell(0.5, 1))
        assert rep.member and rep.monotone_increasing

    def test_logistic_on_unit_interval(self):
        assert check_class_membership(GrowthMap.logistic(4)).member

    def test_bad_grid(self):
        with pytest.raises(ConfigurationError):
            check_class_membership(GrowthMap.ricker(2, 1), [1.0, 0.5])
