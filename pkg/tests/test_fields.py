"""
Tests for radius laws and random field realizations
File: tests/test_fields.py
"""

import math

import numpy as np
import pytest

from simulation.distributions import (
    CylinderMarginal, Pareto, PointMass, RadialDistribution, Truncated, TwoPoint, check_moments,
    cylinder_containment, cylinder_moment_bounds, dilated_cylinder_bound, iid_point_coverage, same_law,
)
from simulation.fields import (
    ConstantFieldParams, CylinderFieldParams, VoronoiFieldParams, build_constant_field, build_cylinder_field,
    build_voronoi_field, level_set_crossing, truncate_field, voronoi_margin,
)
from simulation.sampling import ORIGIN, Rect, sample_marked_points
from utils.errors import ParameterError, QueryError
from utils.raster import Verdict


class TestRadialDistributions:
    @pytest.mark.parametrize('law', [
        PointMass(1.0),
        TwoPoint(0.3, 1.0, 2.0),
        Truncated(Pareto(1.5, 1.0), 10.0),
        CylinderMarginal(0.1, 2.0, PointMass(1.0)),
        CylinderMarginal(0.1, 2.0, TwoPoint(0.5, 0.5, 1.5)),
    ])
    def test_moments_match_quantile_integrals(self, law):
        check_moments(law)

    def test_two_point_quantile(self):
        law = TwoPoint(0.25, 1.0, 2.0)
        assert law.quantile(0.75) == 1.0
        assert law.quantile(0.76) == 2.0
        assert law.mean == pytest.approx(1.25)
        assert law.second_moment == pytest.approx(1.75)

    def test_pareto_moments(self):
        assert Pareto(1.5, 1.0).second_moment == math.inf
        assert Pareto(3.0, 1.0).second_moment == pytest.approx(3.0)
        assert Pareto(3.0, 1.0).tail_mean(0.5) == pytest.approx(1.5)
        assert Pareto(3.0, 1.0).tail_mean(2.0) == pytest.approx(0.375)

    def test_tail_mean_integral_matches_closed_form(self):
        uncapped = Truncated(Pareto(3.0, 1.0), math.inf)
        assert uncapped.tail_mean(2.0) == pytest.approx(0.375, rel=1e-6)
        assert TwoPoint(0.5, 1.0, 2.0).tail_mean(1.5) == pytest.approx(1.0)
        assert PointMass(1.0).tail_mean(1.0) == 0.0

    def test_cylinder_marginal_inherits_infinite_moments(self):
        law = CylinderMarginal(0.1, 2.0, Pareto(1.5, 1.0))
        assert law.second_moment == math.inf
        assert math.isfinite(law.mean)
        assert law.mean <= Pareto(1.5, 1.0).mean

    def test_divergent_integral_raises(self):
        law = Truncated(Pareto(1.5, 1.0), math.inf)
        assert law.second_moment == math.inf
        with pytest.raises(ParameterError, match='did not converge'):
            RadialDistribution.moment(law, 2)

    def test_pareto_shape_must_exceed_one(self):
        with pytest.raises(ParameterError):
            Pareto(1.0, 1.0)

    def test_truncated_bound_and_tail(self):
        law = Truncated(Pareto(2.0, 1.0), 4.0)
        assert law.bound == 4.0
        assert law.tail(3.9) == pytest.approx(1.0 / 3.9 ** 2)
        assert law.tail(4.0) == 0.0

    def test_cylinder_marginal_atom_at_zero(self):
        law = CylinderMarginal(0.1, 2.0, PointMass(1.0))
        m = 2.0 * math.pi * 0.1 * 2.0
        assert law.tail(0.0) == pytest.approx(1.0 - math.exp(-m))
        assert law.quantile(math.exp(-m) * 0.5) == 0.0
        assert law.quantile(0.99) == 1.0
        assert law.tail(0.0) == pytest.approx(cylinder_containment(0.1, 2.0))

    def test_cylinder_moment_sandwich(self):
        values = TwoPoint(0.5, 0.5, 1.5)
        law = CylinderMarginal(0.05, 2.0, values)
        for order in (1, 2):
            lower, upper = cylinder_moment_bounds(0.05, 2.0, values, order)
            assert lower <= law.moment(order) <= upper

    def test_same_law(self):
        assert same_law(TwoPoint(0.5, 1.0, 2.0), TwoPoint(0.5, 1.0, 2.0))
        assert not same_law(TwoPoint(0.5, 1.0, 2.0), TwoPoint(0.4, 1.0, 2.0))

    def test_closed_forms(self):
        assert iid_point_coverage(0.5, PointMass(1.0)) == pytest.approx(0.79227, abs=1e-5)
        assert iid_point_coverage(0.2, PointMass(1.0)) == pytest.approx(0.467, abs=1e-3)
        assert iid_point_coverage(1.0, PointMass(1.0)) == pytest.approx(0.957, abs=1e-3)
        assert dilated_cylinder_bound(0.1, 2.0, PointMass(1.0)) == pytest.approx(0.848, abs=1e-3)


class TestConstantField:
    def test_values(self):
        realized = build_constant_field(1.5, Rect.box(2.0))
        assert realized.evaluate([[0.0, 0.0], [1.0, -1.0]]).tolist() == [1.5, 1.5]
        assert realized.marginal == PointMass(1.5)

    def test_query_outside_window(self):
        realized = ConstantFieldParams(1.0).build(Rect.box(1.0))
        with pytest.raises(QueryError):
            realized.evaluate([[2.0, 0.0]])


class TestCylinderField:
    def test_matches_brute_force_minimum(self):
        params = CylinderFieldParams(0.1, 2.0, TwoPoint(0.5, 0.5, 1.5))
        realized = build_cylinder_field(params, Rect.box(10.0), seed=4)
        xy = np.random.default_rng(0).uniform(-10.0, 10.0, size=(200, 2))
        inside = np.abs(realized.lines.offsets(xy)) <= params.base_radius
        expected = np.where(inside.any(axis=1),
                            np.where(inside, realized.line_values, np.inf).min(axis=1), 0.0)
        assert np.array_equal(realized.evaluate(xy), expected)

    def test_values_in_support(self, cylinder_params):
        realized = build_cylinder_field(cylinder_params, Rect.box(5.0), seed=1)
        values = realized.evaluate(np.random.default_rng(1).uniform(-5.0, 5.0, size=(500, 2)))
        assert set(np.unique(values).tolist()) <= {0.0, 1.0}

    def test_deterministic(self, cylinder_params):
        first = build_cylinder_field(cylinder_params, Rect.box(5.0), seed=8)
        second = build_cylinder_field(cylinder_params, Rect.box(5.0), seed=8)
        xy = [[0.0, 0.0], [3.0, -2.0]]
        assert np.array_equal(first.evaluate(xy), second.evaluate(xy))

    def test_containment_frequency(self, cylinder_params):
        hits = sum(build_cylinder_field(cylinder_params, Rect.box(1.0), seed=s).value_at(ORIGIN) > 0
                   for s in range(2000))
        p = cylinder_containment(0.1, 2.0)
        assert abs(hits / 2000 - p) < 4 * math.sqrt(p * (1 - p) / 2000)

    @pytest.mark.slow
    def test_dilated_containing_count_mean(self, cylinder_params):
        counts = np.array([
            build_cylinder_field(cylinder_params, Rect.box(1.0), seed=s).containing_count([[0.0, 0.0]], extra=1.0)[0]
            for s in range(10000)])
        mean = 2.0 * math.pi * 0.1 * 3.0
        assert abs(counts.mean() - mean) < 3 * math.sqrt(mean / 10000)


class TestVoronoiField:
    def test_nearest_seed_matches_brute_force(self, voronoi_params):
        window = Rect.box(4.0)
        realized = build_voronoi_field(voronoi_params, window, seed=3)
        xy = np.random.default_rng(2).uniform(-4.0, 4.0, size=(300, 2))
        distances = np.hypot(*(xy[:, None, :] - realized.seeds[None, :, :]).transpose(2, 0, 1))
        nearest = distances.argmin(axis=1)
        _, index = realized.nearest_seed(xy)
        assert np.array_equal(index, nearest)
        expected = np.where(realized.high[nearest], 1.0, 0.5)
        assert np.array_equal(realized.evaluate(xy), expected)

    def test_margin_certificate(self, voronoi_params):
        window = Rect.box(4.0)
        realized = build_voronoi_field(voronoi_params, window, eps_pad=1e-6, seed=5)
        assert realized.padded_window.contains_rect(window.dilate(realized.margin))
        assert realized.failure_probability_budget <= 1e-6
        distance, _ = realized.nearest_seed(np.array([c for c in window.corners]))
        assert (distance <= realized.margin).all()

    def test_margin_grows_with_tighter_budget(self):
        window = Rect.box(4.0)
        assert voronoi_margin(1.0, window, 1e-9) > voronoi_margin(1.0, window, 1e-3)

    def test_marginal_frequency(self, voronoi_params):
        high = sum(build_voronoi_field(voronoi_params, Rect.box(0.5), seed=s).value_at(ORIGIN) == 1.0
                   for s in range(1000))
        assert abs(high / 1000 - 0.5) < 4 * math.sqrt(0.25 / 1000)

    def test_coupled_colours_follow_least_intensity_point(self, voronoi_params):
        window = Rect.box(3.0)
        points = sample_marked_points(2.0, window, 17)
        realized = build_voronoi_field(voronoi_params, window, seed=6, colour_points=points)
        _, cells = realized.nearest_seed(points.locations)
        for cell in np.unique(cells):
            members = np.flatnonzero(cells == cell)
            leader = members[np.argmin(points.intensity_marks[members])]
            assert realized.high[cell] == (points.uniform_marks[leader] > 0.5)

    @pytest.mark.parametrize('p, value', [(0.0, 0.5), (1.0, 1.0)])
    def test_degenerate_colouring_is_constant(self, p, value):
        params = VoronoiFieldParams(1.0, p, 0.5, 1.0)
        assert same_law(params.marginal(), PointMass(value))
        window = Rect.box(4.0)
        xy = np.random.default_rng(3).uniform(-4.0, 4.0, size=(400, 2))
        for seed in range(5):
            values = build_voronoi_field(params, window, seed=seed).evaluate(xy)
            assert (values == value).all()

    def test_sparse_seeds_cover_window_corners(self):
        params = VoronoiFieldParams(0.01, 0.5, 0.5, 1.0)
        window = Rect.box(4.0)
        corners = np.array([c for c in window.corners])
        for seed in range(50):
            values = build_voronoi_field(params, window, seed=seed).evaluate(corners)
            assert set(values.tolist()) <= {0.5, 1.0}


class TestTruncationAndLevelSets:
    def test_truncate_field(self, cylinder_params):
        realized = build_cylinder_field(cylinder_params, Rect.box(5.0), seed=2)
        capped = truncate_field(realized, 0.5)
        xy = np.random.default_rng(4).uniform(-5.0, 5.0, size=(100, 2))
        assert np.array_equal(capped.evaluate(xy), np.minimum(realized.evaluate(xy), 0.5))
        assert truncate_field(realized, math.inf) is realized
        assert capped.marginal.bound == 0.5

    def test_negative_truncation_rejected(self):
        with pytest.raises(ParameterError):
            truncate_field(build_constant_field(1.0, Rect.box(1.0)), -1.0)

    def test_level_set_crossing_constant(self):
        realized = build_constant_field(1.0, Rect(0.0, 3.0, 0.0, 1.0))
        rect = Rect(0.0, 3.0, 0.0, 1.0)
        assert level_set_crossing(realized, 0.5, rect, 0.1) == Verdict.YES
        assert level_set_crossing(realized, 2.0, rect, 0.1) == Verdict.NO

    def test_level_set_resolution_too_coarse(self):
        realized = build_constant_field(1.0, Rect(0.0, 3.0, 0.0, 1.0))
        with pytest.raises(ParameterError):
            level_set_crossing(realized, 0.5, Rect(0.0, 3.0, 0.0, 1.0), 2.0)
