"""
Tests for point and line sampling, random streams and the geometry helpers
File: tests/test_sampling.py
"""

import math

import numpy as np
import pytest

from simulation.sampling import (
    ORIGIN, Point2, Rect, couple_to_intensity, sample_marked_lines, sample_marked_points,
)
from utils.errors import ParameterError
from utils.rng import LINE_STREAM, POINT_STREAM, generator, stream_seed, validate_seed
from utils.spatial_hash import SpatialHashGrid
from utils.union_find import DisjointSet


class TestRect:
    def test_degenerate_rectangle_rejected(self):
        with pytest.raises(ParameterError):
            Rect(1.0, 1.0, 0.0, 1.0)

    def test_box_and_measures(self):
        box = Rect.box(2.0, Point2(1.0, -1.0))
        assert (box.x_min, box.x_max, box.y_min, box.y_max) == (-1.0, 3.0, -3.0, 1.0)
        assert box.area == 16.0
        assert box.perimeter == 16.0
        assert box.circumradius == pytest.approx(2.0 * math.sqrt(2.0))

    def test_distance_and_margin(self):
        rect = Rect(0.0, 2.0, 0.0, 1.0)
        assert rect.distance([[1.0, 0.5], [3.0, 0.5], [3.0, 2.0]]).tolist() == pytest.approx(
            [0.0, 1.0, math.sqrt(2.0)])
        assert rect.dilate(0.5).margin_around(rect) == pytest.approx(0.5)
        assert rect.margin_around(rect.dilate(0.5)) == pytest.approx(-0.5)

    def test_contains_is_closed(self):
        rect = Rect(0.0, 1.0, 0.0, 1.0)
        assert rect.contains([[0.0, 0.0], [1.0, 1.0], [1.0, 1.0 + 1e-9]]).tolist() == [True, True, False]

    def test_non_finite_point(self):
        with pytest.raises(ParameterError):
            Point2(float('nan'), 0.0)


class TestStreams:
    def test_stream_seed_is_deterministic_and_label_dependent(self):
        assert stream_seed(7, 3, POINT_STREAM) == stream_seed(7, 3, POINT_STREAM)
        assert stream_seed(7, 3, POINT_STREAM) != stream_seed(7, 3, LINE_STREAM)
        assert stream_seed(7, 3, POINT_STREAM) != stream_seed(7, 4, POINT_STREAM)

    @pytest.mark.parametrize('seed', [-1, 2 ** 64, True, 1.5])
    def test_invalid_seed(self, seed):
        with pytest.raises(ParameterError):
            validate_seed(seed)

    def test_generator_split(self):
        first = generator(11, 0).uniform(size=4)
        second = generator(11, 1).uniform(size=4)
        assert not np.array_equal(first, second)
        assert np.array_equal(first, generator(11, 0).uniform(size=4))


class TestMarkedPoints:
    def test_reproducible(self):
        region = Rect(0.0, 5.0, 0.0, 5.0)
        first = sample_marked_points(2.0, region, 42)
        second = sample_marked_points(2.0, region, 42)
        assert np.array_equal(first.locations, second.locations)
        assert np.array_equal(first.intensity_marks, second.intensity_marks)
        assert np.array_equal(first.uniform_marks, second.uniform_marks)

    def test_marks_and_locations_in_range(self):
        region = Rect(-2.0, 3.0, 1.0, 4.0)
        points = sample_marked_points(3.0, region, 1)
        assert len(points) > 0
        assert region.contains(points.locations).all()
        assert ((points.intensity_marks >= 0) & (points.intensity_marks <= 3.0)).all()
        assert ((points.uniform_marks >= 0) & (points.uniform_marks <= 1.0)).all()

    def test_sorted_lexicographically(self):
        points = sample_marked_points(2.0, Rect(0.0, 10.0, 0.0, 10.0), 9)
        order = np.lexsort((points.locations[:, 1], points.locations[:, 0]))
        assert np.array_equal(order, np.arange(len(points)))

    def test_count_matches_intensity(self):
        points = sample_marked_points(2.0, Rect(0.0, 10.0, 0.0, 10.0), 5)
        assert abs(len(points) - 200) < 5 * math.sqrt(200)

    def test_zero_intensity_is_empty(self):
        assert len(sample_marked_points(0.0, Rect(0.0, 1.0, 0.0, 1.0), 3)) == 0

    def test_negative_intensity_rejected(self):
        with pytest.raises(ParameterError):
            sample_marked_points(-1.0, Rect(0.0, 1.0, 0.0, 1.0), 3)

    def test_iteration_yields_marked_points(self):
        points = sample_marked_points(1.0, Rect(0.0, 4.0, 0.0, 4.0), 8)
        first = next(iter(points))
        assert first.location.x == points.locations[0, 0]
        assert first.intensity_mark == points.intensity_marks[0]

    @pytest.mark.slow
    def test_counts_are_poisson(self):
        region = Rect(0.0, 10.0, 0.0, 10.0)
        counts = np.array([len(sample_marked_points(1.0, region, seed)) for seed in range(10000)])
        assert abs(counts.mean() - 100.0) < 0.4
        assert abs(counts.var(ddof=1) - 100.0) < 6.0


class TestCoupling:
    def test_restriction_is_nested(self):
        points = sample_marked_points(4.0, Rect(0.0, 10.0, 0.0, 10.0), 21)
        low = couple_to_intensity(points, 1.0)
        high = couple_to_intensity(points, 2.0)
        assert len(low) <= len(high) <= len(points)
        assert (low.intensity_marks <= 1.0).all()
        high_rows = {tuple(row) for row in high.locations}
        assert all(tuple(row) in high_rows for row in low.locations)

    def test_top_intensity_returns_same_set(self):
        points = sample_marked_points(1.0, Rect(0.0, 2.0, 0.0, 2.0), 2)
        assert couple_to_intensity(points, 1.0) is points

    def test_above_lambda_max_rejected(self):
        points = sample_marked_points(1.0, Rect(0.0, 2.0, 0.0, 2.0), 2)
        with pytest.raises(ParameterError):
            couple_to_intensity(points, 1.5)


class TestMarkedLines:
    def test_count_matches_intensity(self):
        lines = sample_marked_lines(0.5, 100.0, 13)
        expected = 2.0 * math.pi * 0.5 * 100.0
        assert abs(len(lines) - expected) < 5 * math.sqrt(expected)
        assert ((lines.distances >= 0) & (lines.distances <= 100.0)).all()
        assert ((lines.thetas >= 0) & (lines.thetas < 2.0 * math.pi)).all()

    def test_offsets_are_signed_distances(self):
        lines = sample_marked_lines(0.2, 5.0, 4, center=Point2(1.0, 1.0))
        offsets = lines.offsets([[1.0, 1.0]])
        assert offsets.shape == (1, len(lines))
        assert np.allclose(offsets[0], -lines.distances)

    def test_default_centre_is_origin(self):
        assert sample_marked_lines(0.1, 1.0, 0).center == ORIGIN


class TestDisjointSet:
    def test_merge_and_connected(self):
        sets = DisjointSet(5)
        assert sets.merge(0, 1)
        assert not sets.merge(1, 0)
        sets.merge_all([2, 3], [3, 4])
        assert sets.connected(2, 4)
        assert not sets.connected(0, 4)


class TestSpatialHash:
    def test_candidate_pairs_cover_all_close_pairs(self):
        rng = np.random.default_rng(3)
        points = rng.uniform(-5.0, 5.0, size=(300, 2))
        reach = 0.7
        first, second = SpatialHashGrid(points, reach).candidate_pairs()
        found = set(zip(first.tolist(), second.tolist()))
        assert all(i < j for i, j in found)
        gaps = np.hypot(*(points[:, None, :] - points[None, :, :]).transpose(2, 0, 1))
        close = {(i, j) for i, j in zip(*np.nonzero(gaps <= reach)) if i < j}
        assert close <= found

    def test_empty(self):
        first, second = SpatialHashGrid(np.empty((0, 2)), 1.0).candidate_pairs()
        assert len(first) == len(second) == 0
