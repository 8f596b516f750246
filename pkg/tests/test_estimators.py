"""
Tests for Monte Carlo estimators and correlation proxies
File: tests/test_estimators.py
"""

import math

import numpy as np
import pytest

from analysis.estimators import (
    Estimate, PointCoverageEvent, compare_geostat_iid, estimate_field_mixing_proxy,
    estimate_pi_lambda, estimate_probability, estimate_rho_proxy, max_abs_covariance,
)
from simulation.distributions import Pareto, PointMass, TwoPoint, dilated_cylinder_bound
from simulation.fields import CylinderFieldParams, VoronoiFieldParams
from simulation.scenario import IID, ModelSpec
from utils.errors import PaddingError, ParameterError, ReplicationError
from utils.rng import SAMPLE_STREAM, generator, stream_seed


def always(master_seed, replication):
    return True


def fair_coin(master_seed, replication):
    return generator(stream_seed(master_seed, replication, SAMPLE_STREAM)).uniform() < 0.5


def broken(master_seed, replication):
    if replication == 3:
        raise PaddingError("pad too small")
    return False


class TestEstimate:
    def test_wilson_interval_contains_value(self):
        for successes in (0, 1, 37, 99, 100):
            estimate = Estimate.from_counts(successes, 100, 1)
            assert estimate.ci_low <= estimate.value <= estimate.ci_high
            assert estimate.value == successes / 100

    def test_extreme_counts(self):
        assert Estimate.from_counts(0, 50, 1).ci_low == 0.0
        assert Estimate.from_counts(50, 50, 1).ci_high == 1.0

    def test_leakage_total_is_capped(self):
        assert Estimate.from_counts(1, 2, 0, leakage=3.0).leakage_budget_total == 1.0

    def test_no_replications(self):
        with pytest.raises(ParameterError):
            Estimate.from_counts(0, 0, 1)

    def test_exact(self):
        estimate = Estimate.exact(0.25, 7)
        assert (estimate.value, estimate.ci_low, estimate.ci_high) == (0.25, 0.25, 0.25)


class TestEstimateProbability:
    def test_always_true(self):
        estimate = estimate_probability(always, 200, 5, n_jobs=1)
        assert estimate.value == 1.0
        assert estimate.ci_high == 1.0
        assert estimate.replications == 200

    def test_fair_coin(self):
        estimate = estimate_probability(fair_coin, 10000, 11, n_jobs=1)
        assert abs(estimate.value - 0.5) < 3 * 0.005

    def test_deterministic(self):
        assert estimate_probability(fair_coin, 500, 3, n_jobs=1) == estimate_probability(fair_coin, 500, 3, n_jobs=1)

    def test_failed_replication_is_named(self):
        with pytest.raises(ReplicationError, match="replication 3"):
            estimate_probability(broken, 10, 0, n_jobs=1)

    def test_zero_intensity_coverage(self, unit_disc_model):
        estimate = estimate_probability(PointCoverageEvent(unit_disc_model, 0.0), 100, 1, n_jobs=1)
        assert estimate.value == 0.0

    def test_requires_replications(self):
        with pytest.raises(ParameterError):
            estimate_probability(always, 0, 1)

    @pytest.mark.slow
    @pytest.mark.parametrize('p', [0.01, 0.5, 0.99])
    def test_wilson_coverage(self, p):
        rng = np.random.default_rng(int(p * 100))
        counts = rng.binomial(1000, p, size=10000)
        covered = 0
        for k in counts:
            estimate = Estimate.from_counts(int(k), 1000, 0)
            covered += estimate.ci_low <= p <= estimate.ci_high
        assert 0.93 <= covered / 10000 <= 0.97


class TestPiLambda:
    def test_bounded_field_never_reaches(self, unit_disc_model):
        estimate = estimate_pi_lambda(unit_disc_model, 0.5, 25.0, 0.2, 100, 3, n_jobs=1)
        assert estimate.value == 0.0
        assert estimate.successes == 0

    def test_zero_intensity(self, iid_unit_model):
        assert estimate_pi_lambda(iid_unit_model, 0.0, 5.0, 0.2, 20, 3, n_jobs=1).value == 0.0

    def test_eps0_range(self, unit_disc_model):
        with pytest.raises(ParameterError):
            estimate_pi_lambda(unit_disc_model, 0.5, 5.0, 0.3, 10, 3)

    def test_large_discs_reach(self):
        model = ModelSpec(field=VoronoiFieldParams(1.0, 1.0, 0.5, 3.0))
        estimate = estimate_pi_lambda(model, 1.0, 4.0, 0.2, 20, 3, n_jobs=1)
        assert estimate.value == 1.0

    @pytest.mark.slow
    def test_bounded_field_never_reaches_at_scale(self, unit_disc_model):
        estimate = estimate_pi_lambda(unit_disc_model, 0.5, 25.0, 0.2, 10000, 5)
        assert estimate.successes == 0
        assert estimate.ci_high < 1e-3

    @pytest.mark.slow
    def test_pareto_reach_decreases_with_scale(self):
        model = ModelSpec(distribution=Pareto(4.0, 0.5), marking=IID)
        values = [estimate_pi_lambda(model, 0.5, n, 0.2, 2000, 6, eps_leak=1e-3).value
                  for n in (10.0, 20.0, 40.0)]
        assert values[0] > values[1] > values[2]


class TestMixingProxies:
    def test_constant_field_proxy_is_zero(self, unit_disc_model):
        estimate = estimate_field_mixing_proxy(unit_disc_model, 5.0, 0.2, [0.5], 50, 1, n_jobs=1)
        assert estimate.value == 0.0

    def test_requires_levels(self, voronoi_params):
        with pytest.raises(ParameterError):
            estimate_field_mixing_proxy(ModelSpec(field=voronoi_params), 5.0, 0.2, [], 10, 1)

    def test_rho_zero_intensity(self, unit_disc_model):
        report = estimate_rho_proxy(unit_disc_model, 0.0, 5.0, 0.2, 30, 2, n_jobs=1)
        assert report.rho.value == 0.0
        assert report.pi_lambda.value == 0.0
        assert report.consistent

    def test_rho_boxes_must_be_separated(self, unit_disc_model):
        with pytest.raises(ParameterError):
            estimate_rho_proxy(unit_disc_model, 0.5, 5.0, 0.2, 10, 2, spacing=5.0)

    def test_constant_field_sandwich(self, unit_disc_model):
        report = estimate_rho_proxy(unit_disc_model, 0.4, 25.0, 0.2, 200, 4, n_jobs=1)
        assert report.pi_lambda.value == 0.0
        assert report.pi_bar.method == 'exact'
        assert report.consistent

    def test_max_abs_covariance(self):
        first = np.array([[0.0], [1.0], [0.0], [1.0]])
        value, error = max_abs_covariance(first, first)
        assert value == pytest.approx(0.25)
        assert max_abs_covariance(first, np.ones((4, 1)))[0] == 0.0

    def test_voronoi_sandwich(self):
        model = ModelSpec(field=VoronoiFieldParams(1.0, 0.5, 0.5, 1.0))
        report = estimate_rho_proxy(model, 1.0, 10.0, 0.2, 300, 8, n_jobs=1)
        assert report.pi_bar.method != 'exact'
        assert report.consistent

    @pytest.mark.slow
    def test_voronoi_proxy_vanishes_for_fine_cells(self):
        def proxy(mu):
            model = ModelSpec(field=VoronoiFieldParams(mu, 0.5, 0.5, 1.0))
            return estimate_field_mixing_proxy(model, 5.0, 0.2, [0.75], 2000, 12).value

        fine, coarse = proxy(25.0), proxy(0.01)
        assert fine < 0.03
        assert fine < coarse

    @pytest.mark.slow
    def test_cylinder_proxy_decreases_with_scale(self):
        model = ModelSpec(field=CylinderFieldParams(0.1, 2.0, TwoPoint(0.5, 0.5, 1.5)))
        near = estimate_field_mixing_proxy(model, 2.0, 0.2, [1.0], 2000, 14)
        far = estimate_field_mixing_proxy(model, 20.0, 0.2, [1.0], 2000, 14)
        assert near.value > far.value


class TestComparison:
    def test_zero_intensity_both_arms_zero(self, cylinder_params):
        report = compare_geostat_iid(ModelSpec(field=cylinder_params), 0.0, [1.0], [1.0], 20, 1, n_jobs=1)
        for row in report.rows:
            assert row.geostatistical.value == 0.0
            assert row.iid.value == 0.0
            assert row.flag == ''

    def test_mismatched_marginal(self, voronoi_params):
        with pytest.raises(ParameterError):
            compare_geostat_iid(ModelSpec(field=voronoi_params), 1.0, [], [], 10, 1,
                                iid_distribution=TwoPoint(0.3, 0.5, 1.0))

    def test_matching_marginal_accepted(self, voronoi_params):
        report = compare_geostat_iid(ModelSpec(field=voronoi_params), 0.5, [], [], 10, 1,
                                     iid_distribution=TwoPoint(0.5, 0.5, 1.0), n_jobs=1)
        assert [row.quantity for row in report.rows] == ['point_coverage']

    def test_requires_geostatistical_model(self, iid_unit_model):
        with pytest.raises(ParameterError):
            compare_geostat_iid(iid_unit_model, 1.0, [], [], 10, 1)

    def test_paired_runs_are_deterministic(self, voronoi_params):
        model = ModelSpec(field=voronoi_params)
        first = compare_geostat_iid(model, 1.0, [1.0], [1.0], 30, 9, n_jobs=1)
        second = compare_geostat_iid(model, 1.0, [1.0], [1.0], 30, 9, n_jobs=1)
        assert first.rows == second.rows

    @pytest.mark.slow
    @pytest.mark.parametrize('lam', [0.5, 1.0, 2.0])
    @pytest.mark.parametrize('field', [
        CylinderFieldParams(0.1, 2.0, TwoPoint(0.5, 0.5, 1.0)),
        VoronoiFieldParams(1.0, 0.5, 0.5, 1.0),
    ])
    def test_point_coverage_dominance(self, field, lam):
        report = compare_geostat_iid(ModelSpec(field=field), lam, [], [], 20000, 31, n_jobs=1)
        row = report.row('point_coverage')
        sigma = math.hypot(row.geostatistical.std_error, row.iid.std_error)
        assert row.geostatistical.value <= row.iid.value + 3 * sigma

    @pytest.mark.slow
    def test_line_coverage_reversal(self):
        model = ModelSpec(field=CylinderFieldParams(0.05, 2.0, PointMass(1.0)))
        report = compare_geostat_iid(model, 2.0, [1.0, 2.0, 4.0, 8.0, 16.0], [], 20000, 7, n_jobs=1)
        assert any(row.flag == 'geostatistical>iid' for row in report.rows
                   if row.quantity == 'segment_coverage')

    @pytest.mark.slow
    @pytest.mark.parametrize('lam', [1.0, 10.0, 100.0])
    def test_plane_coverage_bound(self, lam):
        model = ModelSpec(field=CylinderFieldParams(0.1, 2.0, PointMass(1.0)))
        estimate = estimate_probability(PointCoverageEvent(model, lam), 2000, 23)
        bound = dilated_cylinder_bound(0.1, 2.0, PointMass(1.0))
        assert bound == pytest.approx(1.0 - math.exp(-0.6 * math.pi))
        assert estimate.value <= bound + 3 * estimate.std_error
        if lam == 100.0:
            assert estimate.value >= 0.8
