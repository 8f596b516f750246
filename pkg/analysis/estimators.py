"""
Monte Carlo Estimators
File: analysis/estimators.py

Event probabilities with Wilson intervals, the far-disc probability pi_lambda,
finite test-family proxies for the field and occupied-set mixing
coefficients, and paired geostatistical versus i.i.d. comparisons.
"""

import functools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import binomtest, norm

from simulation.boolean_model import (
    DEFAULT_EPS_LEAK, CrossingQuery, covered_area_fraction, covers_point, covers_segment,
    has_crossing, has_vacant_crossing, origin_cluster_reaches, required_pad,
)
from simulation.distributions import same_law
from simulation.fields import DEFAULT_EPS_PAD
from simulation.sampling import ORIGIN, Point2, Rect
from simulation.scenario import GEOSTATISTICAL, realize_field, realize_replication
from utils.errors import ParameterError
from utils.parallel import run_replications
from utils.rng import SAMPLE_STREAM, stream_seed, validate_seed

logger = logging.getLogger(__name__)

CONFIDENCE = 0.95
FIELD_GRID = 33
EPS0_DEFAULT = 0.2


@dataclass(frozen=True)
class Estimate:
    """Point estimate with a confidence interval and its provenance"""

    value: float
    ci_low: float
    ci_high: float
    replications: int
    master_seed: int
    leakage_budget_total: float = 0.0
    successes: Optional[int] = None
    std_error: float = 0.0
    method: str = 'wilson'

    @classmethod
    def from_counts(cls, successes, replications, master_seed, leakage=0.0, confidence=CONFIDENCE):
        if replications < 1:
            raise ParameterError(f"replications must be >= 1, got {replications}")
        value = successes / replications
        interval = binomtest(int(successes), int(replications)).proportion_ci(
            confidence_level=confidence, method='wilson')
        return cls(
            value=value,
            ci_low=min(max(float(interval.low), 0.0), value),
            ci_high=max(min(float(interval.high), 1.0), value),
            replications=int(replications),
            master_seed=int(master_seed),
            leakage_budget_total=min(1.0, float(leakage)),
            successes=int(successes),
            std_error=math.sqrt(value * (1.0 - value) / replications),
        )

    @classmethod
    def from_statistic(cls, value, std_error, replications, master_seed, leakage=0.0,
                       confidence=CONFIDENCE):
        """Normal interval around a statistic living in [0, 1]"""
        z = norm.ppf(0.5 + confidence / 2.0)
        value = float(value)
        return cls(
            value=value,
            ci_low=max(0.0, value - z * std_error),
            ci_high=min(1.0, value + z * std_error),
            replications=int(replications),
            master_seed=int(master_seed),
            leakage_budget_total=min(1.0, float(leakage)),
            std_error=float(std_error),
            method='normal',
        )

    @classmethod
    def exact(cls, value, master_seed):
        """A value known without simulation"""
        return cls(value, value, value, 0, int(master_seed), method='exact')

    def above(self, other):
        """This interval lies strictly above the other"""
        return self.ci_low > other.ci_high

    def as_row(self):
        return {
            'value': self.value,
            'ci_low': self.ci_low,
            'ci_high': self.ci_high,
            'reps': self.replications,
            'seed': self.master_seed,
            'leakage_budget': self.leakage_budget_total,
        }


@dataclass(frozen=True)
class Outcome:
    success: bool
    leakage: float = 0.0


def _run_event(experiment, master_seed, replication):
    outcome = experiment(master_seed, replication)
    return outcome if isinstance(outcome, Outcome) else Outcome(bool(outcome))


def estimate_probability(experiment, replications, master_seed, n_jobs=None,
                         confidence=CONFIDENCE, progress=False):
    """Fraction of replications where experiment(master_seed, r) succeeds"""
    if replications < 1:
        raise ParameterError(f"replications must be >= 1, got {replications}")
    master_seed = validate_seed(master_seed)
    outcomes = run_replications(functools.partial(_run_event, experiment, master_seed),
                                replications, n_jobs, progress=progress)
    successes = sum(o.success for o in outcomes)
    leakage = sum(o.leakage for o in outcomes)
    return Estimate.from_counts(successes, replications, master_seed, leakage, confidence)


def estimate_mean(experiment, replications, master_seed, n_jobs=None,
                  confidence=CONFIDENCE, progress=False):
    """Mean of a [0, 1]-valued experiment with a normal interval"""
    if replications < 1:
        raise ParameterError(f"replications must be >= 1, got {replications}")
    master_seed = validate_seed(master_seed)
    samples = np.asarray(run_replications(functools.partial(experiment, master_seed),
                                          replications, n_jobs, progress=progress), dtype=float)
    std_error = samples.std(ddof=1) / math.sqrt(replications) if replications > 1 else 0.0
    return Estimate.from_statistic(samples.mean(), std_error, replications, master_seed,
                                   confidence=confidence)


@dataclass(frozen=True)
class ModelEvent:
    """Base for events on one coupled replication of a model at intensity lam"""

    model: object
    lam: float
    eps_pad: float = DEFAULT_EPS_PAD
    eps_leak: float = DEFAULT_EPS_LEAK

    def realize(self, master_seed, replication, window, extra_pad=0.0):
        return realize_replication(self.model, window, self.lam, master_seed, replication,
                                   self.eps_pad, self.eps_leak, extra_pad)


@dataclass(frozen=True)
class PointCoverageEvent(ModelEvent):
    point: Point2 = ORIGIN

    def __call__(self, master_seed, replication):
        window = Rect.box(0.5, self.point)
        occ = self.realize(master_seed, replication, window).occupied
        return Outcome(covers_point(occ, self.point), occ.leakage_budget)


@dataclass(frozen=True)
class SegmentCoverageEvent(ModelEvent):
    length: float = 1.0

    def __call__(self, master_seed, replication):
        window = Rect(-0.5, self.length + 0.5, -0.5, 0.5)
        occ = self.realize(master_seed, replication, window).occupied
        return Outcome(covers_segment(occ, self.length), occ.leakage_budget)


@dataclass(frozen=True)
class CrossingEvent(ModelEvent):
    """Crossing of [0, width] x [0, height]; failure=True counts missing crossings"""

    width: float = 3.0
    height: float = 1.0
    direction: str = 'horizontal'
    phase: str = 'occupied'
    failure: bool = False

    def __call__(self, master_seed, replication):
        rect = Rect(0.0, self.width, 0.0, self.height)
        occ = self.realize(master_seed, replication, rect).occupied
        query = CrossingQuery(rect, self.direction, self.phase)
        crossed = has_vacant_crossing(occ, query) if self.phase == 'vacant' else has_crossing(occ, query)
        return Outcome(crossed != self.failure, occ.leakage_budget)


@dataclass(frozen=True)
class OriginClusterEvent(ModelEvent):
    radius_n: float = 1.0

    def __call__(self, master_seed, replication):
        occ = self.realize(master_seed, replication, Rect.box(self.radius_n)).occupied
        return Outcome(origin_cluster_reaches(occ, self.radius_n), occ.leakage_budget)


@dataclass(frozen=True)
class AreaFractionSample(ModelEvent):
    half_width: float = 5.0
    n_points: int = 1024

    def __call__(self, master_seed, replication):
        window = Rect.box(self.half_width)
        occ = self.realize(master_seed, replication, window).occupied
        seed = stream_seed(master_seed, replication, SAMPLE_STREAM)
        return covered_area_fraction(occ, window, self.n_points, seed).value


def _check_eps0(eps0):
    if not 0.0 < eps0 <= 0.2:
        raise ParameterError(f"eps0 must lie in (0, 1/5], got {eps0}")


def _check_scale(n):
    if not (n > 0 and math.isfinite(n)):
        raise ParameterError(f"scale n must be finite and positive, got {n}")


def _far_disc_reaches(occ, box, outer):
    """Some disc centred outside outer meets box"""
    if not len(occ):
        return False
    reaches = box.distance(occ.centers) <= occ.radii
    return bool(np.any(reaches & ~outer.contains(occ.centers)))


@dataclass(frozen=True)
class PiLambdaEvent(ModelEvent):
    """A Poisson point outside K' = B_inf(0, (1 + eps0/4) n) has a disc meeting K = B_inf(0, n)"""

    n: float = 1.0
    eps0: float = EPS0_DEFAULT

    def __call__(self, master_seed, replication):
        box = Rect.box(self.n)
        outer = Rect.box((1.0 + self.eps0 / 4.0) * self.n)
        extra = (self.eps0 / 4.0) * self.n * (1.0 + 1e-9)
        occ = self.realize(master_seed, replication, box, extra_pad=extra).occupied
        return Outcome(_far_disc_reaches(occ, box, outer), occ.leakage_budget)


def estimate_pi_lambda(model, lam, n, eps0, replications, seed, eps_pad=DEFAULT_EPS_PAD,
                       eps_leak=DEFAULT_EPS_LEAK, n_jobs=None, progress=False):
    """Monte Carlo estimate of pi_lambda(n) up to the recorded leakage budget"""
    _check_eps0(eps0)
    _check_scale(n)
    event = PiLambdaEvent(model, lam, eps_pad, eps_leak, n=n, eps0=eps0)
    return estimate_probability(event, replications, seed, n_jobs, progress=progress)


def separated_boxes(n, eps0, spacing=None, half_width=None):
    """Two sup-norm boxes of half-width half_width centred at 0 and (spacing, 0)"""
    spacing = (2.0 + eps0) * n if spacing is None else spacing
    if spacing < (2.0 + eps0) * n * (1.0 - 1e-12):
        raise ParameterError(f"boxes need spacing >= (2 + eps0) n = {(2.0 + eps0) * n}, got {spacing}")
    half_width = n if half_width is None else half_width
    return Rect.box(half_width), Rect.box(half_width, Point2(spacing, 0.0))


def field_grid(box, size=FIELD_GRID):
    xs = np.linspace(box.x_min, box.x_max, size)
    ys = np.linspace(box.y_min, box.y_max, size)
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def field_test_values(realized, box, levels):
    """Test functions of the field on box: min over the field grid > t, centre value > t"""
    values = realized.evaluate(field_grid(box))
    centre = realized.value_at(box.center)
    levels = np.asarray(levels, dtype=float)
    return np.concatenate([values.min() > levels, centre > levels])


def max_abs_covariance(first, second):
    """Largest |empirical covariance| between columns of first and second

    Returns (value, std_error) with the standard error of the maximising pair
    from the influence function of the covariance.
    """
    first = np.asarray(first, dtype=float)
    second = np.asarray(second, dtype=float)
    count = len(first)
    centred1 = first - first.mean(axis=0)
    centred2 = second - second.mean(axis=0)
    covariance = centred1.T @ centred2 / count
    i, j = np.unravel_index(np.argmax(np.abs(covariance)), covariance.shape)
    value = abs(float(covariance[i, j]))
    if count < 2 or value == 0.0:
        return value, 0.0
    influence = centred1[:, i] * centred2[:, j] - covariance[i, j]
    return value, float(influence.std(ddof=1) / math.sqrt(count))


def default_test_levels(model):
    levels = np.asarray(model.marginal().quantile([0.25, 0.5, 0.75]), dtype=float)
    return sorted({float(v) for v in levels if math.isfinite(v)})


def _mixing_task(model, window, boxes, levels, eps_pad, master_seed, replication):
    realized = realize_field(model, window, master_seed, replication, eps_pad)
    return [field_test_values(realized, box, levels) for box in boxes]


def estimate_field_mixing_proxy(model, n, eps0, test_levels, replications, seed,
                                eps_pad=DEFAULT_EPS_PAD, n_jobs=None, progress=False):
    """Finite-family lower bound on the field mixing coefficient between separated boxes

    The boxes are B_inf(0, (1 + eps0/4) n) and its translate by ((2 + eps0) n, 0).
    """
    _check_eps0(eps0)
    _check_scale(n)
    if not test_levels:
        raise ParameterError("test_levels must not be empty")
    if replications < 1:
        raise ParameterError(f"replications must be >= 1, got {replications}")
    seed = validate_seed(seed)
    if model.field is None:
        return Estimate.exact(0.0, seed)
    boxes = separated_boxes(n, eps0, half_width=(1.0 + eps0 / 4.0) * n)
    window = boxes[0].union(boxes[1])
    rows = run_replications(
        functools.partial(_mixing_task, model, window, boxes, tuple(test_levels), eps_pad, seed),
        replications, n_jobs, progress=progress)
    first = np.array([row[0] for row in rows])
    second = np.array([row[1] for row in rows])
    value, std_error = max_abs_covariance(first, second)
    return Estimate.from_statistic(value, std_error, replications, seed)


@dataclass(frozen=True)
class CorrelationReport:
    """rho proxy (lower bound) with the surrogate upper bound 4 pi + pi-bar proxy"""

    rho: Estimate
    pi_lambda: Estimate
    pi_bar: Estimate
    upper_bound: float
    upper_std_error: float

    @property
    def consistent(self):
        """rho proxy <= 4 pi + pi-bar within three standard errors of each side"""
        return self.rho.value - 3.0 * self.rho.std_error <= self.upper_bound + 3.0 * self.upper_std_error


def _rho_task(event, boxes, outers, levels, master_seed, replication):
    window = boxes[0].union(boxes[1])
    replica = event.realize(master_seed, replication, window, extra_pad=event.extra_pad)
    occ = replica.occupied
    crossings = [has_crossing(occ, CrossingQuery(box)) for box in boxes]
    far = _far_disc_reaches(occ, boxes[0], outers[0])
    tests = None
    if replica.realized_field is not None and levels:
        tests = [field_test_values(replica.realized_field, outer, levels) for outer in outers]
    return crossings, far, tests, occ.leakage_budget


@dataclass(frozen=True)
class _RhoEvent(ModelEvent):
    extra_pad: float = 0.0


def estimate_rho_proxy(model, lam, n, eps0, replications, seed, spacing=None, test_levels=None,
                       eps_pad=DEFAULT_EPS_PAD, eps_leak=DEFAULT_EPS_LEAK, n_jobs=None,
                       progress=False):
    """Crossing-indicator covariance of two separated boxes, with pi and pi-bar from the same draws"""
    _check_eps0(eps0)
    _check_scale(n)
    if replications < 1:
        raise ParameterError(f"replications must be >= 1, got {replications}")
    seed = validate_seed(seed)
    boxes = separated_boxes(n, eps0, spacing)
    grow = (eps0 / 4.0) * n
    outers = tuple(box.dilate(grow) for box in boxes)
    levels = tuple(default_test_levels(model) if test_levels is None else test_levels)
    event = _RhoEvent(model, lam, eps_pad, eps_leak, extra_pad=grow * (1.0 + 1e-9))
    rows = run_replications(functools.partial(_rho_task, event, boxes, outers, levels, seed),
                            replications, n_jobs, progress=progress)

    crossings = np.array([row[0] for row in rows], dtype=float)
    leakage = sum(row[3] for row in rows)
    rho_value, rho_error = max_abs_covariance(crossings[:, :1], crossings[:, 1:])
    rho = Estimate.from_statistic(rho_value, rho_error, replications, seed, leakage)
    pi = Estimate.from_counts(sum(row[1] for row in rows), replications, seed, leakage)
    if model.marking != GEOSTATISTICAL or model.has_constant_field or not levels:
        pi_bar = Estimate.exact(0.0, seed)
    else:
        first = np.array([row[2][0] for row in rows])
        second = np.array([row[2][1] for row in rows])
        pi_bar = Estimate.from_statistic(*max_abs_covariance(first, second), replications, seed)
    upper = 4.0 * pi.value + pi_bar.value
    upper_error = math.sqrt(16.0 * pi.std_error ** 2 + pi_bar.std_error ** 2)
    return CorrelationReport(rho, pi, pi_bar, upper, upper_error)


@dataclass(frozen=True)
class ComparisonRow:
    quantity: str
    parameter: Optional[float]
    geostatistical: Estimate
    iid: Estimate

    @property
    def flag(self):
        if self.geostatistical.above(self.iid):
            return 'geostatistical>iid'
        if self.iid.above(self.geostatistical):
            return 'iid>geostatistical'
        return ''


@dataclass(frozen=True)
class ComparisonReport:
    lam: float
    master_seed: int
    rows: list = field(default_factory=list)

    def flagged(self):
        return [row for row in self.rows if row.flag]

    def row(self, quantity, parameter=None):
        for candidate in self.rows:
            if candidate.quantity == quantity and candidate.parameter == parameter:
                return candidate
        raise KeyError((quantity, parameter))


def _comparison_task(arms, window, s_grid, n_grid, lam, eps_pad, eps_leak, shared_pad,
                     master_seed, replication):
    results = []
    for arm in arms:
        occ = realize_replication(arm, window, lam, master_seed, replication, eps_pad, eps_leak,
                                  extra_pad=shared_pad).occupied
        values = [covers_point(occ, ORIGIN)]
        values.extend(covers_segment(occ, s) for s in s_grid)
        values.extend(has_crossing(occ, CrossingQuery(Rect(0.0, 3.0 * n, 0.0, n))) for n in n_grid)
        results.append((values, occ.leakage_budget))
    return results


def compare_geostat_iid(model, lam, s_grid, n_grid, replications, seed, iid_distribution=None,
                        eps_pad=DEFAULT_EPS_PAD, eps_leak=DEFAULT_EPS_LEAK, n_jobs=None,
                        progress=False):
    """Paired-seed comparison of the geostatistical model with its matched i.i.d. model

    Both arms share the Poisson points of every replication; the i.i.d. arm
    draws radii from the field's marginal law.
    """
    if model.marking != GEOSTATISTICAL:
        raise ParameterError("comparison needs a geostatistical model")
    if replications < 1:
        raise ParameterError(f"replications must be >= 1, got {replications}")
    seed = validate_seed(seed)
    iid_model = model.iid_counterpart()
    if iid_distribution is not None and not same_law(iid_distribution, iid_model.distribution):
        raise ParameterError(
            f"i.i.d. radius law {iid_distribution} does not match the field marginal {iid_model.distribution}")
    s_grid = tuple(float(s) for s in s_grid)
    n_grid = tuple(float(n) for n in n_grid)
    if any(s < 0 for s in s_grid) or any(n <= 0 for n in n_grid):
        raise ParameterError("segment lengths must be >= 0 and scales positive")
    reach_x = max([0.0, *s_grid, *(3.0 * n for n in n_grid)])
    reach_y = max([0.0, *n_grid])
    window = Rect(-1.0, reach_x + 1.0, -1.0, reach_y + 1.0)
    shared_pad = max(required_pad(arm.marginal(), float(lam), window, eps_leak, arm.leakage_cylinder)
                     for arm in (model, iid_model))

    rows = run_replications(
        functools.partial(_comparison_task, (model, iid_model), window, s_grid, n_grid,
                          float(lam), eps_pad, eps_leak, shared_pad, seed),
        replications, n_jobs, progress=progress)
    labels = ([('point_coverage', None)] + [('segment_coverage', s) for s in s_grid]
              + [('crossing', n) for n in n_grid])
    report = ComparisonReport(float(lam), seed)
    for k, (quantity, parameter) in enumerate(labels):
        arms = []
        for arm in range(2):
            successes = sum(row[arm][0][k] for row in rows)
            leakage = sum(row[arm][1] for row in rows)
            arms.append(Estimate.from_counts(successes, replications, seed, leakage))
        report.rows.append(ComparisonRow(quantity, parameter, arms[0], arms[1]))
    logger.info("comparison at lambda %.4g: %d of %d quantities flagged",
                lam, len(report.flagged()), len(report.rows))
    return report
