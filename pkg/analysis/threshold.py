"""
Crossing Curves and Critical Intensities
File: analysis/threshold.py

Every replication is realized once at the top of the intensity range and
reduced to the two coupled crossing thresholds of the hard (3n x n) and easy
(n x 3n) rectangles. A whole lambda sweep is then read off those arrays, which
makes every curve exactly monotone and every bisection step free of
resampling.
"""

import functools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from analysis.estimators import (
    EPS0_DEFAULT, CrossingEvent, Estimate, default_test_levels, estimate_field_mixing_proxy,
    estimate_pi_lambda, estimate_probability,
)
from simulation.boolean_model import DEFAULT_EPS_LEAK, CrossingQuery, crossing_threshold
from simulation.fields import DEFAULT_EPS_PAD, VoronoiFieldParams
from simulation.sampling import Rect
from simulation.scenario import GEOSTATISTICAL, ModelSpec, realize_replication
from utils.errors import BracketError, ParameterError
from utils.parallel import run_replications
from utils.rng import stream_seed, validate_seed

logger = logging.getLogger(__name__)

# finite-size criterion level
GAMMA = 1.0 / 200.0

# lambda_c * a^2 for constant radius a, used only to place default brackets
UNIT_RADIUS_PILOT = 0.36

ASPECT = 3.0

CONTRACTION_FACTOR = 49.0


class FiniteSizeClass(str, Enum):
    SUPERCRITICAL = 'supercritical'
    SUBCRITICAL = 'subcritical'
    UNDETERMINED = 'undetermined'


def classify_pair(hard, easy, gamma=GAMMA):
    """Finite-size verdict from the hard-direction and easy-direction crossing estimates"""
    if hard.ci_low > 1.0 - gamma:
        return FiniteSizeClass.SUPERCRITICAL
    if easy.ci_high < gamma:
        return FiniteSizeClass.SUBCRITICAL
    return FiniteSizeClass.UNDETERMINED


def hard_rect(n):
    return Rect(0.0, ASPECT * n, 0.0, n)


def easy_rect(n):
    return Rect(0.0, n, 0.0, ASPECT * n)


def _check_scale(n):
    if not (n > 0 and math.isfinite(n)):
        raise ParameterError(f"scale n must be finite and positive, got {n}")


def _threshold_task(model, n, lambda_max, eps_pad, eps_leak, master_seed, replication):
    window = Rect(0.0, ASPECT * n, 0.0, ASPECT * n)
    occ = realize_replication(model, window, lambda_max, master_seed, replication,
                              eps_pad, eps_leak).occupied
    return (crossing_threshold(occ, CrossingQuery(hard_rect(n))),
            crossing_threshold(occ, CrossingQuery(easy_rect(n))),
            occ.leakage_budget)


class ThresholdSample:
    """Per-replication coupled crossing thresholds at one scale"""

    def __init__(self, model, n, lambda_max, master_seed, eps_pad=DEFAULT_EPS_PAD,
                 eps_leak=DEFAULT_EPS_LEAK, n_jobs=None, progress=False):
        _check_scale(n)
        if not (lambda_max >= 0 and math.isfinite(lambda_max)):
            raise ParameterError(f"lambda_max must be finite and >= 0, got {lambda_max}")
        self.model = model
        self.n = float(n)
        self.lambda_max = float(lambda_max)
        self.master_seed = validate_seed(master_seed)
        self.eps_pad = eps_pad
        self.eps_leak = eps_leak
        self.n_jobs = n_jobs
        self.progress = progress
        self.hard = np.empty(0)
        self.easy = np.empty(0)
        self.leakage = 0.0

    @property
    def replications(self):
        return len(self.hard)

    def extend(self, count):
        """Append replications [replications, replications + count)"""
        if count < 1:
            return self
        task = functools.partial(_threshold_task, self.model, self.n, self.lambda_max,
                                 self.eps_pad, self.eps_leak, self.master_seed)
        rows = run_replications(task, count, self.n_jobs, start=self.replications,
                                progress=self.progress, desc=f"thresholds n={self.n:g}")
        self.hard = np.concatenate([self.hard, [row[0] for row in rows]])
        self.easy = np.concatenate([self.easy, [row[1] for row in rows]])
        self.leakage += sum(row[2] for row in rows)
        logger.debug("n=%g: %d replications sampled at lambda_max=%g",
                     self.n, self.replications, self.lambda_max)
        return self

    def _estimate(self, thresholds, lam):
        if lam > self.lambda_max:
            raise ParameterError(f"lambda {lam} above the sampled lambda_max {self.lambda_max}")
        if not self.replications:
            raise ParameterError("no replications sampled yet")
        successes = int(np.count_nonzero(thresholds <= lam))
        return Estimate.from_counts(successes, self.replications, self.master_seed, self.leakage)

    def hard_estimate(self, lam):
        """P(Cross(3n, n)) at lam"""
        return self._estimate(self.hard, lam)

    def easy_estimate(self, lam):
        """P(Cross(n, 3n)) at lam"""
        return self._estimate(self.easy, lam)

    def classify(self, lam, gamma=GAMMA):
        return classify_pair(self.hard_estimate(lam), self.easy_estimate(lam), gamma)

    def curve(self, lambda_grid):
        grid = tuple(float(lam) for lam in lambda_grid)
        return CrossingCurve(
            n=self.n,
            lambda_grid=grid,
            estimates=tuple(self.hard_estimate(lam) for lam in grid),
            easy_estimates=tuple(self.easy_estimate(lam) for lam in grid),
            replications=self.replications,
            master_seed=self.master_seed,
        )


@dataclass(frozen=True)
class CrossingCurve:
    """P(Cross(3n, n)) and P(Cross(n, 3n)) on a lambda grid from coupled replications"""

    n: float
    lambda_grid: tuple
    estimates: tuple
    easy_estimates: tuple
    replications: int
    master_seed: int

    def classify(self, gamma=GAMMA):
        return finite_size_classify(self, gamma)

    def crossing_point(self, level=0.5):
        """Smallest grid intensity whose hard-crossing estimate reaches level, or None"""
        for lam, estimate in zip(self.lambda_grid, self.estimates):
            if estimate.value >= level:
                return lam
        return None


def _check_grid(lambda_grid):
    grid = [float(lam) for lam in lambda_grid]
    if not grid:
        raise ParameterError("lambda grid must not be empty")
    if any(not (lam >= 0 and math.isfinite(lam)) for lam in grid):
        raise ParameterError("lambda grid values must be finite and >= 0")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ParameterError("lambda grid must be sorted ascending")
    return grid


def crossing_curve(model, n, lambda_grid, replications, master_seed, eps_pad=DEFAULT_EPS_PAD,
                   eps_leak=DEFAULT_EPS_LEAK, n_jobs=None, progress=False):
    """Crossing probabilities of the 3n x n and n x 3n rectangles along lambda_grid"""
    grid = _check_grid(lambda_grid)
    if replications < 1:
        raise ParameterError(f"replications must be >= 1, got {replications}")
    sample = ThresholdSample(model, n, grid[-1], master_seed, eps_pad, eps_leak, n_jobs, progress)
    return sample.extend(replications).curve(grid)


def finite_size_classify(curve, gamma=GAMMA):
    """Supercritical / subcritical / undetermined verdict at every grid intensity"""
    return [classify_pair(hard, easy, gamma)
            for hard, easy in zip(curve.estimates, curve.easy_estimates)]


def suggest_bracket(model, pilot=UNIT_RADIUS_PILOT):
    """Default bisection bracket from the radius range of the marginal"""
    law = model.marginal()
    second = law.second_moment
    if not math.isfinite(second) or second <= 0:
        raise ParameterError(f"cannot place a bracket for a radius law with second moment {second}")
    small = float(law.quantile(0.05))
    if small <= 0:
        small = math.sqrt(second)
    large = law.bound if law.is_bounded else float(law.quantile(0.999))
    return 0.1 * pilot / large ** 2, 4.0 * pilot / small ** 2


@dataclass
class ThresholdResult:
    """Final bisection bracket at scale n_used, with the 2n stability run when requested"""

    lambda_low: float
    lambda_high: float
    n_used: float
    criterion: str
    curve: CrossingCurve
    replications: int
    master_seed: int
    leakage_budget_total: float = 0.0
    stability: Optional['ThresholdResult'] = None

    @property
    def midpoint(self):
        return 0.5 * (self.lambda_low + self.lambda_high)

    @property
    def width(self):
        return self.lambda_high - self.lambda_low

    def overlaps(self, other):
        return self.lambda_low <= other.lambda_high and other.lambda_low <= self.lambda_high

    def below(self, other):
        return self.lambda_high < other.lambda_low

    @property
    def converged(self):
        return self.stability is not None and self.overlaps(self.stability)

    def scaled(self, factor):
        """Bracket multiplied by factor (lambda * a^2 comparisons)"""
        return self.lambda_low * factor, self.lambda_high * factor

    def as_row(self):
        return {
            'n': self.n_used,
            'value': self.midpoint,
            'ci_low': self.lambda_low,
            'ci_high': self.lambda_high,
            'reps': self.replications,
            'seed': self.master_seed,
            'leakage_budget': min(1.0, self.leakage_budget_total),
        }


def _classify_adaptive(sample, lam, max_replications, gamma):
    verdict = sample.classify(lam, gamma)
    while verdict == FiniteSizeClass.UNDETERMINED and sample.replications < max_replications:
        sample.extend(min(sample.replications, max_replications - sample.replications))
        verdict = sample.classify(lam, gamma)
    return verdict


def _bisect(model, n, bracket, tolerance, replications, seed, max_replications, gamma,
            eps_pad, eps_leak, n_jobs, progress):
    lo, hi = (float(v) for v in bracket)
    sample = ThresholdSample(model, n, hi, seed, eps_pad, eps_leak, n_jobs, progress)
    sample.extend(replications)

    low_class = _classify_adaptive(sample, lo, max_replications, gamma)
    high_class = _classify_adaptive(sample, hi, max_replications, gamma)
    if low_class != FiniteSizeClass.SUBCRITICAL or high_class != FiniteSizeClass.SUPERCRITICAL:
        raise BracketError(
            f"bracket [{lo:.4g}, {hi:.4g}] at n={n:g} classifies as {low_class.value}/{high_class.value}",
            diagnostics={
                'n': n,
                'lambda_low': lo,
                'lambda_high': hi,
                'low': {'class': low_class.value, 'easy': sample.easy_estimate(lo).as_row()},
                'high': {'class': high_class.value, 'hard': sample.hard_estimate(hi).as_row()},
                'replications': sample.replications,
            })

    visited = [lo, hi]
    criterion = 'tolerance'
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        visited.append(mid)
        verdict = _classify_adaptive(sample, mid, max_replications, gamma)
        logger.debug("n=%g lambda=%.5g: %s (%d reps)", n, mid, verdict.value, sample.replications)
        if verdict == FiniteSizeClass.SUPERCRITICAL:
            hi = mid
            continue
        if verdict == FiniteSizeClass.SUBCRITICAL:
            lo = mid
            continue
        # undetermined at mid: tighten from whichever quarter point still classifies
        lower, upper = 0.5 * (lo + mid), 0.5 * (mid + hi)
        visited.extend((lower, upper))
        moved = False
        if _classify_adaptive(sample, lower, max_replications, gamma) == FiniteSizeClass.SUBCRITICAL:
            lo, moved = lower, True
        if _classify_adaptive(sample, upper, max_replications, gamma) == FiniteSizeClass.SUPERCRITICAL:
            hi, moved = upper, True
        if not moved:
            criterion = 'undetermined'
            break

    return ThresholdResult(
        lambda_low=lo,
        lambda_high=hi,
        n_used=float(n),
        criterion=criterion,
        curve=sample.curve(sorted(set(visited))),
        replications=sample.replications,
        master_seed=sample.master_seed,
        leakage_budget_total=sample.leakage,
    )


def estimate_lambda_c(model, n, lambda_bracket=None, tolerance=None, replications=2000, seed=0,
                      max_replications=20000, check_stability=True, gamma=GAMMA,
                      eps_pad=DEFAULT_EPS_PAD, eps_leak=DEFAULT_EPS_LEAK, n_jobs=None, progress=False):
    """Finite-size pseudo-critical bracket for the occupied crossing threshold at scale n

    Bisection keeps lambda_low subcritical and lambda_high supercritical and
    stops at width <= tolerance, or when the midpoint and both quarter
    points of the bracket stay undetermined with max_replications. With check_stability the same search
    runs at 2n and the result counts as converged when the brackets overlap.
    """
    _check_scale(n)
    seed = validate_seed(seed)
    bracket = suggest_bracket(model) if lambda_bracket is None else tuple(lambda_bracket)
    if len(bracket) != 2 or not 0 <= bracket[0] < bracket[1]:
        raise ParameterError(f"bracket must be (low, high) with 0 <= low < high, got {bracket}")
    if replications < 1 or max_replications < replications:
        raise ParameterError("need 1 <= replications <= max_replications")
    tolerance = 0.01 * bracket[1] if tolerance is None else float(tolerance)
    if not tolerance > 0:
        raise ParameterError(f"tolerance must be positive, got {tolerance}")

    search = functools.partial(_bisect, model, tolerance=tolerance, replications=replications,
                               seed=seed, max_replications=max_replications, gamma=gamma,
                               eps_pad=eps_pad, eps_leak=eps_leak, n_jobs=n_jobs, progress=progress)
    result = search(n=n, bracket=bracket)
    if check_stability:
        try:
            result.stability = search(n=2.0 * n, bracket=bracket)
        except BracketError as exc:
            logger.warning("stability run at n=%g failed: %s", 2.0 * n, exc)
    logger.info("lambda_c bracket at n=%g: [%.5g, %.5g] (%s, %d reps)",
                n, result.lambda_low, result.lambda_high, result.criterion, result.replications)
    return result


@dataclass(frozen=True)
class ContractionReport:
    """q(3n) against 49 q(n)^2 plus the rho surrogate at 9n"""

    lam: float
    n: float
    q_n: Estimate
    q_3n: Estimate
    pi_lambda: Estimate
    pi_bar: Estimate
    slack: float

    @property
    def rho_surrogate(self):
        return 4.0 * self.pi_lambda.value + self.pi_bar.value

    @property
    def rhs(self):
        return CONTRACTION_FACTOR * self.q_n.value ** 2 + self.rho_surrogate

    @property
    def holds(self):
        return self.q_3n.value <= self.rhs + self.slack

    @property
    def status(self):
        if self.holds:
            return 'holds'
        return 'violated' if self.pi_bar.method == 'exact' else 'inconclusive'


def check_contraction(model, lam, n, replications, seed, eps0=EPS0_DEFAULT, test_levels=None,
                      eps_pad=DEFAULT_EPS_PAD, eps_leak=DEFAULT_EPS_LEAK, n_jobs=None, progress=False):
    """Empirical check of q(3n) <= 49 q(n)^2 + rho(9n) with a 3-sigma slack"""
    _check_scale(n)
    seed = validate_seed(seed)
    law = model.marginal()
    if not law.is_bounded:
        raise ParameterError("contraction check needs bounded radii; set a truncation level")

    def failure(scale, k):
        event = CrossingEvent(model, lam, eps_pad, eps_leak, width=ASPECT * scale, height=scale,
                              failure=True)
        return estimate_probability(event, replications, stream_seed(seed, k, 0), n_jobs,
                                    progress=progress)

    q_n = failure(n, 0)
    q_3n = failure(3.0 * n, 1)
    far = 9.0 * n
    if law.bound < (eps0 / 4.0) * far or lam == 0:
        pi = Estimate.exact(0.0, seed)
    else:
        pi = estimate_pi_lambda(model, lam, far, eps0, replications, stream_seed(seed, 2, 0),
                                eps_pad, eps_leak, n_jobs, progress)
    if model.marking == GEOSTATISTICAL and not model.has_constant_field:
        levels = default_test_levels(model) if test_levels is None else test_levels
        pi_bar = estimate_field_mixing_proxy(model, far, eps0, levels, replications,
                                             stream_seed(seed, 3, 0), eps_pad, n_jobs, progress)
    else:
        pi_bar = Estimate.exact(0.0, seed)

    error = math.sqrt(q_3n.std_error ** 2 + (2.0 * CONTRACTION_FACTOR * q_n.value * q_n.std_error) ** 2
                      + 16.0 * pi.std_error ** 2 + pi_bar.std_error ** 2)
    report = ContractionReport(float(lam), float(n), q_n, q_3n, pi, pi_bar, 3.0 * error)
    logger.info("contraction at lambda=%g n=%g: q(n)=%.4g q(3n)=%.4g rhs=%.4g -> %s",
                lam, n, q_n.value, q_3n.value, report.rhs, report.status)
    return report


@dataclass(frozen=True)
class VoronoiScanRow:
    mu: float
    p: float
    geostatistical: ThresholdResult
    iid: ThresholdResult

    @property
    def ordering(self):
        """sign(lambda_c(mu, p) - lambda_Phi(p)) when the brackets are disjoint, else 0"""
        if self.geostatistical.below(self.iid):
            return -1
        if self.iid.below(self.geostatistical):
            return 1
        return 0


@dataclass
class VoronoiScan:
    a: float
    b: float
    n: float
    rows: list = field(default_factory=list)

    def row(self, mu, p):
        for candidate in self.rows:
            if candidate.mu == mu and candidate.p == p:
                return candidate
        raise KeyError((mu, p))


def voronoi_threshold_scan(mu_grid, p_grid, a, b, n, replications, seed, eps0=EPS0_DEFAULT,
                           tolerance=None, lambda_bracket=None, max_replications=None,
                           check_stability=False, eps_pad=DEFAULT_EPS_PAD,
                           eps_leak=DEFAULT_EPS_LEAK, coupled_colours=False, n_jobs=None,
                           progress=False):
    """lambda_c(mu, p) of the two-point Voronoi model next to lambda_Phi(p) of its i.i.d. match

    All runs share the master seed, so the Poisson points are common to
    every row and the i.i.d. bracket for p is computed once. With
    coupled_colours every cell takes its colour from the uniform mark of its
    least-intensity disc centre, so at large mu the field arm approaches the
    i.i.d. arm on the same points.
    """
    mu_grid = [float(mu) for mu in mu_grid]
    p_grid = [float(p) for p in p_grid]
    if not mu_grid or not p_grid:
        raise ParameterError("mu and p grids must not be empty")
    if not b < (eps0 / 4.0) * n:
        raise ParameterError(f"scale n={n} too small: need b < (eps0/4) n = {(eps0 / 4.0) * n}")
    max_replications = replications if max_replications is None else max_replications
    run = functools.partial(estimate_lambda_c, n=n, lambda_bracket=lambda_bracket,
                            tolerance=tolerance, replications=replications, seed=seed,
                            max_replications=max_replications, check_stability=check_stability,
                            eps_pad=eps_pad, eps_leak=eps_leak, n_jobs=n_jobs, progress=progress)
    scan = VoronoiScan(float(a), float(b), float(n))
    for p in p_grid:
        iid_result = None
        for mu in mu_grid:
            model = ModelSpec(field=VoronoiFieldParams(mu, p, a, b), coupled_colours=coupled_colours)
            if iid_result is None:
                iid_result = run(model.iid_counterpart())
            scan.rows.append(VoronoiScanRow(mu, p, run(model), iid_result))
            logger.info("mu=%g p=%g: ordering %+d", mu, p, scan.rows[-1].ordering)
    return scan
