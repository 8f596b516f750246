"""
Random Radius Fields
File: simulation/fields.py

Finite-window realizations of the stationary fields that assign radii:
constant, Poisson cylinder (line) fields, two-valued Voronoi fields and their
truncations.
"""

import logging
import math
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from simulation.distributions import (
    CylinderMarginal, PointMass, RadialDistribution, Truncated, TwoPoint,
)
from simulation.sampling import Rect, sample_marked_lines
from utils.errors import ParameterError, QueryError
from utils.raster import Verdict, cell_centers, spans
from utils.rng import LINE_STREAM, generator, stream_seed

logger = logging.getLogger(__name__)

DEFAULT_EPS_PAD = float(os.getenv('GEOPERC_EPS_PAD', 1e-6))

# rows x lines evaluated at once by the cylinder field
_CHUNK_CELLS = 4_000_000
_WINDOW_TOL = 1e-9


def _check_eps(eps_pad):
    if not 0.0 < eps_pad < 1.0:
        raise ParameterError(f"eps_pad must lie in (0, 1), got {eps_pad}")


def _as_xy(xy):
    return np.asarray(xy, dtype=float).reshape(-1, 2)


class FieldRealization(ABC):
    """A field realized on a window; evaluate is a pure function of the realization"""

    family = 'field'

    @property
    @abstractmethod
    def marginal(self) -> RadialDistribution:
        """Law of the field at a single point"""

    @abstractmethod
    def _values(self, xy):
        """Field values at rows of xy, all inside the window"""

    def evaluate(self, xy):
        xy = _as_xy(xy)
        outside = ~self.window.contains(xy, tol=_WINDOW_TOL)
        if outside.any():
            raise QueryError(
                f"{self.family} field queried outside its window at {xy[outside][0].tolist()}")
        if not len(xy):
            return np.empty(0)
        return self._values(xy)

    def value_at(self, point):
        return float(self.evaluate([[point.x, point.y]])[0])

    @property
    def bound(self):
        return self.marginal.bound

    @property
    def leakage_cylinder(self):
        """Cylinder parameters bounding far-away reach, when the field is a cylinder field"""
        return None


@dataclass(frozen=True, eq=False)
class ConstantField(FieldRealization):
    value: float
    window: Rect
    family = 'constant'

    @property
    def padded_window(self):
        return self.window

    @property
    def failure_probability_budget(self):
        return 0.0

    @property
    def marginal(self):
        return PointMass(self.value)

    def _values(self, xy):
        return np.full(len(xy), self.value, dtype=float)


@dataclass(frozen=True, eq=False)
class CylinderField(FieldRealization):
    """min of F^-1(z) over the cylinders of radius r around Poisson lines, 0 outside them"""

    params: 'CylinderFieldParams'
    window: Rect
    lines: object = field(repr=False)
    line_values: np.ndarray = field(repr=False)
    family = 'cylinder'

    @property
    def padded_window(self):
        return Rect.box(self.lines.max_distance, self.lines.center)

    @property
    def failure_probability_budget(self):
        return 0.0

    @property
    def leakage_cylinder(self):
        return self.params

    @property
    def marginal(self):
        return self.params.marginal()

    def _containing(self, xy, extra=0.0):
        return np.abs(self.lines.offsets(xy)) <= self.params.base_radius + extra

    def _values(self, xy):
        out = np.zeros(len(xy))
        if not len(self.lines):
            return out
        step = max(1, _CHUNK_CELLS // len(self.lines))
        for start in range(0, len(xy), step):
            inside = self._containing(xy[start:start + step])
            values = np.where(inside, self.line_values, np.inf).min(axis=1)
            out[start:start + step] = np.where(np.isfinite(values), values, 0.0)
        return out

    def containing_count(self, xy, extra=0.0):
        """Number of cylinders (dilated by extra) that contain each point"""
        xy = _as_xy(xy)
        if not len(self.lines):
            return np.zeros(len(xy), dtype=int)
        return self._containing(xy, extra).sum(axis=1)


@dataclass(frozen=True, eq=False)
class VoronoiField(FieldRealization):
    """b on cells of high-coloured seeds, a elsewhere"""

    params: 'VoronoiFieldParams'
    window: Rect
    padded_window: Rect
    seeds: np.ndarray = field(repr=False)
    high: np.ndarray = field(repr=False)
    margin: float
    failure_probability_budget: float
    regenerations: int = 0
    tree: cKDTree = field(default=None, repr=False)
    family = 'voronoi_two_point'

    @property
    def marginal(self):
        return self.params.marginal()

    def nearest_seed(self, xy):
        """Index of the nearest seed; equidistant seeds resolve to the smaller index"""
        xy = _as_xy(xy)
        if len(self.seeds) == 1:
            distance, index = self.tree.query(xy, k=1)
            return np.atleast_1d(distance), np.atleast_1d(index)
        distances, indices = self.tree.query(xy, k=2)
        tie = distances[:, 0] == distances[:, 1]
        index = np.where(tie, indices.min(axis=1), indices[:, 0])
        return distances[:, 0], index

    def _values(self, xy):
        distance, index = self.nearest_seed(xy)
        # every window point is within margin / 2 of an anchor, every anchor within margin / 2 of a seed
        assert np.all(distance <= self.margin + 1e-8), "Voronoi anchor certificate violated"
        return np.where(self.high[index], self.params.high_value, self.params.low_value)


@dataclass(frozen=True, eq=False)
class TruncatedField(FieldRealization):
    inner: FieldRealization
    cap: float
    family = 'truncated'

    @property
    def window(self):
        return self.inner.window

    @property
    def padded_window(self):
        return self.inner.padded_window

    @property
    def failure_probability_budget(self):
        return self.inner.failure_probability_budget

    @property
    def marginal(self):
        return Truncated(self.inner.marginal, self.cap)

    @property
    def leakage_cylinder(self):
        return self.inner.leakage_cylinder

    def _values(self, xy):
        return np.minimum(self.inner._values(xy), self.cap)


@dataclass(frozen=True)
class ConstantFieldParams:
    value: float
    family = 'constant'

    def build(self, window, eps_pad=DEFAULT_EPS_PAD, seed=0, colour_points=None):
        return build_constant_field(self.value, window)

    def marginal(self):
        return PointMass(self.value)


@dataclass(frozen=True)
class CylinderFieldParams:
    line_intensity: float
    base_radius: float
    values: RadialDistribution
    family = 'cylinder'

    def __post_init__(self):
        for name in ('line_intensity', 'base_radius'):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ParameterError(f"{name} must be finite and positive, got {value}")

    def build(self, window, eps_pad=DEFAULT_EPS_PAD, seed=0, colour_points=None):
        return build_cylinder_field(self, window, eps_pad, seed)

    def marginal(self):
        return CylinderMarginal(self.line_intensity, self.base_radius, self.values)


@dataclass(frozen=True)
class VoronoiFieldParams:
    seed_intensity: float
    high_probability: float
    low_value: float
    high_value: float
    family = 'voronoi_two_point'

    def __post_init__(self):
        if not (self.seed_intensity > 0 and math.isfinite(self.seed_intensity)):
            raise ParameterError(f"seed intensity must be positive, got {self.seed_intensity}")
        if not 0.0 <= self.high_probability <= 1.0:
            raise ParameterError(f"p must lie in [0, 1], got {self.high_probability}")
        if not 0.0 < self.low_value < self.high_value < math.inf:
            raise ParameterError(
                f"need 0 < a < b < inf, got a={self.low_value}, b={self.high_value}")

    def build(self, window, eps_pad=DEFAULT_EPS_PAD, seed=0, colour_points=None):
        return build_voronoi_field(self, window, eps_pad, seed, colour_points=colour_points)

    def marginal(self):
        return TwoPoint(self.high_probability, self.low_value, self.high_value)


def build_constant_field(value, window):
    if not (value >= 0 and math.isfinite(value)):
        raise ParameterError(f"constant field value must be finite and >= 0, got {value}")
    return ConstantField(float(value), window)


def build_cylinder_field(params, window, eps_pad=DEFAULT_EPS_PAD, seed=0):
    """Sample every line within circumradius + r of the window centre

    Lines farther away cannot meet the window, so evaluation is exact.
    """
    _check_eps(eps_pad)
    max_distance = window.circumradius + params.base_radius
    lines = sample_marked_lines(params.line_intensity, max_distance,
                                stream_seed(seed, 0, LINE_STREAM), center=window.center)
    values = np.asarray(params.values.quantile(lines.uniform_marks), dtype=float)
    logger.debug("cylinder field: %d lines within %.3g of %s", len(lines), max_distance, window.center)
    return CylinderField(params, window, lines, values)


def _anchor_axes(window, spacing):
    nx = math.ceil(window.width / spacing) + 1
    ny = math.ceil(window.height / spacing) + 1
    return np.linspace(window.x_min, window.x_max, nx), np.linspace(window.y_min, window.y_max, ny)


def _anchor_count(window, margin):
    xs, ys = _anchor_axes(window, margin / math.sqrt(2.0))
    return len(xs) * len(ys)


def _anchor_failure(window, margin, mu):
    """Union bound on some anchor having no seed within margin / 2"""
    return _anchor_count(window, margin) * math.exp(-math.pi * mu * margin ** 2 / 4.0)


def voronoi_margin(mu, window, eps_pad):
    """Smallest margin m on a fixed-point iteration with anchor failure bound <= eps_pad

    Anchors sit on a grid of spacing m / sqrt(2) so every window point is within
    m / 2 of one; a seed within m / 2 of each anchor puts a seed within m of
    every window point, which makes the padded nearest-seed search exact.
    """
    _check_eps(eps_pad)
    margin = math.sqrt(4.0 * math.log(1.0 / eps_pad) / (math.pi * mu))
    while _anchor_failure(window, margin, mu) > eps_pad:
        target = math.sqrt(4.0 * math.log(_anchor_count(window, margin) / eps_pad) / (math.pi * mu))
        margin = max(target, margin * 1.01)
    return margin


def build_voronoi_field(params, window, eps_pad=DEFAULT_EPS_PAD, seed=0, colour_points=None):
    """Voronoi two-point field on window, certified exact on every anchor

    When colour_points is given, a cell takes its colour from the point of
    colour_points with least intensity mark inside it: high when that point's
    uniform mark exceeds 1 - p, the rule the i.i.d. quantile uses. Cells
    holding none use their own mark.
    """
    mu = params.seed_intensity
    margin = voronoi_margin(mu, window, eps_pad)
    attempt = 0
    while True:
        padded = window.dilate(margin)
        rng = generator(seed, attempt)
        count = int(rng.poisson(mu * padded.area))
        xs = rng.uniform(padded.x_min, padded.x_max, size=count)
        ys = rng.uniform(padded.y_min, padded.y_max, size=count)
        marks = rng.uniform(0.0, 1.0, size=count)
        if count:
            order = np.lexsort((ys, xs))
            seeds = np.column_stack([xs[order], ys[order]])
            marks = marks[order]
            tree = cKDTree(seeds)
            gx, gy = np.meshgrid(*_anchor_axes(window, margin / math.sqrt(2.0)))
            distance, _ = tree.query(np.column_stack([gx.ravel(), gy.ravel()]))
            if np.all(distance <= margin / 2.0):
                break
        logger.debug("voronoi field: regenerating with margin %.4g (attempt %d)", 2 * margin, attempt + 1)
        margin *= 2.0
        attempt += 1

    realized = VoronoiField(
        params=params,
        window=window,
        padded_window=padded,
        seeds=seeds,
        high=marks <= params.high_probability,
        margin=margin,
        failure_probability_budget=min(1.0, _anchor_failure(window, margin, mu)),
        regenerations=attempt,
        tree=tree,
    )
    if colour_points is None or not len(colour_points):
        return realized

    inside = window.contains(colour_points.locations)
    _, cell = realized.nearest_seed(colour_points.locations[inside])
    lam = colour_points.intensity_marks[inside]
    z = colour_points.uniform_marks[inside]
    # first occurrence per cell after sorting by intensity mark is the least one
    order = np.lexsort((lam, cell))
    cell, z = cell[order], z[order]
    first = np.ones(len(cell), dtype=bool)
    first[1:] = cell[1:] != cell[:-1]
    high = realized.high.copy()
    high[cell[first]] = z[first] > 1.0 - params.high_probability
    return VoronoiField(
        params=params,
        window=window,
        padded_window=padded,
        seeds=seeds,
        high=high,
        margin=margin,
        failure_probability_budget=realized.failure_probability_budget,
        regenerations=attempt,
        tree=tree,
    )


def truncate_field(realization, cap):
    """phi_M = min(phi, M); M = inf leaves the field unchanged"""
    if not cap >= 0:
        raise ParameterError(f"truncation level must be >= 0, got {cap}")
    if math.isinf(cap):
        return realization
    return TruncatedField(realization, float(cap))


def level_set_crossing(realization, alpha, rect, resolution):
    """Left-right crossing of {phi > alpha} in rect on a raster of cell centres

    Uncertain when the answer changes between resolution and resolution / 2.
    """
    if not resolution > 0:
        raise ParameterError(f"resolution must be positive, got {resolution}")
    if resolution > min(rect.width, rect.height):
        raise ParameterError(f"resolution {resolution} exceeds the rectangle {rect}")
    if not realization.window.contains_rect(rect):
        raise QueryError(f"rectangle {rect} not inside field window {realization.window}")

    def crosses(step):
        xy, shape = cell_centers(rect, step)
        return spans((realization.evaluate(xy) > alpha).reshape(shape), 'horizontal')

    coarse, fine = crosses(resolution), crosses(resolution / 2.0)
    return Verdict.of(coarse) if coarse == fine else Verdict.UNCERTAIN
