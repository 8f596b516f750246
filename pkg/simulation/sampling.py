"""
Marked Poisson Point and Line Processes
File: simulation/sampling.py
"""

import math
from dataclasses import dataclass, field

import numpy as np

from utils.errors import ParameterError
from utils.rng import generator, validate_seed


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ParameterError(f"point coordinates must be finite, got ({self.x}, {self.y})")

    def as_array(self):
        return np.array([self.x, self.y], dtype=float)


ORIGIN = Point2(0.0, 0.0)


@dataclass(frozen=True)
class Rect:
    """Closed axis-parallel rectangle [x_min, x_max] x [y_min, y_max]"""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self):
        values = (self.x_min, self.x_max, self.y_min, self.y_max)
        if not all(math.isfinite(v) for v in values):
            raise ParameterError(f"rectangle bounds must be finite, got {values}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ParameterError(f"degenerate rectangle {values}")

    @classmethod
    def box(cls, half_width, center=ORIGIN):
        """Sup-norm ball B_inf(center, half_width)"""
        return cls(center.x - half_width, center.x + half_width,
                   center.y - half_width, center.y + half_width)

    @property
    def width(self):
        return self.x_max - self.x_min

    @property
    def height(self):
        return self.y_max - self.y_min

    @property
    def area(self):
        return self.width * self.height

    @property
    def perimeter(self):
        return 2.0 * (self.width + self.height)

    @property
    def center(self):
        return Point2(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    @property
    def circumradius(self):
        return 0.5 * math.hypot(self.width, self.height)

    @property
    def corners(self):
        return np.array([[self.x_min, self.y_min], [self.x_max, self.y_min],
                         [self.x_max, self.y_max], [self.x_min, self.y_max]])

    def dilate(self, margin):
        return Rect(self.x_min - margin, self.x_max + margin,
                    self.y_min - margin, self.y_max + margin)

    def contains(self, xy, tol=0.0):
        """Vectorised closed membership test for an (N, 2) array or one point"""
        xy = np.asarray(xy, dtype=float)
        x, y = xy[..., 0], xy[..., 1]
        return ((x >= self.x_min - tol) & (x <= self.x_max + tol)
                & (y >= self.y_min - tol) & (y <= self.y_max + tol))

    def contains_rect(self, other, tol=1e-12):
        return (other.x_min >= self.x_min - tol and other.x_max <= self.x_max + tol
                and other.y_min >= self.y_min - tol and other.y_max <= self.y_max + tol)

    def margin_around(self, inner):
        """Largest m with inner.dilate(m) inside self (negative if inner sticks out)"""
        return min(inner.x_min - self.x_min, self.x_max - inner.x_max,
                   inner.y_min - self.y_min, self.y_max - inner.y_max)

    def distance(self, xy):
        """Euclidean distance from each point to the rectangle (0 inside)"""
        xy = np.asarray(xy, dtype=float)
        dx = np.maximum(np.maximum(self.x_min - xy[..., 0], 0.0), xy[..., 0] - self.x_max)
        dy = np.maximum(np.maximum(self.y_min - xy[..., 1], 0.0), xy[..., 1] - self.y_max)
        return np.hypot(dx, dy)

    def union(self, other):
        return Rect(min(self.x_min, other.x_min), max(self.x_max, other.x_max),
                    min(self.y_min, other.y_min), max(self.y_max, other.y_max))


@dataclass(frozen=True)
class MarkedPoint:
    location: Point2
    intensity_mark: float
    uniform_mark: float


@dataclass(frozen=True, eq=False)
class MarkedPointSet:
    """Poisson points on region with marks in [0, lambda_max] x [0, 1]

    Stored column-wise; rows are sorted lexicographically by location.
    """

    region: Rect
    lambda_max: float
    seed: int
    locations: np.ndarray = field(repr=False)
    intensity_marks: np.ndarray = field(repr=False)
    uniform_marks: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.locations)

    def __iter__(self):
        for (x, y), lam, z in zip(self.locations, self.intensity_marks, self.uniform_marks):
            yield MarkedPoint(Point2(float(x), float(y)), float(lam), float(z))

    @property
    def points(self):
        return list(self)

    def subset(self, mask, lambda_max=None):
        return MarkedPointSet(
            region=self.region,
            lambda_max=self.lambda_max if lambda_max is None else lambda_max,
            seed=self.seed,
            locations=self.locations[mask],
            intensity_marks=self.intensity_marks[mask],
            uniform_marks=self.uniform_marks[mask],
        )


@dataclass(frozen=True)
class MarkedLine:
    """Line {p : p . (cos theta, sin theta) = distance} with a uniform mark"""

    theta: float
    distance: float
    uniform_mark: float


@dataclass(frozen=True, eq=False)
class MarkedLineSet:
    """Poisson lines around a centre, parametrised relative to that centre"""

    center: Point2
    max_distance: float
    seed: int
    thetas: np.ndarray = field(repr=False)
    distances: np.ndarray = field(repr=False)
    uniform_marks: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.thetas)

    def __iter__(self):
        for theta, distance, z in zip(self.thetas, self.distances, self.uniform_marks):
            yield MarkedLine(float(theta), float(distance), float(z))

    @property
    def lines(self):
        return list(self)

    def normals(self):
        return np.column_stack([np.cos(self.thetas), np.sin(self.thetas)])

    def offsets(self, xy):
        """Signed distance of every point (rows) from every line (columns)"""
        xy = np.asarray(xy, dtype=float).reshape(-1, 2) - self.center.as_array()
        return xy @ self.normals().T - self.distances


def _check_intensity(value, name):
    if not math.isfinite(value) or value < 0:
        raise ParameterError(f"{name} must be finite and non-negative, got {value}")
    return float(value)


def sample_marked_points(lambda_max, region, seed):
    """Poisson process of intensity lambda_max on region with coupling and uniform marks"""
    lambda_max = _check_intensity(lambda_max, 'lambda_max')
    seed = validate_seed(seed)
    rng = generator(seed)
    count = int(rng.poisson(lambda_max * region.area)) if lambda_max > 0 else 0
    xs = rng.uniform(region.x_min, region.x_max, size=count)
    ys = rng.uniform(region.y_min, region.y_max, size=count)
    intensity_marks = rng.uniform(0.0, lambda_max, size=count)
    uniform_marks = rng.uniform(0.0, 1.0, size=count)
    order = np.lexsort((ys, xs))
    return MarkedPointSet(
        region=region,
        lambda_max=lambda_max,
        seed=seed,
        locations=np.column_stack([xs[order], ys[order]]),
        intensity_marks=intensity_marks[order],
        uniform_marks=uniform_marks[order],
    )


def couple_to_intensity(points, lam):
    """Points whose intensity mark is at most lam; a Poisson process of intensity lam"""
    lam = _check_intensity(lam, 'lambda')
    if lam > points.lambda_max:
        raise ParameterError(f"lambda {lam} exceeds lambda_max {points.lambda_max}")
    if lam == points.lambda_max:
        return points
    return points.subset(points.intensity_marks <= lam, lambda_max=lam)


def sample_marked_lines(u, max_distance, seed, center=ORIGIN):
    """Poisson line process of intensity u: (theta, x) uniform on [0, 2pi) x [0, max_distance]"""
    u = _check_intensity(u, 'u')
    max_distance = _check_intensity(max_distance, 'max_distance')
    seed = validate_seed(seed)
    rng = generator(seed)
    mean = 2.0 * math.pi * u * max_distance
    count = int(rng.poisson(mean)) if mean > 0 else 0
    thetas = rng.uniform(0.0, 2.0 * math.pi, size=count)
    distances = rng.uniform(0.0, max_distance, size=count)
    marks = rng.uniform(0.0, 1.0, size=count)
    order = np.lexsort((distances, thetas))
    return MarkedLineSet(
        center=center,
        max_distance=max_distance,
        seed=seed,
        thetas=thetas[order],
        distances=distances[order],
        uniform_marks=marks[order],
    )
