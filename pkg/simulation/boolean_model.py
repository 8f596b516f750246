"""
Occupied Sets of the Boolean Model
File: simulation/boolean_model.py

Discs B(x, radius) around coupled Poisson points, with radii read from a field
(geostatistical marking) or drawn i.i.d. from a radius law, and exact geometric
queries on the union restricted to a window.
"""

import functools
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, minimum_spanning_tree
from scipy.spatial import cKDTree
from scipy.stats import qmc

from simulation.distributions import checked_quad
from simulation.sampling import ORIGIN, Point2, Rect, couple_to_intensity
from utils.errors import PaddingError, ParameterError, QueryError
from utils.raster import Verdict, cell_centers, cell_size, spans
from utils.rng import generator
from utils.spatial_hash import SpatialHashGrid
from utils.union_find import DisjointSet

logger = logging.getLogger(__name__)

DEFAULT_EPS_LEAK = float(os.getenv('GEOPERC_EPS_LEAK', 1e-6))
MAX_PAD = 1e6

HORIZONTAL = 'horizontal'
VERTICAL = 'vertical'
OCCUPIED = 'occupied'
VACANT = 'vacant'

_GEOMETRY_TOL = 1e-9


@dataclass(frozen=True)
class Disc:
    center: Point2
    radius: float


@dataclass(frozen=True)
class CrossingQuery:
    """Crossing of rect between its left/right (horizontal) or bottom/top (vertical) sides"""

    rect: Rect
    direction: str = HORIZONTAL
    phase: str = OCCUPIED

    def __post_init__(self):
        if self.direction not in (HORIZONTAL, VERTICAL):
            raise ParameterError(f"unknown crossing direction {self.direction!r}")
        if self.phase not in (OCCUPIED, VACANT):
            raise ParameterError(f"unknown crossing phase {self.phase!r}")

    def perpendicular(self):
        other = VERTICAL if self.direction == HORIZONTAL else HORIZONTAL
        return CrossingQuery(self.rect, other, OCCUPIED)


@dataclass(frozen=True)
class GeostatisticalMarking:
    """Radius of the point at x is field(x)"""

    field: object
    mode = 'geostatistical'

    @property
    def marginal(self):
        return self.field.marginal

    @property
    def cylinder(self):
        return self.field.leakage_cylinder

    def radii(self, points):
        return self.field.evaluate(points.locations)


@dataclass(frozen=True)
class IidMarking:
    """Radius of a point is the quantile of its uniform mark"""

    distribution: object
    mode = 'iid'

    @property
    def marginal(self):
        return self.distribution

    @property
    def cylinder(self):
        return None

    def radii(self, points):
        return np.asarray(self.distribution.quantile(points.uniform_marks), dtype=float)


@dataclass(frozen=True, eq=False)
class OccupiedRealization:
    """Discs that meet the window, kept with the intensity marks of their centres"""

    centers: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    intensity_marks: np.ndarray = field(repr=False)
    window: Rect
    padded_window: Rect
    marking_mode: str
    leakage_budget: float
    lambda_: float

    def __len__(self):
        return len(self.radii)

    @property
    def discs(self):
        return [Disc(Point2(float(x), float(y)), float(r))
                for (x, y), r in zip(self.centers, self.radii)]

    def restrict(self, lam):
        """The coupled realization at a smaller intensity"""
        if lam > self.lambda_:
            raise ParameterError(f"lambda {lam} exceeds realized intensity {self.lambda_}")
        keep = self.intensity_marks <= lam
        scale = lam / self.lambda_ if self.lambda_ > 0 else 0.0
        return OccupiedRealization(
            centers=self.centers[keep],
            radii=self.radii[keep],
            intensity_marks=self.intensity_marks[keep],
            window=self.window,
            padded_window=self.padded_window,
            marking_mode=self.marking_mode,
            leakage_budget=self.leakage_budget * scale,
            lambda_=lam,
        )


def _check_eps(eps_leak):
    if not 0.0 < eps_leak < 1.0:
        raise ParameterError(f"eps_leak must lie in (0, 1), got {eps_leak}")


def disc_leakage_bound(distribution, lam, window, pad):
    """Expected number of discs centred farther than pad from window that reach it

    lam times the integral over the outside of window + pad of P(R >= dist),
    computed radially: the set at distance t has length perimeter + 2 pi t.
    Infinite when the radii have no second moment.
    """
    if lam == 0 or pad >= distribution.bound:
        return 0.0
    if not math.isfinite(distribution.second_moment):
        return math.inf

    def integrand(t):
        return (window.perimeter + 2.0 * math.pi * t) * float(distribution.tail(t))

    try:
        return lam * checked_quad(integrand, pad, distribution.bound, distribution.breakpoints)
    except ParameterError as exc:
        raise PaddingError(f"leakage integral for {distribution.name} radii failed: {exc}") from exc


def cylinder_leakage_bound(cylinder, window, pad):
    """Expected number of cylinders through which a disc centred beyond pad could reach window

    Such a disc needs a containing cylinder with value v > pad whose line
    passes within v + r of window; lines meeting window + s number
    u (perimeter + 2 pi s) on average. Finite when F has a finite mean.
    """
    values = cylinder.values
    if pad >= values.bound:
        return 0.0
    reach = (window.perimeter + 2.0 * math.pi * cylinder.base_radius) * float(values.tail(pad))
    return cylinder.line_intensity * (reach + 2.0 * math.pi * values.tail_mean(pad))


@functools.lru_cache(maxsize=256)
def leakage_bound(distribution, lam, window, pad, cylinder=None):
    """Bound on P(some disc centred farther than pad from window reaches it)

    The disc-count bound, or the smaller cylinder bound when the radii come
    from a cylinder field.
    """
    if lam == 0 or pad >= distribution.bound:
        return 0.0
    value = disc_leakage_bound(distribution, lam, window, pad)
    if cylinder is not None:
        value = min(value, cylinder_leakage_bound(cylinder, window, pad))
    if not value >= 0:
        raise PaddingError(f"leakage bound {value} at pad {pad:.4g} is not a probability bound")
    return value


@functools.lru_cache(maxsize=256)
def required_pad(distribution, lam, window, eps_leak=DEFAULT_EPS_LEAK, cylinder=None):
    """Smallest pad whose leakage bound is at most eps_leak"""
    _check_eps(eps_leak)
    if lam == 0:
        return 0.0
    if distribution.is_bounded:
        return float(distribution.bound)

    def bound(d):
        return leakage_bound(distribution, lam, window, d, cylinder)

    if not math.isfinite(bound(0.0)):
        raise PaddingError(
            f"{distribution.name} radii have infinite second moment and no cylinder bound "
            "applies; no finite pad bounds the leakage (truncate the radii)")
    if bound(0.0) <= eps_leak:
        return 0.0
    upper = 1.0
    while bound(upper) > eps_leak:
        upper *= 2.0
        if upper > MAX_PAD:
            raise PaddingError(f"no pad below {MAX_PAD:g} brings the leakage under {eps_leak:g}")
    pad = optimize.brentq(lambda d: bound(d) - eps_leak, 0.0, upper, xtol=1e-9)
    logger.debug("pad %.4g for %s at lambda %.4g (eps_leak %.1e)", pad, distribution.name, lam, eps_leak)
    return float(pad) * (1.0 + 1e-9)


def realize_occupied(points, lam, marking, window, eps_leak=DEFAULT_EPS_LEAK):
    """Occupied set of the coupled points at intensity lam, restricted to discs meeting window"""
    _check_eps(eps_leak)
    coupled = couple_to_intensity(points, lam)
    pad = required_pad(marking.marginal, float(lam), window, eps_leak, marking.cylinder)
    available = points.region.margin_around(window)
    if available < pad * (1.0 - 1e-12):
        raise PaddingError(
            f"sampled region leaves a pad of {available:.4g} around the window, need {pad:.4g}")
    radii = marking.radii(coupled)
    keep = window.distance(coupled.locations) <= radii
    return OccupiedRealization(
        centers=coupled.locations[keep],
        radii=radii[keep],
        intensity_marks=coupled.intensity_marks[keep],
        window=window,
        padded_window=points.region,
        marking_mode=marking.mode,
        leakage_budget=leakage_bound(marking.marginal, float(lam), window, float(available),
                                     marking.cylinder),
        lambda_=float(lam),
    )


def _require_inside(occ, rect):
    if not occ.window.contains_rect(rect):
        raise QueryError(f"{rect} is not inside the realization window {occ.window}")


def covers_point(occ, x):
    """Closed-disc coverage of x"""
    xy = np.array([x.x, x.y])
    if not occ.window.contains(xy):
        raise QueryError(f"point {x} outside the realization window {occ.window}")
    if not len(occ):
        return False
    squared = np.sum((occ.centers - xy) ** 2, axis=1)
    return bool(np.any(squared <= occ.radii ** 2))


def covers_segment(occ, s):
    """Whether the discs cover the segment from the origin to (s, 0)"""
    if not s >= 0:
        raise ParameterError(f"segment length must be >= 0, got {s}")
    if not (occ.window.contains([0.0, 0.0]) and occ.window.contains([s, 0.0])):
        raise QueryError(f"segment [0, {s}] x {{0}} outside the realization window {occ.window}")
    if s == 0:
        return covers_point(occ, ORIGIN)
    cx, cy = occ.centers[:, 0], occ.centers[:, 1]
    hits = np.abs(cy) <= occ.radii
    half = np.sqrt(np.maximum(occ.radii[hits] ** 2 - cy[hits] ** 2, 0.0))
    lo, hi = cx[hits] - half, cx[hits] + half
    useful = (hi >= 0.0) & (lo <= s)
    lo, hi = lo[useful], hi[useful]
    if not len(lo):
        return False
    order = np.argsort(lo, kind='stable')
    lo, hi = lo[order], hi[order]
    if lo[0] > 0.0:
        return False
    reach = np.maximum.accumulate(hi)
    if reach[-1] < s:
        return False
    gaps = (lo[1:] > reach[:-1]) & (reach[:-1] < s)
    return not bool(gaps.any())


def covered_mask(occ, xy, offset=0.0):
    """Coverage of each row of xy by the discs with radii grown by offset"""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    mask = np.zeros(len(xy), dtype=bool)
    radii = occ.radii + offset
    keep = radii > 0
    if not len(xy) or not keep.any():
        return mask
    tree = cKDTree(xy)
    hits = tree.query_ball_point(occ.centers[keep], radii[keep], return_sorted=False)
    found = [index for group in hits for index in group]
    mask[np.asarray(found, dtype=np.intp)] = True
    return mask


@dataclass(frozen=True)
class AreaFraction:
    value: float
    stderr: float
    n_points: int


def covered_area_fraction(occ, rect, n_points, seed):
    """Covered fraction of rect on a Latin hypercube of n_points points"""
    if n_points < 1:
        raise ParameterError(f"n_points must be at least 1, got {n_points}")
    _require_inside(occ, rect)
    unit = qmc.LatinHypercube(d=2, rng=generator(seed)).random(n_points)
    xy = np.column_stack([rect.x_min + unit[:, 0] * rect.width,
                          rect.y_min + unit[:, 1] * rect.height])
    value = float(covered_mask(occ, xy).mean())
    return AreaFraction(value, math.sqrt(value * (1.0 - value) / n_points), n_points)


def _lens_points(c1, r1, c2, r2):
    """A point of disc1 and disc2 on the line of centres, for overlapping pairs"""
    delta = c2 - c1
    d = np.hypot(delta[:, 0], delta[:, 1])
    safe = np.where(d > 0, d, 1.0)
    unit = np.where((d > 0)[:, None], delta / safe[:, None], np.array([1.0, 0.0]))
    lo = np.maximum(-r1, d - r2)
    hi = np.minimum(r1, d + r2)
    return c1 + unit * (0.5 * (lo + hi))[:, None]


def _circle_line_points(center, radius, axis, level):
    """Intersections of a circle with the line {coordinate axis == level}"""
    offset = level - center[axis]
    if abs(offset) > radius:
        return []
    spread = math.sqrt(max(radius * radius - offset * offset, 0.0))
    other = center[1 - axis]
    points = []
    for value in (other - spread, other + spread):
        point = [0.0, 0.0]
        point[axis], point[1 - axis] = level, value
        points.append(point)
    return points


def discs_meet_in_rect(c1, r1, c2, r2, rect):
    """Exact test of disc1 & disc2 & rect != empty by checking a finite witness set

    The intersection is convex; when non-empty it contains the lens point
    on the line of centres, a rectangle corner, or an endpoint of its trace on
    a rectangle side (a circle-side intersection).
    """
    c1, c2 = np.asarray(c1, dtype=float), np.asarray(c2, dtype=float)
    tol = _GEOMETRY_TOL * max(1.0, r1, r2)
    candidates = [_lens_points(c1[None], np.array([r1]), c2[None], np.array([r2]))[0]]
    candidates.extend(rect.corners)
    d = float(np.hypot(*(c2 - c1)))
    if 0 < d <= r1 + r2:
        a = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
        h = math.sqrt(max(r1 * r1 - a * a, 0.0))
        unit = (c2 - c1) / d
        normal = np.array([-unit[1], unit[0]])
        candidates.extend([c1 + a * unit + h * normal, c1 + a * unit - h * normal])
    for center, radius in ((c1, r1), (c2, r2)):
        for axis, level in ((0, rect.x_min), (0, rect.x_max), (1, rect.y_min), (1, rect.y_max)):
            candidates.extend(_circle_line_points(center, radius, axis, level))
    points = np.asarray(candidates, dtype=float)
    inside = ((np.hypot(*(points - c1).T) <= r1 + tol)
              & (np.hypot(*(points - c2).T) <= r2 + tol)
              & rect.contains(points, tol=tol))
    return bool(inside.any())


def _clipped_graph(centers, radii, rect):
    """Discs of positive radius meeting rect and their pairs meeting inside rect

    Returns (nodes, first, second) with first/second indexing into nodes.
    """
    nodes = np.flatnonzero((radii > 0) & (rect.distance(centers) <= radii))
    empty = np.empty(0, dtype=np.intp)
    if len(nodes) < 2:
        return nodes, empty, empty
    c, r = centers[nodes], radii[nodes]
    first, second = SpatialHashGrid(c, 2.0 * r.max()).candidate_pairs()
    gap = np.hypot(*(c[first] - c[second]).T)
    close = gap <= r[first] + r[second]
    first, second = first[close], second[close]
    if not len(first):
        return nodes, empty, empty
    meets = rect.contains(_lens_points(c[first], r[first], c[second], r[second]))
    for k in np.flatnonzero(~meets):
        i, j = first[k], second[k]
        meets[k] = discs_meet_in_rect(c[i], r[i], c[j], r[j], rect)
    return nodes, first[meets], second[meets]


def _side_distances(centers, rect, direction):
    """Distance of each centre to the two target sides (closed segments)"""
    x, y = centers[:, 0], centers[:, 1]
    if direction == HORIZONTAL:
        along = np.maximum(np.maximum(rect.y_min - y, 0.0), y - rect.y_max)
        return np.hypot(x - rect.x_min, along), np.hypot(x - rect.x_max, along)
    along = np.maximum(np.maximum(rect.x_min - x, 0.0), x - rect.x_max)
    return np.hypot(y - rect.y_min, along), np.hypot(y - rect.y_max, along)


def _crossing_graph(occ, q):
    nodes, first, second = _clipped_graph(occ.centers, occ.radii, q.rect)
    c, r = occ.centers[nodes], occ.radii[nodes]
    start, end = _side_distances(c, q.rect, q.direction)
    return nodes, first, second, start <= r, end <= r


def has_crossing(occ, q):
    """Occupied crossing of q.rect in q.direction through O restricted to the rectangle"""
    if q.phase == VACANT:
        return has_vacant_crossing(occ, q)
    _require_inside(occ, q.rect)
    nodes, first, second, at_start, at_end = _crossing_graph(occ, q)
    if not (at_start.any() and at_end.any()):
        return False
    size = len(nodes)
    source, sink = size, size + 1
    components = DisjointSet(size + 2)
    components.merge_all(first, second)
    for node in np.flatnonzero(at_start):
        components.merge(int(node), source)
    for node in np.flatnonzero(at_end):
        components.merge(int(node), sink)
    return components.connected(source, sink)


def has_vacant_crossing(occ, q):
    """Vacant crossing in q.direction exists iff no occupied crossing in the other direction"""
    return not has_crossing(occ, q.perpendicular())


def crossing_threshold(occ, q):
    """Smallest coupled intensity at which the occupied crossing of q exists

    A disc is present from its intensity mark on, an adjacency from the larger
    of the two marks, so the threshold is the bottleneck of the lightest
    source-sink path, read off a minimum spanning tree. inf when the
    realization never crosses.
    """
    _require_inside(occ, q.rect)
    nodes, first, second, at_start, at_end = _crossing_graph(occ, q)
    if not (at_start.any() and at_end.any()):
        return math.inf
    marks = occ.intensity_marks[nodes]
    size = len(nodes)
    source, sink = size, size + 1
    starts, ends = np.flatnonzero(at_start), np.flatnonzero(at_end)
    rows = np.concatenate([first, starts, ends])
    cols = np.concatenate([second, np.full(len(starts), source), np.full(len(ends), sink)])
    # shifted by one so that zero marks stay edges in the sparse graph
    weights = 1.0 + np.concatenate([np.maximum(marks[first], marks[second]), marks[starts], marks[ends]])
    graph = coo_matrix((weights, (rows, cols)), shape=(size + 2, size + 2)).tocsr()
    tree = minimum_spanning_tree(graph)
    tree = (tree + tree.T).tocsr()
    _, predecessors = breadth_first_order(tree, source, directed=False, return_predecessors=True)
    if predecessors[sink] < 0:
        return math.inf
    bottleneck, node = 0.0, sink
    while node != source:
        parent = predecessors[node]
        bottleneck = max(bottleneck, tree[parent, node])
        node = parent
    return float(bottleneck) - 1.0


def origin_cluster_reaches(occ, radius_n, center=ORIGIN):
    """Whether the cluster of the origin in O & B_inf(0, n) touches the boundary of the box"""
    if not radius_n > 0:
        raise ParameterError(f"box radius must be positive, got {radius_n}")
    box = Rect.box(radius_n, center)
    _require_inside(occ, box)
    nodes, first, second = _clipped_graph(occ.centers, occ.radii, box)
    c, r = occ.centers[nodes], occ.radii[nodes]
    offset = c - np.array([center.x, center.y])
    holds_origin = np.hypot(offset[:, 0], offset[:, 1]) <= r
    touches_boundary = np.abs(offset).max(axis=1, initial=0.0) + r >= radius_n
    if not (holds_origin.any() and touches_boundary.any()):
        return False
    size = len(nodes)
    source, sink = size, size + 1
    components = DisjointSet(size + 2)
    components.merge_all(first, second)
    for node in np.flatnonzero(holds_origin):
        components.merge(int(node), source)
    for node in np.flatnonzero(touches_boundary):
        components.merge(int(node), sink)
    return components.connected(source, sink)


def grid_oracle_crossing(occ, q, resolution):
    """Raster flood-fill answer to a crossing query, or uncertain

    Cell centres are tested at resolution and resolution / 2; a yes must
    survive shrinking every disc by the cell size and a no must survive
    growing every disc by it, otherwise the answer is uncertain.
    """
    if not resolution > 0:
        raise ParameterError(f"resolution must be positive, got {resolution}")
    _require_inside(occ, q.rect)
    vacant = q.phase == VACANT

    def crosses(step, offset=0.0):
        xy, shape = cell_centers(q.rect, step)
        mask = covered_mask(occ, xy, offset).reshape(shape)
        return spans(~mask if vacant else mask, q.direction)

    coarse = crosses(resolution)
    if coarse != crosses(resolution / 2.0):
        return Verdict.UNCERTAIN
    step = cell_size(q.rect, resolution)
    # shrinking discs can only remove occupied cells, growing them only vacant ones
    if coarse:
        robust = crosses(resolution, step if vacant else -step)
    else:
        robust = not crosses(resolution, -step if vacant else step)
    return Verdict.of(coarse) if robust else Verdict.UNCERTAIN
