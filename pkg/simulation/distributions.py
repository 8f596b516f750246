"""
Radius Laws
File: simulation/distributions.py

A RadialDistribution is a law on [0, inf) given by its quantile (generalised
inverse) and tail P(R > t). Moments default to integrating the tail.
"""

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from utils.errors import ParameterError

MOMENT_RTOL = 1e-6
QUAD_ATOL = 1e-8
QUAD_RTOL = 1e-6


def _output(values, like):
    values = np.asarray(values, dtype=float)
    return float(values) if np.ndim(like) == 0 else values


def checked_quad(func, lower, upper, points=()):
    """Integrate over [lower, upper] split at the given breakpoints

    Raises ParameterError when a piece is non-finite or its error estimate
    exceeds the tolerance (quad's divergence warnings end up here).
    """
    cuts = sorted({p for p in points if lower < p < upper})
    edges = [lower, *cuts, upper]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        value, error, *rest = integrate.quad(func, a, b, limit=200, epsabs=1e-13, epsrel=1e-10,
                                             full_output=1)
        message = rest[1] if len(rest) > 1 else ''
        if (not math.isfinite(value) or 'divergent' in message
                or error > QUAD_ATOL + QUAD_RTOL * abs(value)):
            message = message or f"value {value}, error estimate {error:.3g}"
            raise ParameterError(f"integral over [{a:.4g}, {b:.4g}] did not converge: {message}")
        total += value
    return total


class RadialDistribution(ABC):
    """Law of a non-negative radius"""

    name = 'radial'

    @abstractmethod
    def quantile(self, z):
        """inf{x : P(R <= x) >= z}, vectorised over z"""

    @abstractmethod
    def tail(self, t):
        """P(R > t), vectorised over t"""

    @property
    @abstractmethod
    def bound(self):
        """Supremum of the support (inf when unbounded)"""

    @property
    def breakpoints(self):
        """Radii where the tail jumps or bends"""
        return ()

    @property
    def quantile_breakpoints(self):
        """Levels z where the quantile jumps or bends"""
        return ()

    def moment(self, order):
        """E[R**order] for order > 0 as the integral of order t**(order-1) P(R > t)"""
        def integrand(t):
            return order * t ** (order - 1) * float(self.tail(t))
        return checked_quad(integrand, 0.0, self.bound, self.breakpoints)

    def tail_mean(self, level):
        """E[R; R > level] = level P(R > level) + integral of P(R > t) over t > level"""
        if level >= self.bound:
            return 0.0
        excess = checked_quad(lambda t: float(self.tail(t)), level, self.bound, self.breakpoints)
        return level * float(self.tail(level)) + excess

    @property
    def mean(self):
        return self.moment(1)

    @property
    def second_moment(self):
        return self.moment(2)

    @property
    def is_bounded(self):
        return math.isfinite(self.bound)

    def sample(self, uniforms):
        return self.quantile(uniforms)


@dataclass(frozen=True)
class PointMass(RadialDistribution):
    value: float

    name = 'point_mass'

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0):
            raise ParameterError(f"point mass must sit at a finite radius >= 0, got {self.value}")

    def quantile(self, z):
        return _output(np.full(np.shape(z), self.value), z)

    def tail(self, t):
        return _output(np.where(np.asarray(t) < self.value, 1.0, 0.0), t)

    @property
    def bound(self):
        return self.value

    @property
    def breakpoints(self):
        return (self.value,)

    def moment(self, order):
        return self.value ** order

    def tail_mean(self, level):
        return self.value if self.value > level else 0.0


@dataclass(frozen=True)
class TwoPoint(RadialDistribution):
    """p * delta_b + (1 - p) * delta_a"""

    p: float
    low: float
    high: float

    name = 'two_point'

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"p must lie in [0, 1], got {self.p}")
        if not (0.0 <= self.low < self.high and math.isfinite(self.high)):
            raise ParameterError(f"need 0 <= a < b < inf, got a={self.low}, b={self.high}")

    def quantile(self, z):
        return _output(np.where(np.asarray(z) <= 1.0 - self.p, self.low, self.high), z)

    def tail(self, t):
        t = np.asarray(t)
        return _output(np.where(t < self.low, 1.0, np.where(t < self.high, self.p, 0.0)), t)

    @property
    def bound(self):
        return self.high if self.p > 0 else self.low

    @property
    def breakpoints(self):
        return (self.low, self.high)

    @property
    def quantile_breakpoints(self):
        return (1.0 - self.p,)

    def moment(self, order):
        return self.p * self.high ** order + (1.0 - self.p) * self.low ** order


@dataclass(frozen=True)
class Pareto(RadialDistribution):
    """P(R > t) = (scale / t) ** shape for t >= scale"""

    shape: float
    scale: float

    name = 'pareto'

    def __post_init__(self):
        if not (self.shape > 1.0 and math.isfinite(self.shape)):
            raise ParameterError(f"Pareto shape must exceed 1, got {self.shape}")
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ParameterError(f"Pareto scale must be positive, got {self.scale}")

    def quantile(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide='ignore'):
            values = self.scale * np.power(1.0 - z, -1.0 / self.shape)
        return _output(values, z)

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide='ignore'):
            values = np.where(t < self.scale, 1.0,
                              np.power(self.scale / np.maximum(t, self.scale), self.shape))
        return _output(values, t)

    @property
    def bound(self):
        return math.inf

    @property
    def breakpoints(self):
        return (self.scale,)

    def moment(self, order):
        if order >= self.shape:
            return math.inf
        return self.shape * self.scale ** order / (self.shape - order)

    def tail_mean(self, level):
        if level < self.scale:
            return self.mean
        return self.shape * self.scale ** self.shape * level ** (1.0 - self.shape) / (self.shape - 1.0)


@dataclass(frozen=True)
class Truncated(RadialDistribution):
    """Law of min(R, cap)"""

    inner: RadialDistribution
    cap: float

    name = 'truncated'

    def __post_init__(self):
        if not self.cap >= 0:
            raise ParameterError(f"truncation level must be >= 0, got {self.cap}")

    def quantile(self, z):
        return _output(np.minimum(self.inner.quantile(np.asarray(z, dtype=float)), self.cap), z)

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        return _output(np.where(t < self.cap, self.inner.tail(t), 0.0), t)

    @property
    def bound(self):
        return min(self.inner.bound, self.cap)

    def moment(self, order):
        if not math.isfinite(self.cap):
            return self.inner.moment(order)
        return super().moment(order)

    @property
    def breakpoints(self):
        return tuple(p for p in self.inner.breakpoints if p < self.cap) + (self.cap,)

    @property
    def quantile_breakpoints(self):
        kink = 1.0 - float(self.inner.tail(self.cap)) if math.isfinite(self.cap) else None
        extra = (kink,) if kink is not None and 0.0 < kink < 1.0 else ()
        return tuple(self.inner.quantile_breakpoints) + extra


@dataclass(frozen=True)
class CylinderMarginal(RadialDistribution):
    """Law of the cylinder field at one point

    With m = 2 pi u r cylinders expected to contain the point,
    P(phi > t) = exp(-m F(t)) - exp(-m) for t >= 0 and the law has an atom
    exp(-m) at 0 (no containing cylinder).
    """

    line_intensity: float
    base_radius: float
    values: RadialDistribution

    name = 'cylinder_marginal'

    @property
    def containment_rate(self):
        return 2.0 * math.pi * self.line_intensity * self.base_radius

    def tail(self, t):
        t = np.asarray(t, dtype=float)
        m = self.containment_rate
        below = 1.0 - np.asarray(self.values.tail(np.maximum(t, 0.0)), dtype=float)
        values = np.where(t < 0.0, 1.0, np.exp(-m * below) - math.exp(-m))
        return _output(values, t)

    def quantile(self, z):
        z = np.asarray(z, dtype=float)
        m = self.containment_rate
        empty = math.exp(-m)
        inside = z > empty
        if m == 0:
            return _output(np.zeros_like(z), z)
        level = -np.log(np.clip(1.0 + empty - z, empty, 1.0)) / m
        values = np.where(inside, self.values.quantile(np.clip(level, 0.0, 1.0)), 0.0)
        return _output(values, z)

    @property
    def bound(self):
        return self.values.bound

    @property
    def breakpoints(self):
        return tuple(self.values.breakpoints)

    def moment(self, order):
        """Infinite exactly when the F moment is: the tail is m exp(-m) P(F > t) at large t"""
        if self.containment_rate == 0:
            return 0.0
        if not math.isfinite(self.values.moment(order)):
            return math.inf
        return super().moment(order)

    @property
    def quantile_breakpoints(self):
        m = self.containment_rate
        cuts = [math.exp(-m)]
        for level in self.values.quantile_breakpoints:
            cuts.append(1.0 + math.exp(-m) - math.exp(-m * level))
        return tuple(c for c in cuts if 0.0 < c < 1.0)


def check_moments(distribution, rtol=MOMENT_RTOL):
    """Compare mean and second moment with integrals of the quantile function

    Returns (mean_from_quantile, second_from_quantile); raises ParameterError
    when either deviates from the closed form by more than rtol.
    """
    points = distribution.quantile_breakpoints
    mean = checked_quad(lambda z: float(distribution.quantile(z)), 0.0, 1.0, points)
    second = checked_quad(lambda z: float(distribution.quantile(z)) ** 2, 0.0, 1.0, points)
    for label, numeric, closed in (('mean', mean, distribution.mean),
                                   ('second moment', second, distribution.second_moment)):
        if not math.isclose(numeric, closed, rel_tol=rtol, abs_tol=1e-12):
            raise ParameterError(
                f"{distribution.name}: {label} {closed} disagrees with quantile integral {numeric}")
    return mean, second


def same_law(first, second, tol=1e-9):
    """True if two radius laws have the same quantile function on a fine grid"""
    levels = np.linspace(0.0005, 0.9995, 1999)
    a = np.asarray(first.quantile(levels), dtype=float)
    b = np.asarray(second.quantile(levels), dtype=float)
    finite = np.isfinite(a) & np.isfinite(b)
    if not np.array_equal(np.isfinite(a), np.isfinite(b)):
        return False
    return bool(np.all(np.abs(a[finite] - b[finite]) <= tol * np.maximum(1.0, np.abs(a[finite]))))


def iid_point_coverage(lam, distribution):
    """P(0 in O_Phi) = 1 - exp(-lam * pi * E[R^2])

    Integrating the intensity of discs that contain the origin gives the
    factor pi; the 2 pi sometimes quoted for this formula is off by two.
    """
    second = distribution.second_moment
    if not math.isfinite(second):
        return 1.0 if lam > 0 else 0.0
    return 1.0 - math.exp(-lam * math.pi * second)


def cylinder_containment(line_intensity, base_radius):
    """P(a fixed point lies in at least one cylinder)"""
    return 1.0 - math.exp(-2.0 * math.pi * line_intensity * base_radius)


def dilated_cylinder_bound(line_intensity, base_radius, values):
    """Upper bound 1 - exp(-2 pi u (r + E[F^-1(U)])) on P(0 in O), for every lambda"""
    return 1.0 - math.exp(-2.0 * math.pi * line_intensity * (base_radius + values.mean))


def cylinder_moment_bounds(line_intensity, base_radius, values, order):
    """(lower, upper) bounds on E[phi(0)**order] for the cylinder field

    Lower: exactly one cylinder contains the point; upper: the F moment.
    """
    m = 2.0 * math.pi * line_intensity * base_radius
    upper = values.moment(order)
    return m * math.exp(-m) * upper, upper
