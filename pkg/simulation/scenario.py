"""
Model Specifications and Coupled Replications
File: simulation/scenario.py
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from simulation.boolean_model import (
    DEFAULT_EPS_LEAK, GeostatisticalMarking, IidMarking, realize_occupied, required_pad,
)
from simulation.distributions import PointMass, RadialDistribution, Truncated
from simulation.fields import (
    DEFAULT_EPS_PAD, ConstantFieldParams, CylinderFieldParams, VoronoiFieldParams, truncate_field,
)
from simulation.sampling import sample_marked_points
from utils.errors import PaddingError, ParameterError
from utils.rng import FIELD_STREAM, POINT_STREAM, stream_seed

logger = logging.getLogger(__name__)

GEOSTATISTICAL = 'geostatistical'
IID = 'iid'

# guard against pads that would need an unreasonable number of points
MAX_EXPECTED_POINTS = 5_000_000


@dataclass(frozen=True)
class ModelSpec:
    """Field family or radius law, marking mode and optional truncation level M"""

    field: Optional[object] = None
    distribution: Optional[RadialDistribution] = None
    marking: str = GEOSTATISTICAL
    truncation: Optional[float] = None
    coupled_colours: bool = False

    def __post_init__(self):
        if self.marking not in (GEOSTATISTICAL, IID):
            raise ParameterError(f"unknown marking mode {self.marking!r}")
        if self.marking == GEOSTATISTICAL and self.field is None:
            raise ParameterError("geostatistical marking needs a field")
        if self.field is None and self.distribution is None:
            raise ParameterError("a model needs a field or a radius distribution")
        if self.truncation is not None and not self.truncation >= 0:
            raise ParameterError(f"truncation level must be >= 0, got {self.truncation}")
        if self.coupled_colours and not isinstance(self.field, VoronoiFieldParams):
            raise ParameterError("coupled colouring only applies to Voronoi fields")

    @property
    def field_family(self):
        if self.marking == IID and self.distribution is not None:
            return self.distribution.name
        return self.field.family

    def marginal(self):
        """Radius law at a single point (the Phi of the matched i.i.d. model)"""
        if self.marking == GEOSTATISTICAL or self.distribution is None:
            base = self.field.marginal()
        else:
            base = self.distribution
        if self.truncation is not None and math.isfinite(self.truncation):
            return Truncated(base, float(self.truncation))
        return base

    @property
    def leakage_cylinder(self):
        if self.marking == GEOSTATISTICAL and isinstance(self.field, CylinderFieldParams):
            return self.field
        return None

    def iid_counterpart(self):
        return ModelSpec(distribution=self.marginal(), marking=IID)

    def radius_bound(self):
        return self.marginal().bound

    @property
    def has_constant_field(self):
        if self.marking == IID:
            return isinstance(self.marginal(), PointMass)
        return isinstance(self.field, ConstantFieldParams)


@dataclass(frozen=True, eq=False)
class Replication:
    index: int
    points: object = field(repr=False)
    realized_field: object = field(repr=False)
    occupied: object = field(repr=False)


def replication_region(model, window, lambda_max, eps_leak=DEFAULT_EPS_LEAK, extra_pad=0.0):
    """Region on which points are sampled: window padded for leakage and extra_pad"""
    pad = required_pad(model.marginal(), float(lambda_max), window, eps_leak, model.leakage_cylinder)
    region = window.dilate(max(pad, extra_pad))
    if lambda_max * region.area > MAX_EXPECTED_POINTS:
        raise PaddingError(
            f"pad {pad:.4g} needs {lambda_max * region.area:.3g} expected points; "
            "raise eps_leak or truncate the radii")
    return region


def realize_field(model, region, master_seed, replication, eps_pad=DEFAULT_EPS_PAD, colour_points=None):
    realized = model.field.build(region, eps_pad, stream_seed(master_seed, replication, FIELD_STREAM),
                                 colour_points=colour_points)
    if model.truncation is not None:
        realized = truncate_field(realized, model.truncation)
    return realized


def realize_replication(model, window, lambda_max, master_seed, replication,
                        eps_pad=DEFAULT_EPS_PAD, eps_leak=DEFAULT_EPS_LEAK, extra_pad=0.0):
    """One coupled realization at lambda_max; smaller intensities come from restrict()

    Points depend only on (master_seed, replication) and the padded region, so
    a model and its i.i.d. counterpart see the same Poisson points.
    """
    region = replication_region(model, window, lambda_max, eps_leak, extra_pad)
    points = sample_marked_points(lambda_max, region, stream_seed(master_seed, replication, POINT_STREAM))
    if model.marking == GEOSTATISTICAL:
        realized = realize_field(model, region, master_seed, replication, eps_pad,
                                 colour_points=points if model.coupled_colours else None)
        marking = GeostatisticalMarking(realized)
    else:
        realized = None
        marking = IidMarking(model.marginal())
    occupied = realize_occupied(points, lambda_max, marking, window, eps_leak)
    return Replication(replication, points, realized, occupied)
