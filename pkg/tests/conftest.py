"""
Shared Test Fixtures
File: tests/conftest.py
"""

import json

import numpy as np
import pytest

from simulation.distributions import Pareto, PointMass, TwoPoint
from simulation.boolean_model import OccupiedRealization
from simulation.fields import ConstantFieldParams, CylinderFieldParams, VoronoiFieldParams
from simulation.sampling import Rect
from simulation.scenario import IID, ModelSpec


def make_occupied(centers, radii, window, marks=None, lambda_=1.0):
    """Hand-built realization for deterministic geometry checks"""
    centers = np.asarray(centers, dtype=float).reshape(-1, 2)
    radii = np.asarray(radii, dtype=float)
    marks = np.zeros(len(radii)) if marks is None else np.asarray(marks, dtype=float)
    return OccupiedRealization(
        centers=centers,
        radii=radii,
        intensity_marks=marks,
        window=window,
        padded_window=window,
        marking_mode='iid',
        leakage_budget=0.0,
        lambda_=lambda_,
    )


@pytest.fixture
def occupied_factory():
    return make_occupied


@pytest.fixture
def unit_disc_model():
    return ModelSpec(field=ConstantFieldParams(1.0))


@pytest.fixture
def iid_unit_model():
    return ModelSpec(distribution=PointMass(1.0), marking=IID)


@pytest.fixture
def two_point_iid_model():
    return ModelSpec(distribution=TwoPoint(0.5, 0.2, 0.4), marking=IID)


@pytest.fixture
def cylinder_params():
    return CylinderFieldParams(0.1, 2.0, PointMass(1.0))


@pytest.fixture
def heavy_cylinder():
    """Cylinder field whose values have a finite mean but no second moment"""
    return CylinderFieldParams(0.05, 2.0, Pareto(1.9, 1.0))


@pytest.fixture
def voronoi_params():
    return VoronoiFieldParams(1.0, 0.5, 0.5, 1.0)


@pytest.fixture
def strip():
    return Rect(0.0, 3.0, 0.0, 1.0)


@pytest.fixture
def write_config(tmp_path):
    """Write a config dict to a JSON file and return its path"""
    def write(payload, name='config.json'):
        path = tmp_path / name
        path.write_text(json.dumps(payload), encoding='utf-8')
        return str(path)
    return write
