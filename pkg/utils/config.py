"""
Experiment Configuration
File: utils/config.py
"""

import json
import math
import os
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from simulation.boolean_model import DEFAULT_EPS_LEAK
from simulation.distributions import Pareto, PointMass, Truncated, TwoPoint
from simulation.fields import (
    DEFAULT_EPS_PAD, ConstantFieldParams, CylinderFieldParams, VoronoiFieldParams,
)
from simulation.scenario import ModelSpec
from utils.errors import ConfigError, ParameterError
from utils.rng import MAX_SEED

# Load environment variables
load_dotenv()

PRESETS_DIR = os.getenv('GEOPERC_PRESETS_DIR', str(Path(__file__).resolve().parent.parent / 'presets'))
OUTPUT_DIR = os.getenv('GEOPERC_OUTPUT_DIR', 'results')

COMMANDS = ('estimate', 'compare', 'scan-lambda', 'lambda-c', 'voronoi-scan', 'check-contraction')
QUANTITIES = ('point_coverage', 'segment_coverage', 'crossing', 'origin_cluster',
              'pi_lambda', 'field_mixing', 'rho', 'area_fraction')


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)


class RadiusConfig(_Strict):
    """Radius law: point mass, two-point or Pareto, optionally capped"""

    family: Literal['point_mass', 'two_point', 'pareto']
    value: Optional[float] = None
    p: Optional[float] = None
    low: Optional[float] = None
    high: Optional[float] = None
    shape: Optional[float] = None
    scale: Optional[float] = None
    cap: Optional[float] = None

    @model_validator(mode='after')
    def _required_parameters(self):
        needed = {'point_mass': ('value',), 'two_point': ('p', 'low', 'high'),
                  'pareto': ('shape', 'scale')}[self.family]
        missing = [name for name in needed if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.family} radius law needs {', '.join(missing)}")
        return self

    def build(self):
        if self.family == 'point_mass':
            law = PointMass(self.value)
        elif self.family == 'two_point':
            law = TwoPoint(self.p, self.low, self.high)
        else:
            law = Pareto(self.shape, self.scale)
        return law if self.cap is None else Truncated(law, self.cap)


class FieldConfig(_Strict):
    """Random field family and its parameters"""

    family: Literal['constant', 'cylinder', 'voronoi_two_point']
    value: Optional[float] = None
    line_intensity: Optional[float] = None
    base_radius: Optional[float] = None
    values: Optional[RadiusConfig] = None
    seed_intensity: Optional[float] = None
    p: Optional[float] = None
    a: Optional[float] = None
    b: Optional[float] = None

    @model_validator(mode='after')
    def _required_parameters(self):
        needed = {'constant': ('value',), 'cylinder': ('line_intensity', 'base_radius', 'values'),
                  'voronoi_two_point': ('seed_intensity', 'p', 'a', 'b')}[self.family]
        missing = [name for name in needed if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.family} field needs {', '.join(missing)}")
        return self

    def build(self):
        if self.family == 'constant':
            return ConstantFieldParams(self.value)
        if self.family == 'cylinder':
            return CylinderFieldParams(self.line_intensity, self.base_radius, self.values.build())
        return VoronoiFieldParams(self.seed_intensity, self.p, self.a, self.b)


class ModelConfig(_Strict):
    marking: Literal['geostatistical', 'iid'] = 'geostatistical'
    field: Optional[FieldConfig] = None
    radius: Optional[RadiusConfig] = None
    truncation: Optional[float] = None
    coupled_colours: bool = False

    def build(self):
        """ModelSpec for this configuration; parameter problems become ConfigError"""
        try:
            return ModelSpec(
                field=self.field.build() if self.field else None,
                distribution=self.radius.build() if self.radius else None,
                marking=self.marking,
                truncation=self.truncation,
                coupled_colours=self.coupled_colours,
            )
        except ParameterError as e:
            raise ConfigError(f"invalid model: {e}") from e


def _ascending(values, name):
    if any(not (v >= 0 and math.isfinite(v)) for v in values):
        raise ValueError(f"{name} values must be finite and >= 0")
    if any(b < a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} must be sorted ascending")
    return values


class ExperimentConfig(_Strict):
    """One experiment: command, model, grids, replications and output settings"""

    command: Literal[COMMANDS]
    experiment: str = 'experiment'
    quantity: Literal[QUANTITIES] = 'point_coverage'
    model: Optional[ModelConfig] = None
    lambda_grid: List[float] = Field(default_factory=list)
    n_grid: List[float] = Field(default_factory=list)
    s_grid: List[float] = Field(default_factory=list)
    mu_grid: List[float] = Field(default_factory=list)
    p_grid: List[float] = Field(default_factory=list)
    a: Optional[float] = None
    b: Optional[float] = None
    test_levels: Optional[List[float]] = None
    lambda_bracket: Optional[Tuple[float, float]] = None
    tolerance: Optional[float] = Field(default=None, gt=0)
    replications: int = Field(default=2000, ge=1)
    max_replications: Optional[int] = Field(default=None, ge=1)
    check_stability: bool = True
    coupled_colours: bool = False
    master_seed: int = Field(default=0, ge=0, le=MAX_SEED)
    eps_pad: float = DEFAULT_EPS_PAD
    eps_leak: float = DEFAULT_EPS_LEAK
    eps0: float = 0.2
    confidence: float = Field(default=0.95, gt=0, lt=1)
    output: Optional[str] = None
    format: Literal['csv', 'json'] = 'json'

    @field_validator('eps0')
    @classmethod
    def _eps0_range(cls, value):
        if not 0.0 < value <= 0.2:
            raise ValueError(f"eps0 must lie in (0, 1/5], got {value}")
        return value

    @field_validator('eps_pad', 'eps_leak')
    @classmethod
    def _budget_range(cls, value):
        if not 0.0 < value < 1.0:
            raise ValueError(f"error budgets must lie in (0, 1), got {value}")
        return value

    @field_validator('lambda_grid', 's_grid')
    @classmethod
    def _sorted_grid(cls, values, info):
        return _ascending(values, info.field_name)

    @field_validator('n_grid', 'mu_grid')
    @classmethod
    def _positive_grid(cls, values, info):
        if any(not (v > 0 and math.isfinite(v)) for v in values):
            raise ValueError(f"{info.field_name} values must be finite and positive")
        return values

    @field_validator('p_grid')
    @classmethod
    def _probabilities(cls, values):
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError("p_grid values must lie in [0, 1]")
        return values

    @model_validator(mode='after')
    def _command_requirements(self):
        needs = {
            'estimate': ('model',),
            'compare': ('model', 'lambda_grid'),
            'scan-lambda': ('model', 'lambda_grid', 'n_grid'),
            'lambda-c': ('model', 'n_grid'),
            'voronoi-scan': ('mu_grid', 'p_grid', 'n_grid', 'a', 'b'),
            'check-contraction': ('model', 'lambda_grid', 'n_grid'),
        }[self.command]
        if self.command == 'estimate':
            needs += {'point_coverage': ('lambda_grid',),
                      'segment_coverage': ('lambda_grid', 's_grid'),
                      'crossing': ('lambda_grid', 'n_grid'),
                      'origin_cluster': ('lambda_grid', 'n_grid'),
                      'pi_lambda': ('lambda_grid', 'n_grid'),
                      'field_mixing': ('n_grid',),
                      'rho': ('lambda_grid', 'n_grid'),
                      'area_fraction': ('lambda_grid',)}[self.quantity]
        missing = [name for name in needs if getattr(self, name) in (None, [])]
        if missing:
            raise ValueError(f"command {self.command} needs non-empty {', '.join(missing)}")
        if self.command == 'compare' and self.model.marking != 'geostatistical':
            raise ValueError("compare needs a geostatistical model")
        if self.command == 'voronoi-scan' and not self.b < (self.eps0 / 4.0) * min(self.n_grid):
            raise ValueError(f"voronoi-scan needs b < (eps0/4) n, got b={self.b}, n={min(self.n_grid)}")
        if self.coupled_colours and self.command != 'voronoi-scan':
            raise ValueError("coupled_colours at the top level applies to voronoi-scan; set it on the model")
        if self.lambda_bracket is not None and not 0 <= self.lambda_bracket[0] < self.lambda_bracket[1]:
            raise ValueError("lambda_bracket must be (low, high) with 0 <= low < high")
        if self.max_replications is not None and self.max_replications < self.replications:
            raise ValueError("max_replications must be >= replications")
        if self.model is not None:
            self.model.build()
        return self

    def build_model(self):
        return self.model.build()


def _validated(text, source):
    try:
        return ExperimentConfig.model_validate_json(text)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration in {source}:\n{e}") from e
    except ConfigError as e:
        raise ConfigError(f"invalid configuration in {source}: {e}") from e


def load_config(path):
    """Read and validate a JSON experiment configuration"""
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ConfigError(f"cannot read configuration {path}: {e}") from e
    return _validated(text, path)


def list_presets(presets_dir=None):
    """Names of the shipped preset configurations"""
    directory = Path(presets_dir or PRESETS_DIR)
    if not directory.is_dir():
        return []
    return sorted(p.stem for p in directory.glob('*.json'))


def load_preset(name, presets_dir=None):
    directory = Path(presets_dir or PRESETS_DIR)
    path = directory / f"{name}.json"
    if not path.is_file():
        available = ', '.join(list_presets(directory)) or 'none'
        raise ConfigError(f"unknown preset {name!r} (available: {available})")
    return load_config(path)


def config_echo(config):
    """JSON-ready dict of the configuration"""
    return json.loads(config.model_dump_json())
