"""
Shared CLI Plumbing
File: commands/__init__.py
"""

import functools
import logging
import sys
import time

import click
from pydantic import ValidationError

from utils.config import OUTPUT_DIR, ExperimentConfig, config_echo, load_config, load_preset
from utils.errors import ConfigError, ContractViolation, ParameterError
from utils.parallel import DEFAULT_THREADS
from utils.save_load import ResultRecord, ResultStore

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_CONTRACT = 3


def handle_errors(func):
    """Map configuration problems to exit code 2 and contract violations to 3"""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (ParameterError, ValidationError) as e:
            click.echo(f"✗ Configuration error: {e}", err=True)
            sys.exit(EXIT_CONFIG)
        except ContractViolation as e:
            click.echo(f"✗ Contract violation: {e}", err=True)
            diagnostics = getattr(e, 'diagnostics', None)
            if diagnostics:
                click.echo(f"  diagnostics: {diagnostics}", err=True)
            sys.exit(EXIT_CONTRACT)
    return wrapper


def experiment_options(func):
    """--config/--preset, --seed, --threads, --format and --out"""
    options = [
        click.option('--config', 'config_path', type=click.Path(dir_okay=False),
                     help='JSON experiment configuration'),
        click.option('--preset', help='Name of a shipped preset configuration'),
        click.option('--seed', type=int, help='Override the master seed'),
        click.option('--threads', type=click.IntRange(min=1), default=None,
                     help='Worker processes for replications'),
        click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), default=None,
                     help='Output format (default from the config)'),
        click.option('--out', type=click.Path(dir_okay=False),
                     help="Output path, '-' for stdout"),
        click.option('--progress/--no-progress', default=False, help='Show progress bars'),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def resolve_config(command, config_path, preset, seed=None):
    """Load the configuration named on the command line and apply overrides"""
    if bool(config_path) == bool(preset):
        raise ConfigError("give exactly one of --config or --preset")
    config = load_config(config_path) if config_path else load_preset(preset)
    if config.command != command:
        raise ConfigError(f"configuration is for command {config.command!r}, not {command!r}")
    if seed is not None:
        try:
            config = ExperimentConfig.model_validate({**config.model_dump(), 'master_seed': seed})
        except ValidationError as e:
            raise ConfigError(f"invalid --seed: {e}") from e
    return config


def run_experiment(command, body):
    """Wrap a command body: resolve config, run, time and persist the record"""
    @handle_errors
    @experiment_options
    @functools.wraps(body)
    def runner(config_path, preset, seed, threads, fmt, out, progress):
        config = resolve_config(command, config_path, preset, seed)
        threads = threads or DEFAULT_THREADS
        record = ResultRecord(config_echo(config))
        started = time.perf_counter()
        body(config, record, threads, progress)
        record.timing = {'wall_clock_seconds': round(time.perf_counter() - started, 3),
                         'threads': threads}

        fmt = fmt or config.format
        store = ResultStore(OUTPUT_DIR)
        if out == '-':
            click.echo(store.render(record, fmt), nl=False)
        else:
            path = store.save(record, fmt, out or config.output)
            click.echo(f"✓ Saved {len(record.results)} rows to {path}", err=True)
        return record
    return runner


def model_columns(model):
    return {'field_family': model.field_family, 'marking': model.marking}
