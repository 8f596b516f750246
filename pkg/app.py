"""
Geoperc - Main Application Entry Point
File: app.py
"""

import logging
import os

import click
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

from commands.estimate import cmd_compare, cmd_estimate
from commands.threshold import cmd_check_contraction, cmd_lambda_c, cmd_scan_lambda, cmd_voronoi_scan
from utils.config import PRESETS_DIR, list_presets, load_preset
from utils.save_load import LIBRARY_VERSION


@click.group()
@click.version_option(LIBRARY_VERSION, prog_name='geoperc')
@click.option('--log-level', default=lambda: os.getenv('GEOPERC_LOG_LEVEL', 'WARNING'),
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False),
              help='Logging level (GEOPERC_LOG_LEVEL)')
def cli(log_level):
    """Monte Carlo experiments on Gilbert's disc model with geostatistically marked radii"""
    logging.basicConfig(
        level=log_level.upper(),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )


# Register command modules
cli.add_command(cmd_estimate)
cli.add_command(cmd_compare)
cli.add_command(cmd_scan_lambda)
cli.add_command(cmd_lambda_c)
cli.add_command(cmd_voronoi_scan)
cli.add_command(cmd_check_contraction)


@cli.command('presets')
def presets():
    """List the shipped experiment presets"""
    names = list_presets()
    if not names:
        click.echo(f"No presets found in {PRESETS_DIR}", err=True)
        return
    for name in names:
        config = load_preset(name)
        click.echo(f"{name:24s} {config.command:18s} {config.experiment}")


if __name__ == '__main__':
    cli()
