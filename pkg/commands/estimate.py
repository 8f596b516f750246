"""
Estimation Commands
File: commands/estimate.py
"""

import logging

import click

from analysis.estimators import (
    AreaFractionSample, CrossingEvent, Estimate, OriginClusterEvent, PointCoverageEvent,
    SegmentCoverageEvent, compare_geostat_iid, default_test_levels, estimate_field_mixing_proxy,
    estimate_mean, estimate_pi_lambda, estimate_probability, estimate_rho_proxy,
)
from commands import model_columns, run_experiment
from simulation.distributions import dilated_cylinder_bound, iid_point_coverage
from simulation.fields import CylinderFieldParams
from simulation.scenario import IID

logger = logging.getLogger(__name__)


def _closed_form_rows(config, model, record, lam):
    """Exact reference values printed next to point-coverage estimates"""
    columns = model_columns(model)
    suffix = 'closed_form' if model.marking == IID else 'iid_closed_form'
    value = iid_point_coverage(lam, model.marginal())
    record.add(experiment=f"{config.experiment}:{suffix}", **columns, **{'lambda': lam},
               **Estimate.exact(value, config.master_seed).as_row())
    if model.marking != IID and isinstance(model.field, CylinderFieldParams):
        field = model.field
        value = dilated_cylinder_bound(field.line_intensity, field.base_radius, field.values)
        record.add(experiment=f"{config.experiment}:plane_coverage_bound", **columns, **{'lambda': lam},
                   **Estimate.exact(value, config.master_seed).as_row())


def _event(config, model, lam, **params):
    q = config.quantity
    common = dict(eps_pad=config.eps_pad, eps_leak=config.eps_leak)
    if q == 'point_coverage':
        return PointCoverageEvent(model, lam, **common)
    if q == 'segment_coverage':
        return SegmentCoverageEvent(model, lam, **common, length=params['s'])
    if q == 'crossing':
        return CrossingEvent(model, lam, **common, width=3.0 * params['n'], height=params['n'])
    return OriginClusterEvent(model, lam, **common, radius_n=params['n'])


def _parameter_sets(config):
    if config.quantity == 'segment_coverage':
        return [{'s': s} for s in config.s_grid]
    if config.quantity in ('point_coverage', 'area_fraction'):
        return [{}]
    return [{'n': n} for n in config.n_grid]


def _estimate_body(config, record, threads, progress):
    """Estimate a coverage, crossing or correlation quantity on the configured grids"""
    model = config.build_model()
    columns = model_columns(model)
    run = dict(n_jobs=threads, progress=progress)
    seed = config.master_seed

    if config.quantity == 'field_mixing':
        levels = config.test_levels or default_test_levels(model)
        for n in config.n_grid:
            estimate = estimate_field_mixing_proxy(model, n, config.eps0, levels, config.replications,
                                                   seed, config.eps_pad, **run)
            record.add(experiment=config.experiment, **columns, n=n, **estimate.as_row())
        return

    for lam in config.lambda_grid:
        for params in _parameter_sets(config):
            q = config.quantity
            if q == 'pi_lambda':
                estimate = estimate_pi_lambda(model, lam, params['n'], config.eps0, config.replications,
                                              seed, config.eps_pad, config.eps_leak, **run)
            elif q == 'rho':
                report = estimate_rho_proxy(model, lam, params['n'], config.eps0, config.replications,
                                            seed, test_levels=config.test_levels,
                                            eps_pad=config.eps_pad, eps_leak=config.eps_leak, **run)
                for suffix, part in (('rho', report.rho), ('pi_lambda', report.pi_lambda),
                                     ('pi_bar', report.pi_bar)):
                    record.add(experiment=f"{config.experiment}:{suffix}", **columns,
                               **{'lambda': lam}, **params, **part.as_row())
                upper = Estimate.from_statistic(report.upper_bound, report.upper_std_error,
                                                config.replications, seed)
                record.add(experiment=f"{config.experiment}:upper_bound", **columns,
                           **{'lambda': lam}, **params, **upper.as_row())
                if not report.consistent:
                    logger.warning("rho proxy %.4g exceeds 4 pi + pi-bar = %.4g at lambda=%g",
                                   report.rho.value, report.upper_bound, lam)
                continue
            elif q == 'area_fraction':
                sample = AreaFractionSample(model, lam, config.eps_pad, config.eps_leak)
                estimate = estimate_mean(sample, config.replications, seed,
                                         confidence=config.confidence, **run)
            else:
                estimate = estimate_probability(_event(config, model, lam, **params), config.replications,
                                                seed, confidence=config.confidence, **run)
            record.add(experiment=config.experiment, **columns, **{'lambda': lam}, **params,
                       **estimate.as_row())
        if config.quantity == 'point_coverage':
            _closed_form_rows(config, model, record, lam)
    click.echo(f"✓ Estimated {config.quantity} on {len(record.results)} rows", err=True)


def _compare_body(config, record, threads, progress):
    """Paired geostatistical versus i.i.d. comparison with the matched marginal"""
    model = config.build_model()
    for lam in config.lambda_grid:
        report = compare_geostat_iid(model, lam, config.s_grid, config.n_grid, config.replications,
                                     config.master_seed, eps_pad=config.eps_pad,
                                     eps_leak=config.eps_leak, n_jobs=threads, progress=progress)
        iid_model = model.iid_counterpart()
        for row in report.rows:
            params = {}
            if row.quantity == 'segment_coverage':
                params['s'] = row.parameter
            elif row.quantity == 'crossing':
                params['n'] = row.parameter
            for arm_model, estimate in ((model, row.geostatistical), (iid_model, row.iid)):
                record.add(experiment=f"{config.experiment}:{row.quantity}", **model_columns(arm_model),
                           **{'lambda': lam}, **params, **estimate.as_row())
            if row.flag:
                click.echo(f"✓ {row.quantity} {params or ''} at lambda={lam:g}: {row.flag}", err=True)


cmd_estimate = click.command('estimate')(run_experiment('estimate', _estimate_body))
cmd_compare = click.command('compare')(run_experiment('compare', _compare_body))
