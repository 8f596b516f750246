"""
Threshold Commands
File: commands/threshold.py
"""

import click

from analysis.threshold import (
    check_contraction, crossing_curve, estimate_lambda_c, finite_size_classify, voronoi_threshold_scan,
)
from commands import model_columns, run_experiment
from simulation.fields import VoronoiFieldParams
from simulation.scenario import ModelSpec


def _scan_lambda_body(config, record, threads, progress):
    """Crossing probabilities of 3n x n (hard) and n x 3n (easy) rectangles along the lambda grid"""
    model = config.build_model()
    columns = model_columns(model)
    for n in config.n_grid:
        curve = crossing_curve(model, n, config.lambda_grid, config.replications, config.master_seed,
                               config.eps_pad, config.eps_leak, n_jobs=threads, progress=progress)
        verdicts = finite_size_classify(curve)
        for lam, hard, easy in zip(curve.lambda_grid, curve.estimates, curve.easy_estimates):
            record.add(experiment=f"{config.experiment}:hard", **columns, **{'lambda': lam}, n=n,
                       **hard.as_row())
            record.add(experiment=f"{config.experiment}:easy", **columns, **{'lambda': lam}, n=n,
                       **easy.as_row())
        labels = ', '.join(f"{lam:g}:{v.value}" for lam, v in zip(curve.lambda_grid, verdicts))
        click.echo(f"✓ n={n:g} finite-size classes {labels}", err=True)


def _lambda_c_options(config):
    return dict(
        lambda_bracket=config.lambda_bracket,
        tolerance=config.tolerance,
        replications=config.replications,
        seed=config.master_seed,
        max_replications=config.max_replications or 8 * config.replications,
        eps_pad=config.eps_pad,
        eps_leak=config.eps_leak,
    )


def _lambda_c_body(config, record, threads, progress):
    """Finite-size pseudo-critical bracket at every scale of n_grid"""
    model = config.build_model()
    columns = model_columns(model)
    for n in config.n_grid:
        result = estimate_lambda_c(model, n, check_stability=config.check_stability,
                                   n_jobs=threads, progress=progress, **_lambda_c_options(config))
        record.add(experiment=f"{config.experiment}:{result.criterion}", **columns, **result.as_row())
        if result.stability is not None:
            record.add(experiment=f"{config.experiment}:stability", **columns,
                       **result.stability.as_row())
        status = 'converged' if result.converged else 'not converged'
        click.echo(f"✓ n={n:g} lambda_c in [{result.lambda_low:.5g}, {result.lambda_high:.5g}] ({status})",
                   err=True)


def _voronoi_scan_body(config, record, threads, progress):
    """lambda_c(mu, p) of the two-point Voronoi model against lambda_Phi(p)"""
    options = _lambda_c_options(config)
    options['max_replications'] = config.max_replications or config.replications
    for n in config.n_grid:
        scan = voronoi_threshold_scan(config.mu_grid, config.p_grid, config.a, config.b, n,
                                      eps0=config.eps0, check_stability=config.check_stability,
                                      coupled_colours=config.coupled_colours, n_jobs=threads,
                                      progress=progress, **options)
        for row in scan.rows:
            geo_model = ModelSpec(field=VoronoiFieldParams(row.mu, row.p, config.a, config.b),
                                  coupled_colours=config.coupled_colours)
            arms = ((geo_model, row.geostatistical, 'geostatistical'),
                    (geo_model.iid_counterpart(), row.iid, 'iid'))
            for model, result, arm in arms:
                record.add(experiment=f"{config.experiment}:{arm}", **model_columns(model),
                           mu=row.mu, p=row.p, **result.as_row())
            record.add(experiment=f"{config.experiment}:ordering", **model_columns(geo_model),
                       mu=row.mu, p=row.p, n=n, value=float(row.ordering), reps=config.replications,
                       seed=config.master_seed)


def _check_contraction_body(config, record, threads, progress):
    """q(3n) <= 49 q(n)^2 + rho(9n) at every (lambda, n)"""
    model = config.build_model()
    columns = model_columns(model)
    for lam in config.lambda_grid:
        for n in config.n_grid:
            report = check_contraction(model, lam, n, config.replications, config.master_seed,
                                       eps0=config.eps0, test_levels=config.test_levels,
                                       eps_pad=config.eps_pad, eps_leak=config.eps_leak,
                                       n_jobs=threads, progress=progress)
            for suffix, scale, estimate in (('q_n', n, report.q_n), ('q_3n', 3.0 * n, report.q_3n),
                                            ('pi_lambda', 9.0 * n, report.pi_lambda),
                                            ('pi_bar', 9.0 * n, report.pi_bar)):
                record.add(experiment=f"{config.experiment}:{suffix}", **columns, **{'lambda': lam},
                           n=scale, **estimate.as_row())
            record.add(experiment=f"{config.experiment}:rhs", **columns, **{'lambda': lam}, n=n,
                       value=report.rhs, ci_low=report.rhs, ci_high=report.rhs + report.slack,
                       reps=config.replications, seed=config.master_seed)
            click.echo(f"✓ lambda={lam:g} n={n:g}: q(3n)={report.q_3n.value:.4g} "
                       f"vs {report.rhs:.4g} + {report.slack:.3g} -> {report.status}", err=True)


cmd_scan_lambda = click.command('scan-lambda')(run_experiment('scan-lambda', _scan_lambda_body))
cmd_lambda_c = click.command('lambda-c')(run_experiment('lambda-c', _lambda_c_body))
cmd_voronoi_scan = click.command('voronoi-scan')(run_experiment('voronoi-scan', _voronoi_scan_body))
cmd_check_contraction = click.command('check-contraction')(
    run_experiment('check-contraction', _check_contraction_body))
