import os
import sys
from typing import Optional

import click

from greenfde.cli.utils import (
    stderr_is_tty as _stderr_is_tty,
    print_condition_report as _print_condition_report,
    print_reproduce_summary as _print_reproduce_summary,
    print_solve_summary as _print_solve_summary,
    print_study as _print_study,
)
from greenfde.core.analysis import check_conditions, convergence_study
from greenfde.core.config_api import cli_overrides, parse_grids
from greenfde.core.exceptions import (
    ConfigError,
    DivergenceError,
    ExprDomainError,
    ExprError,
    GreenError,
    GridError,
    NumericalFailure,
    ProblemError,
)
from greenfde.core.green import GreenTable
from greenfde.core.logging import setup_logging
from greenfde.core.models import ProblemConfig, load_problem_config
from greenfde.core.problem import delay_points
from greenfde.core.progress import NoOpProgressReporter, RichProgressReporter
from greenfde.core.quadrature import make_grid
from greenfde.core.reports import kernel_csv, solution_csv, study_csv, to_json, write_text
from greenfde.core.reproduce import reproduce as _reproduce
from greenfde.core.solver import solve as _solve

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NUMERICAL = 2


def _exit_code_for(exc: BaseException) -> Optional[int]:
    if isinstance(exc, (ConfigError, ExprError, ProblemError, GreenError, GridError)):
        return EXIT_ERROR
    if isinstance(exc, (NumericalFailure, ExprDomainError)):
        return EXIT_NUMERICAL
    return None


class _ExitCodeGroup(click.Group):
    """Keeps the 0/1/2 exit contract: usage and config errors exit 1, numerical failures 2."""

    def main(self, *args, standalone_mode: bool = True, **kwargs):
        try:
            rv = super().main(*args, standalone_mode=False, **kwargs)
        except click.ClickException as e:
            if not standalone_mode:
                raise
            e.show()
            sys.exit(EXIT_ERROR)
        except click.exceptions.Abort:
            if not standalone_mode:
                raise
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_ERROR)
        except Exception as e:
            code = _exit_code_for(e)
            if code is None or not standalone_mode:
                raise
            click.echo(f"Error: {e}", err=True)
            sys.exit(code)
        if not standalone_mode:
            return rv
        sys.exit(rv if isinstance(rv, int) else EXIT_OK)


def _progress(ctx: click.Context):
    if ctx.obj.get("progress") and _stderr_is_tty():
        return RichProgressReporter()
    return NoOpProgressReporter()


def _load(config_path: str, **overrides) -> ProblemConfig:
    return load_problem_config(config_path, cli_overrides(**overrides))


@click.group(cls=_ExitCodeGroup, context_settings={"help_option_names": ["-h", "--help"]})
@click.option("--debug", is_flag=True, default=False)
@click.option("-v", "--verbose", is_flag=True, default=False, help="Enable verbose logging (INFO)")
@click.option(
    "--log-format",
    type=click.Choice(["text", "json"]),
    default="text",
    show_default=True,
    help="Log line format",
)
@click.option("--progress/--no-progress", default=True, help="Show progress on stderr (TTY only)")
@click.pass_context
def main(ctx, debug, verbose, log_format, progress):
    """greenfde: third-order functional differential equation BVP solver."""
    # Logging: default WARNING, -v/--verbose -> INFO, --debug -> DEBUG
    log_level = "DEBUG" if debug else ("INFO" if verbose else "WARNING")
    setup_logging(log_level, log_format)
    ctx.ensure_object(dict)
    ctx.obj["progress"] = progress


@main.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("-o", "--output", default=None, help="Write the solution CSV to this path")
@click.option("--json", "json_path", default=None, help="Write the JSON report to this path")
@click.option("--N", "n", type=int, default=None, help="Override the number of grid intervals")
@click.option("--tol", type=float, default=None, help="Override the stopping tolerance")
@click.option("--max-iter", type=int, default=None, help="Override the iteration budget")
@click.option("--M", "m", type=float, default=None, help="Override the bound M used by --check")
@click.option(
    "--check/--no-check",
    default=False,
    help="Verify the existence hypotheses first (needs M) and record the result",
)
def solve(config_path, output, json_path, n, tol, max_iter, m, check):
    """Solve one problem on one grid."""
    cfg = _load(config_path, n=n, tol=tol, max_iter=max_iter, M=m)
    table = GreenTable(cfg.spec)
    hypotheses = None
    if check:
        if cfg.M is None:
            raise ConfigError("--check needs M (config key 'M' or --M)", path=config_path)
        hypotheses = check_conditions(cfg.spec, cfg.M, cfg.samples, table=table).passed

    grid = make_grid(cfg.spec.a, cfg.n)
    try:
        report = _solve(cfg.spec, grid, cfg.tol, cfg.max_iter, table=table)
    except DivergenceError as e:
        if json_path and e.report is not None:
            write_text(json_path, to_json(e.report.to_dict()))
        raise
    report.hypotheses = hypotheses

    if output:
        write_text(output, solution_csv(report))
        if json_path is None:
            json_path = os.path.splitext(output)[0] + ".json"
    if json_path:
        write_text(json_path, to_json(report.to_dict()))
    _print_solve_summary(report)
    sys.exit(EXIT_OK if report.converged else EXIT_NUMERICAL)


@main.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--M", "m", type=float, default=None, help="Candidate bound for |f| on the domain")
@click.option("--samples", type=int, default=None, help="Lattice points per axis (>= 8)")
@click.option("--json", "json_path", default=None, help="Also write the JSON report to this path")
def check(config_path, m, samples, json_path):
    """Check the existence/uniqueness hypotheses on a sampled domain."""
    cfg = _load(config_path, M=m, samples=samples)
    if cfg.M is None:
        raise ConfigError("M is required (config key 'M' or --M)", path=config_path)
    report = check_conditions(cfg.spec, cfg.M, cfg.samples)
    _print_condition_report(report)
    text = to_json(report.to_dict())
    click.echo(text, nl=False)
    if json_path:
        write_text(json_path, text)
    sys.exit(EXIT_OK if report.passed else EXIT_NUMERICAL)


@main.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--grids", required=True, help="Comma-separated grid sizes, e.g. 50,100,200")
@click.option("-o", "--output", default=None, help="Write the CSV here instead of stdout")
@click.option("--json", "json_path", default=None, help="Write the JSON report to this path")
@click.option("--tol", type=float, default=None, help="Override the stopping tolerance")
@click.option("--max-iter", type=int, default=None, help="Override the iteration budget")
@click.pass_context
def study(ctx, config_path, grids, output, json_path, tol, max_iter):
    """Grid-refinement study: N, h2, K, error, order."""
    ns = parse_grids(grids)
    cfg = _load(config_path, tol=tol, max_iter=max_iter)
    table = GreenTable(cfg.spec)
    q = m0 = None
    if cfg.M is not None:
        cond = check_conditions(cfg.spec, cfg.M, cfg.samples, table=table)
        q, m0 = cond.q, cond.M0
    with _progress(ctx) as progress:
        report = convergence_study(
            cfg.spec, ns, cfg.tol, cfg.max_iter, q=q, m0=m0, progress=progress
        )
    text = study_csv(report)
    if output:
        write_text(output, text)
        _print_study(report)
    else:
        click.echo(text, nl=False)
    if json_path:
        write_text(json_path, to_json(report.to_dict()))
    sys.exit(EXIT_OK if report.all_converged else EXIT_NUMERICAL)


@main.command()
@click.option(
    "-o",
    "--output",
    "out_dir",
    default="reproduce-out",
    show_default=True,
    help="Directory for tables, reports and the summary",
)
@click.pass_context
def reproduce(ctx, out_dir):
    """Run the bundled examples and compare with the reference values."""
    with _progress(ctx) as progress:
        outcomes = _reproduce(out_dir, progress=progress)
    _print_reproduce_summary(outcomes)
    click.echo(f"Wrote results to {out_dir}")
    sys.exit(EXIT_OK if all(o.passed for o in outcomes) else EXIT_NUMERICAL)


@main.command()
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("-o", "--output", default=None, help="Write the CSV here instead of stdout")
@click.option("--N", "n", type=int, default=None, help="Override the number of grid intervals")
@click.option("--delay", is_flag=True, default=False, help="Rows at xi_i = phi(t_i) instead of t_i")
def green(config_path, output, n, delay):
    """Dump the Green function matrix G(t_i, s_j) on the grid."""
    cfg = _load(config_path, n=n)
    grid = make_grid(cfg.spec.a, cfg.n)
    xi = delay_points(cfg.spec, grid)
    kernels = GreenTable(cfg.spec).grid_kernels(grid, xi)
    points, matrix = (xi, kernels.delay) if delay else (grid.nodes, kernels.nodes)
    text = kernel_csv(points, grid.nodes, matrix)
    if output:
        write_text(output, text)
    else:
        click.echo(text, nl=False)


if __name__ == "__main__":
    main()
