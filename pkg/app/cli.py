import json
import logging
import sys
import time
from pathlib import Path
from typing import Callable, Optional

import click

from app import commands, config
from app.markov.errors import MarkovError, ModelFileError, ModelParseError
from app.markov.loader import dump_model, read_model_file
from app.markov.scalar import Arithmetic
from app.reports import (
    CROWDS_CSV_COLUMNS,
    REPORT_CSV_COLUMNS,
    ZEROCONF_CSV_COLUMNS,
    crowds_csv_row,
    render_table,
    report_csv_rows,
    write_csv,
    zeroconf_csv_row,
)
from app.schemas import RunReport


def _configure_logging(verbose: int) -> None:
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = getattr(logging, config.LOG_LEVEL, logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def _mode(exact: Optional[bool]) -> Arithmetic:
    if exact is None:
        return config.resolve_mode(None)
    return Arithmetic.EXACT if exact else Arithmetic.FLOAT


def _fail(exc: MarkovError) -> None:
    click.echo(json.dumps(exc.to_dict()), err=True)
    sys.exit(exc.exit_code)


def _save(report: RunReport) -> None:
    from app.database import Base, SessionLocal, engine

    Base.metadata.create_all(bind=engine)
    db = SessionLocal()
    try:
        record = commands.save_report(db, report)
    finally:
        db.close()
    click.echo(f"saved as run #{record.run_id}", err=True)


def _emit(report: RunReport, as_json: bool, as_csv: bool) -> None:
    if as_json:
        click.echo(report.model_dump_json(indent=2))
    elif as_csv:
        write_csv(report_csv_rows(report), REPORT_CSV_COLUMNS, sys.stdout)
    else:
        click.echo(render_table(report))


def _run(build: Callable[[], RunReport], as_json: bool, as_csv: bool, save: bool, timing: bool) -> None:
    started = time.perf_counter()
    try:
        report = build()
    except MarkovError as exc:
        _fail(exc)
        return
    if timing:
        report.timing_seconds = time.perf_counter() - started
    _emit(report, as_json, as_csv)
    if save:
        _save(report)


def output_options(func):
    func = click.option("--timing", is_flag=True, help="Include wall-clock time in the report.")(func)
    func = click.option("--save", is_flag=True, help="Store the report in the run history.")(func)
    func = click.option("--csv", "as_csv", is_flag=True, help="Emit CSV.")(func)
    func = click.option("--json", "as_json", is_flag=True, help="Emit the report as JSON.")(func)
    func = click.option("--exact/--float", "exact", default=None,
                        help="Arithmetic mode (default from MARKOV_ARITHMETIC).")(func)
    return func


def simulation_options(func):
    func = click.option("--max-steps", type=click.IntRange(min=1), default=None)(func)
    func = click.option("--seed", type=int, default=None)(func)
    func = click.option("--samples", type=click.IntRange(min=1), default=None,
                        help="Monte Carlo samples; omit to skip simulation.")(func)
    return func


def _model_file(path: str):
    try:
        return read_model_file(path)
    except MarkovError as exc:
        _fail(exc)


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for info, -vv for debug logging.")
def cli(verbose):
    """Exact analysis of finite Markov (reward) chains."""
    _configure_logging(verbose)
    try:
        config.check_settings()
    except MarkovError as exc:
        _fail(exc)


@cli.command("validate")
@click.argument("model_file", type=click.Path(dir_okay=False))
@output_options
def validate(model_file, exact, as_json, as_csv, save, timing):
    """Check a JSON model file and report per-row sums on failure."""
    model = _model_file(model_file)
    report, error = commands.validate_command(model, _mode(exact))
    _emit(report, as_json, as_csv)
    if save:
        _save(report)
    if error is not None:
        _fail(error)


@cli.command("solve")
@click.argument("model_file", type=click.Path(dir_okay=False))
@click.option("--until", "until", required=True, help="PHI=>PSI, each ALL or comma-separated labels.")
@click.option("--start", required=True)
@click.option("--cost", default=None, help="Target set for the expected cost.")
@click.option("--hitting", default=None, help="Target set for the expected hitting time.")
@output_options
def solve(model_file, until, start, cost, hitting, exact, as_json, as_csv, save, timing):
    """Until probability, zero and almost-sure verdicts, expected cost."""
    model = _model_file(model_file)
    _run(
        lambda: commands.solve_command(model, until, start, _mode(exact), cost=cost, hitting=hitting),
        as_json, as_csv, save, timing,
    )


@cli.command("zeroconf")
@click.option("--preset", default=None, help="typical (alias paper-typical)")
@click.option("--probes", type=int, default=None, help="N: probe rounds are 0..N.")
@click.option("--p", "p", default=None, help="Probe or answer loss probability.")
@click.option("--q", "q", default=None, help="Collision probability.")
@click.option("--hosts", type=int, default=None, help="Sets q = hosts/65024.")
@click.option("--r", "r", default=None, help="Cost per probe round.")
@click.option("--E", "E", default=None, help="Cost of an undetected collision.")
@click.option("--sweep", default=None, help="e.g. 'p=1/100,1/10;probes=1,2,3' (CSV rows).")
@simulation_options
@output_options
def zeroconf_cmd(preset, probes, p, q, hosts, r, E, sweep, samples, seed, max_steps,
                 exact, as_json, as_csv, save, timing):
    """ZeroConf address allocation: closed forms, solver and audit flags."""
    params = dict(preset=preset, probes=probes, p=p, q=q, hosts=hosts, r=r, E=E)
    if sweep is not None:
        if save:
            raise click.UsageError("--save is not available with --sweep")
        try:
            reports = commands.zeroconf_sweep(sweep, _mode(exact), **params)
        except MarkovError as exc:
            _fail(exc)
            return
        if as_json:
            click.echo(json.dumps([zeroconf_csv_row(report) for report in reports], indent=2))
        else:
            write_csv((zeroconf_csv_row(report) for report in reports), ZEROCONF_CSV_COLUMNS, sys.stdout)
        return
    _run(
        lambda: commands.zeroconf_command(_mode(exact), samples=samples, seed=seed, max_steps=max_steps, **params),
        as_json, as_csv, save, timing,
    )


def _read_init(path: Optional[str]):
    if path is None:
        return None
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ModelFileError(f"cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ModelParseError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ModelParseError(f"{path}: expected an object mapping jondo labels to weights")
    return data


@cli.command("crowds")
@click.option("--preset", default=None, help="three-jondo (alias fig3)")
@click.option("--jondos", type=int, default=None)
@click.option("--colls", type=int, default=None)
@click.option("--pf", default=None, help="Forwarding probability p_f.")
@click.option("--init", "init_file", type=click.Path(dir_okay=False), default=None,
              help="JSON object of initiator weights; uniform over honest jondos by default.")
@click.option("--sweep", default=None, help="e.g. 'jondos=5,10,20;pf=1/2,3/4' (CSV rows).")
@simulation_options
@output_options
def crowds_cmd(preset, jondos, colls, pf, init_file, sweep, samples, seed, max_steps,
               exact, as_json, as_csv, save, timing):
    """Crowds anonymity: hit probability, probable innocence, mutual information."""
    try:
        params = dict(preset=preset, jondos=jondos, colls=colls, pf=pf, init=_read_init(init_file))
        if sweep is not None:
            if save:
                raise click.UsageError("--save is not available with --sweep")
            reports = commands.crowds_sweep(sweep, _mode(exact), **params)
            if as_json:
                click.echo(json.dumps([crowds_csv_row(report) for report in reports], indent=2))
            else:
                write_csv((crowds_csv_row(report) for report in reports), CROWDS_CSV_COLUMNS, sys.stdout)
            return
    except MarkovError as exc:
        _fail(exc)
        return
    _run(
        lambda: commands.crowds_command(_mode(exact), samples=samples, seed=seed, max_steps=max_steps, **params),
        as_json, as_csv, save, timing,
    )


@cli.command("simulate")
@click.argument("model_file", type=click.Path(dir_okay=False), required=False)
@click.option("--preset", default=None, help="zeroconf:typical, crowds:three-jondo (aliases zeroconf:paper-typical, crowds:fig3)")
@click.option("--start", default=None)
@click.option("--event", required=True, help="until:PHI=>PSI or cost:PHI")
@click.option("--seed", type=int, default=None)
@click.option("--samples", type=click.IntRange(min=1), default=None)
@click.option("--max-steps", type=click.IntRange(min=1), default=None)
@output_options
def simulate(model_file, preset, start, event, seed, samples, max_steps, exact, as_json, as_csv, save, timing):
    """Seeded Monte Carlo estimate next to the exact solver value."""
    model = _model_file(model_file) if model_file is not None else None
    _run(
        lambda: commands.simulate_command(
            event, _mode(exact), model=model, preset=preset, start=start,
            seed=seed, samples=samples, max_steps=max_steps,
        ),
        as_json, as_csv, save, timing,
    )


@cli.command("export")
@click.argument("preset")
@click.option("-o", "--output", type=click.Path(dir_okay=False), default=None)
@click.option("--exact/--float", "exact", default=None)
def export(preset, output, exact):
    """Write a bundled preset as a JSON model file."""
    try:
        chain, rchain, _ = commands.preset_chain(preset, _mode(exact))
    except MarkovError as exc:
        _fail(exc)
        return
    text = json.dumps(dump_model(chain, rchain), indent=2)
    if output is None:
        click.echo(text)
    else:
        Path(output).write_text(text + "\n", encoding="utf-8")


@cli.command("history")
@click.option("--command", "command_name", default=None)
@click.option("--limit", type=click.IntRange(min=1), default=20)
@click.option("--json", "as_json", is_flag=True)
def history(command_name, limit, as_json):
    """List saved run reports, newest first."""
    from app.database import Base, SessionLocal, engine

    Base.metadata.create_all(bind=engine)
    db = SessionLocal()
    try:
        records = [commands.record_out(r) for r in commands.list_runs(db, command_name, limit)]
    finally:
        db.close()
    if as_json:
        click.echo(json.dumps([r.model_dump(mode="json") for r in records], indent=2))
        return
    for record in records:
        click.echo(f"#{record.run_id}  {record.command:<9} {record.mode:<6} {record.created_at or ''}")


@cli.command("serve")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP API with uvicorn."""
    import uvicorn

    uvicorn.run("app.main:app", host=host, port=port)


if __name__ == "__main__":
    cli()
