"""Click CLI commands for direct-image-lab."""

from __future__ import annotations

import json
import logging
import time
from pathlib import Path

import click
from rich.console import Console
from rich.markup import escape
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn
from rich.table import Table

from .config import FIXTURES_PATH, OUTPUT_FORMATS, PINNED_FIXTURES_PATH
from .errors import LabError

console = Console()


def _fmt_t(t) -> str:
    if t is None:
        return "-"
    return ", ".join(f"{x.real:.3g}{x.imag:+.3g}j" if x.imag else f"{x.real:.3g}" for x in t)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Enable debug logging")
def cli(verbose: bool) -> None:
    """Direct image lab: curvature checks for bundles of weighted Bergman spaces."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )


@cli.command()
@click.argument("config")
@click.option("--out", type=click.Path(path_type=Path), help="Write the report here")
@click.option(
    "--format", "fmt", type=click.Choice(OUTPUT_FORMATS), default=None,
    help="Report format (default: the config's output.format)",
)
@click.option("--quiet", "-q", is_flag=True, help="No progress bar or summary table")
def run(config: str, out: Path | None, fmt: str | None, quiet: bool) -> None:
    """Run a scenario: CONFIG is a config file or a built-in scenario id."""
    from .pipelines import run_scenario
    from .scenarios import resolve

    try:
        cfg = resolve(config)
    except LabError as e:
        console.print(f"[red]Invalid config:[/] {escape(str(e))}")
        raise SystemExit(2)

    started = time.perf_counter()
    try:
        if quiet or not cfg.checks:
            report = run_scenario(cfg)
        else:
            with Progress(
                SpinnerColumn(),
                TextColumn("[progress.description]{task.description}"),
                BarColumn(),
                MofNCompleteColumn(),
                TextColumn("[dim]{task.fields[check]}"),
                console=console,
                transient=True,
            ) as progress:
                task = progress.add_task(cfg.scenario_id, total=len(cfg.checks), check="")

                def on_check(check: str) -> None:
                    progress.update(task, check=check)
                    progress.advance(task)

                report = run_scenario(cfg, on_check=on_check)
    except LabError as e:
        console.print(f"[red]Scenario failed:[/] {escape(str(e))}")
        raise SystemExit(2)
    elapsed = time.perf_counter() - started

    fmt = fmt or cfg.output.get("format", "json")
    target = out or (Path(cfg.output["path"]) if cfg.output.get("path") else None)
    if target is not None:
        report.save(target, fmt)

    if not quiet:
        table = Table(title=f"{cfg.scenario_id} ({len(report.records)} records)")
        table.add_column("Check", style="cyan")
        table.add_column("t", style="white")
        table.add_column("Value", justify="right")
        table.add_column("Tol", justify="right", style="dim")
        table.add_column("", justify="center")
        table.add_column("Detail", style="dim")
        for r in report.records:
            icon = "[green]✓[/]" if r.passed else "[red]✗[/]"
            table.add_row(r.check, _fmt_t(r.t), f"{r.value:.6g}", f"{r.tolerance:.0e}", icon, r.detail)
        console.print(table)
        if report.passed:
            console.print(f"[green]All {len(report.records)} records pass[/] [dim]({elapsed:.1f}s)[/]")
        else:
            console.print(
                f"[red]{report.failed_count} of {len(report.records)} records fail[/] [dim]({elapsed:.1f}s)[/]"
            )
        if target is not None:
            console.print(f"[dim]Report: {target}[/]")

    if not report.passed:
        raise SystemExit(1)


@cli.command("list-scenarios")
def list_scenarios() -> None:
    """List the built-in scenarios."""
    from .scenarios import load_catalog

    catalog = load_catalog()
    table = Table(title=f"Scenarios ({len(catalog)})")
    table.add_column("ID", style="cyan")
    table.add_column("Description", style="white")
    table.add_column("Checks", style="dim")
    for sid, cfg in catalog.items():
        table.add_row(sid, escape(cfg.description), ", ".join(cfg.checks))
    console.print(table)


@cli.command("show-scenario")
@click.argument("scenario_id")
def show_scenario(scenario_id: str) -> None:
    """Print a built-in scenario config as JSON."""
    from .scenarios import load_catalog

    catalog = load_catalog()
    if scenario_id not in catalog:
        console.print(f"[red]Unknown scenario:[/] {scenario_id}")
        console.print(f"Available: {', '.join(catalog)}")
        raise SystemExit(2)
    click.echo(json.dumps(catalog[scenario_id].to_dict(), indent=2))


@cli.command()
@click.option(
    "--out", type=click.Path(path_type=Path), default=None,
    help=f"Fixtures file (default: {PINNED_FIXTURES_PATH})",
)
def pin(out: Path | None) -> None:
    """Re-measure the regression constants and save them."""
    from .pipelines import measure_fixtures
    from . import scenarios

    try:
        measured = measure_fixtures()
    except LabError as e:
        console.print(f"[red]Measurement failed:[/] {escape(str(e))}")
        raise SystemExit(2)

    shipped = scenarios.load_fixtures(FIXTURES_PATH)
    table = Table(title="Fixtures")
    table.add_column("Name", style="cyan")
    table.add_column("Measured", justify="right")
    table.add_column("Shipped", justify="right", style="dim")
    table.add_column("", justify="center")
    for name, fx in measured.items():
        ref = shipped.get(name)
        if ref is None:
            table.add_row(name, f"{fx.value:.12g}", "-", "")
            continue
        ok = abs(fx.value - ref.value) <= ref.tolerance * max(1.0, abs(ref.value))
        table.add_row(name, f"{fx.value:.12g}", f"{ref.value:.12g}", "[green]✓[/]" if ok else "[red]✗[/]")
    console.print(table)

    target = out or scenarios.PINNED_FIXTURES_PATH
    scenarios.save_fixtures(measured, target)
    console.print(f"[green]Fixtures saved:[/] {len(measured)} constants → {target}")
