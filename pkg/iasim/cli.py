"""iasim CLI using Typer."""

import logging
from contextlib import nullcontext
from pathlib import Path
from typing import Optional

import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from .allocator import allocate, evaluate_modes
from .config import config
from .models import AllocationScheme, McMode
from .netmodel import InfeasibleNetwork, max_feasible_mode
from .sweep import (
    ConfigError,
    KeyMismatch,
    compare_report,
    load_config,
    read_csv,
    rows_to_csv_text,
    run_sweep,
    write_csv,
)

app = typer.Typer(help="Interference alignment simulator with limited feedback")
console = Console()
err_console = Console(stderr=True)

EXIT_CONFIG = 1
EXIT_THRESHOLD = 2
EXIT_INFEASIBLE = 3

# Import config functions directly
from .cli_config import env, show, validate  # noqa: E402


def _setup_logging(level: Optional[str]) -> None:
    logging.basicConfig(
        level=(level or config.log_level).upper(),
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


@app.command()
def config_show():
    """Show current iasim configuration."""
    show()


@app.command()
def config_validate():
    """Validate current configuration."""
    validate()


@app.command()
def config_env():
    """Show environment variables recognised by iasim."""
    env()


@app.command()
def sweep(
    config_path: Path = typer.Option(..., "--config", "-c", help="Sweep configuration file"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output CSV (defaults to the config's output)"),
    trials: Optional[int] = typer.Option(None, "--trials", "-n", help="Override Monte Carlo trials"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the base seed"),
    mc_mode: Optional[McMode] = typer.Option(None, "--mc-mode", help="Monte Carlo feedback model"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="Logging level"),
):
    """Run a sweep and write one CSV row per grid point."""
    _setup_logging(log_level)
    try:
        cfg = load_config(config_path)
        overrides = {
            key: value
            for key, value in (("trials", trials), ("seed", seed), ("mc_mode", mc_mode))
            if value is not None
        }
        if overrides:
            cfg = cfg.model_validate({**cfg.model_dump(), **overrides})

        with console.status(f"Running sweep {cfg.scenario_id}...") if out or cfg.output else nullcontext():
            rows = run_sweep(cfg)

        target = out or (Path(cfg.output) if cfg.output else None)
        if target is None:
            typer.echo(rows_to_csv_text(rows), nl=False)
        else:
            write_csv(rows, target)
            console.print(f"✅ Wrote {len(rows)} rows for scenario '{cfg.scenario_id}'")
            console.print(f"📁 Output written to: {target}")

        failed = [r for r in rows if r.error]
        for r in failed:
            err_console.print(f"❌ Infeasible at {r.snr_db:g} dB, B={r.B_total}, {r.scheme}: {r.error}")
        if failed:
            raise typer.Exit(EXIT_INFEASIBLE)

    except ConfigError as e:
        console.print(f"❌ Configuration error: {e}")
        raise typer.Exit(EXIT_CONFIG)
    except InfeasibleNetwork as e:
        console.print(f"❌ Infeasible scenario: {e}")
        raise typer.Exit(EXIT_INFEASIBLE)
    except typer.Exit:
        raise
    except Exception as e:
        console.print(f"❌ Unexpected error: {e}")
        raise typer.Exit(1)


@app.command()
def compare(
    theory_csv: Path = typer.Argument(..., help="Reference CSV (theory column)"),
    mc_csv: Path = typer.Argument(..., help="CSV to check (Monte Carlo column)"),
    threshold: Optional[float] = typer.Option(None, "--threshold", "-t", help="Maximum relative deviation in percent"),
):
    """Compare two sweep results row by row."""
    try:
        summary = compare_report(read_csv(theory_csv), read_csv(mc_csv), threshold)
    except (ConfigError, KeyMismatch) as e:
        console.print(f"❌ Cannot compare: {e}")
        raise typer.Exit(EXIT_CONFIG)
    except OSError as e:
        console.print(f"❌ Cannot read input: {e}")
        raise typer.Exit(EXIT_CONFIG)

    table = Table(title="Relative Deviation by Scheme")
    table.add_column("Scheme", style="cyan")
    table.add_column("Rows", justify="right")
    table.add_column("Max %", justify="right", style="magenta")
    table.add_column("Mean %", justify="right", style="green")
    for scheme, dev in sorted(summary.per_scheme.items()):
        table.add_row(scheme, str(dev.count), f"{100 * dev.max_rel:.3f}", f"{100 * dev.mean_rel:.3f}")
    console.print(table)

    if summary.exceeded:
        console.print(
            f"❌ Maximum deviation {100 * summary.max_rel:.3f}% exceeds {summary.threshold_pct:g}%"
        )
        raise typer.Exit(EXIT_THRESHOLD)
    console.print(f"✅ All deviations within {summary.threshold_pct:g}%")


@app.command()
def modes(
    config_path: Path = typer.Option(..., "--config", "-c", help="Sweep configuration file"),
    snr_db: float = typer.Option(10.0, "--snr", help="SNR in dB"),
    scheme: AllocationScheme = typer.Option(AllocationScheme.GREEDY, "--scheme", help="Allocation policy"),
):
    """Show the sum rate of every feasible symmetric mode."""
    try:
        cfg = load_config(config_path)
        scenario = cfg.scenario(snr_db)
        d_max = max_feasible_mode(scenario)
        candidates = evaluate_modes(scenario, lambda streams: allocate(scheme, scenario, streams))
    except ConfigError as e:
        console.print(f"❌ Configuration error: {e}")
        raise typer.Exit(EXIT_CONFIG)
    except InfeasibleNetwork as e:
        console.print(f"❌ Infeasible scenario: {e}")
        raise typer.Exit(EXIT_INFEASIBLE)

    best = max(candidates, key=lambda c: (c.sum_rate, -c.d))
    table = Table(title=f"{cfg.scenario_id} at {snr_db:g} dB ({scheme.value}, d_max={d_max})")
    table.add_column("d", justify="right", style="cyan")
    table.add_column("Sum rate (b/s/Hz)", justify="right", style="green")
    table.add_column("Split (receiver 0)")
    for cand in candidates:
        marker = " ✅" if cand.d == best.d else ""
        table.add_row(str(cand.d) + marker, f"{cand.sum_rate:.4f}", str(list(cand.split.bits[0])))
    console.print(table)


def main():
    """Main entry point."""
    app()


if __name__ == "__main__":
    main()
