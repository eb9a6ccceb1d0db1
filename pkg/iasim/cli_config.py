#!/usr/bin/env python3
"""
Configuration management CLI for iasim.
"""

import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from iasim.config import config

console = Console()
app = typer.Typer(help="iasim configuration management")

ENV_VARS = [
    ("IASIM_EXHAUSTIVE_CAP", "10000000", "Maximum K^B candidates for exhaustive allocation"),
    ("IASIM_JOINT_MAX_ITER", "20", "Rounds of the joint allocation/mode loop"),
    ("IASIM_RVQ_MAX_BITS", "16", "Largest explicit RVQ codebook, in bits"),
    ("IASIM_IA_MAX_ITER", "500", "Iterations of the IA leakage minimizer"),
    ("IASIM_IA_TOL", "1e-10", "Relative leakage change that stops the IA solver"),
    ("IASIM_IA_RESTARTS", "3", "Random restarts of the IA solver"),
    ("IASIM_MERGE_RTOL", "1e-9", "Relative gap under which Erlang scales are merged"),
    ("IASIM_PERTURB_RTOL", "1e-6", "Relative gap enforced between near-equal scales"),
    ("IASIM_COMPARE_THRESHOLD_PCT", "5.0", "Default deviation threshold for compare"),
    ("IASIM_MAX_WORKERS", "4", "Threads used to evaluate sweep points"),
    ("IASIM_LOG_LEVEL", "WARNING", "Logging level (DEBUG, INFO, WARNING, ERROR)"),
]


@app.command()
def show():
    """Show current iasim configuration."""
    console.print(Panel.fit(
        "[bold blue]iasim Configuration[/bold blue]",
        border_style="blue"
    ))

    table = Table(title="Simulator Settings")
    table.add_column("Setting", style="cyan")
    table.add_column("Value", style="green")

    table.add_row("Exhaustive Cap", f"{config.exhaustive_cap:,} candidates")
    table.add_row("Joint Max Rounds", str(config.joint_max_iter))
    table.add_row("RVQ Max Bits", str(config.rvq_max_bits))
    table.add_row("IA Max Iterations", str(config.ia_max_iter))
    table.add_row("IA Tolerance", f"{config.ia_tol:g}")
    table.add_row("IA Restarts", str(config.ia_restarts))
    table.add_row("Merge Tolerance", f"{config.merge_rtol:g}")
    table.add_row("Perturb Tolerance", f"{config.perturb_rtol:g}")
    table.add_row("Compare Threshold", f"{config.compare_threshold_pct:g}%")
    table.add_row("Max Workers", str(config.max_workers))
    table.add_row("Log Level", config.log_level)

    console.print(table)
    console.print()


@app.command()
def validate():
    """Validate current configuration."""
    console.print("🔍 Validating iasim configuration...")

    if config.validate():
        console.print("✅ Configuration is valid!")
    else:
        console.print("❌ Configuration has errors. Please fix them and try again.")
        raise typer.Exit(1)


@app.command()
def env():
    """Show environment variables recognised by iasim."""
    table = Table(title="Environment Variables")
    table.add_column("Variable", style="cyan")
    table.add_column("Default", style="yellow")
    table.add_column("Description", style="green")

    for name, default, description in ENV_VARS:
        table.add_row(name, default, description)

    console.print(table)


if __name__ == "__main__":
    app()
