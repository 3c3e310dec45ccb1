"""faae command-line interface.

Exit codes: 0 success, 1 usage error, 2 data/config/IO error,
3 numerical failure (including a failed gradient check).
"""
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import click
import typer
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from src.config.dependencies import get_container
from src.config.settings import Settings
from src.core.runner import ToolkitRunner
from src.core.verification import OP_KINDS
from src.models.outputs import GradCheckResult, MetricReport, RunSummary
from src.utils.errors import DomainError, FaaeError, NumericalError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

app = typer.Typer(name="faae", help="Flipped-adversarial autoencoder toolkit", no_args_is_help=True)
console = Console()
err_console = Console(stderr=True)


def _runner() -> ToolkitRunner:
    return get_container().get(ToolkitRunner)


@app.command()
def train(
    config: Path = typer.Option(..., "--config", "-c", help="Run config file (key = value)"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
):
    """Train a model and write checkpoint, metrics and panels"""
    summary = _runner().train(config, out)
    _display_run(summary)


@app.command()
def reconstruct(
    ckpt: Path = typer.Option(..., "--ckpt", help="Checkpoint file"),
    input_dir: Path = typer.Option(..., "--in", help="Directory of P6 PPM images"),
    out: Path = typer.Option(..., "--out", "-o", help="Output directory"),
):
    """Write G(E(x)) for every image of a directory"""
    paths = _runner().reconstruct_directory(ckpt, input_dir, out)
    console.print(f"Reconstructed {len(paths)} images into {out}")


@app.command()
def generate(
    ckpt: Path = typer.Option(..., "--ckpt", help="Checkpoint file"),
    count: int = typer.Option(..., "--count", "-n", min=1, help="Number of samples"),
    out: Path = typer.Option(..., "--out", "-o", help="Output directory"),
    seed: int = typer.Option(0, "--seed", min=0, help="Seed of the prior draws"),
):
    """Sample G(z) with z from the unit-sphere prior"""
    paths = _runner().generate(ckpt, count, out, seed)
    console.print(f"Wrote {count} samples to {out} ({len(paths)} files)")


@app.command()
def morph(
    ckpt: Path = typer.Option(..., "--ckpt", help="Checkpoint file"),
    corners: Tuple[Path, Path, Path, Path] = typer.Option(..., "--corners", help="Four corner images"),
    grid: int = typer.Option(5, "--grid", min=2, help="Cells per side"),
    out: Path = typer.Option(..., "--out", "-o", help="Panel file"),
):
    """Morph panel over the latent codes of four corner images"""
    path = _runner().morph(ckpt, list(corners), grid, out)
    console.print(f"Wrote {grid}x{grid} morph panel to {path}")


@app.command("eval")
def evaluate(
    ckpt: Path = typer.Option(..., "--ckpt", help="Checkpoint file"),
    out: Path = typer.Option(..., "--out", "-o", help="Metrics CSV"),
    dataset: Optional[str] = typer.Option(None, "--dataset", help="Dataset kind or image directory"),
    count: Optional[int] = typer.Option(None, "--count", "-n", min=1, help="Samples to evaluate"),
):
    """Reconstruction, re-encoding, discriminator and coverage metrics"""
    report = _runner().evaluate(ckpt, out, dataset, count)
    _display_metrics(report)


@app.command()
def gradcheck(
    ops: Optional[str] = typer.Option(None, "--ops", help=f"Comma separated op kinds ({', '.join(OP_KINDS)})"),
    instances: Optional[int] = typer.Option(None, "--instances", min=1, help="Randomized instances per op"),
):
    """Finite-difference check of every differentiable op"""
    selected = [op.strip() for op in ops.split(",") if op.strip()] if ops else None
    unknown = [op for op in selected or [] if op not in OP_KINDS]
    if unknown:
        raise typer.BadParameter(f"unknown op kind(s): {', '.join(unknown)}", param_hint="--ops")

    results = _runner().gradcheck(selected, instances)
    _display_gradcheck(results)
    if not all(r.passed for r in results):
        raise typer.Exit(EXIT_NUMERICAL)


@app.command()
def status():
    """Show the effective application settings"""
    settings = get_container().get(Settings)

    status_table = Table(title="faae settings")
    status_table.add_column("Setting", style="cyan")
    status_table.add_column("Value", style="green")
    for name, value in settings.model_dump().items():
        status_table.add_row(name, str(value))
    console.print(status_table)


def _display_run(summary: RunSummary) -> None:
    text = f"Steps: {summary.steps}\nEpochs: {summary.epochs}\nCheckpoint: {summary.checkpoint_path}"
    if summary.final_epoch is not None:
        e = summary.final_epoch
        text += f"\n\nFinal epoch: adv_d={e.adv_d:.4f} adv_g={e.adv_g:.4f} distance={e.recon_or_reenc:.5f}"
    console.print(Panel(text, title="Training finished", border_style="green"))

    artifacts_table = Table(title="Artifacts")
    artifacts_table.add_column("File", style="cyan")
    for artifact in summary.artifacts:
        artifacts_table.add_row(artifact)
    console.print(artifacts_table)


def _display_metrics(report: MetricReport) -> None:
    table = Table(title="Evaluation")
    table.add_column("Metric", style="cyan")
    table.add_column("Value", style="green")
    for name, value in report.model_dump().items():
        table.add_row(name, "-" if value is None else f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(table)


def _display_gradcheck(results: list[GradCheckResult]) -> None:
    table = Table(title="Gradient check")
    table.add_column("Op", style="cyan")
    table.add_column("Instances")
    table.add_column("Max relative error")
    table.add_column("Result")
    for r in results:
        table.add_row(r.op, str(r.instances), f"{r.max_error:.3e}", "[green]pass" if r.passed else "[red]FAIL")
    console.print(table)


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code"""
    command = typer.main.get_command(app)
    try:
        result = command.main(args=argv, prog_name="faae", standalone_mode=False)
        return result if isinstance(result, int) else EXIT_OK
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show(file=sys.stderr)
        return EXIT_USAGE
    except click.exceptions.Abort:
        err_console.print("Aborted")
        return EXIT_USAGE
    except (NumericalError, DomainError) as e:
        err_console.print(f"[red]Numerical failure:[/red] {escape(str(e))}")
        return EXIT_NUMERICAL
    except (FaaeError, OSError) as e:
        err_console.print(f"[red]Error:[/red] {escape(str(e))}")
        return EXIT_DATA


def run() -> None:
    """Console-script entry point"""
    sys.exit(main(sys.argv[1:]))


if __name__ == "__main__":
    run()
