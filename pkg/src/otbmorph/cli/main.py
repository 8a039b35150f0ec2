"""
Main CLI entry point for otb-morph using Click.

Usage:
    otb-morph morph FACE_A LANDMARKS_A FACE_B LANDMARKS_B --alpha 0.5 -o OUT.pgm
    otb-morph [--config FILE] [--seed N] [--out DIR] [--jobs N] simulate
    otb-morph [--config FILE] [--seed N] [--out DIR] [--jobs N] attack
    otb-morph [--config FILE] [--out DIR] evaluate [--inputs DIR]
    otb-morph [--config FILE] [--out DIR] demo
    otb-morph [--config FILE] [--out DIR] issue --client ID --count N

Every failure exits with status 1 and prints one line to stderr:
``error<TAB><code><TAB><message>``.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Optional

import click

from otbmorph import __version__, result_manifest
from otbmorph.errors import error_code
from otbmorph.morph.engine import MorphParams, morph as morph_faces
from otbmorph.morph.warp import WarpDiagnostics
from otbmorph.parsers.config_parser import ConfigParser, ExperimentConfig
from otbmorph.parsers.image_parser import ImageParser
from otbmorph.parsers.landmark_parser import LandmarkParser
from otbmorph.tools.types import BorderPolicy
from otbmorph.workflow import Experiment, RunResult
from otbmorph.writers.image_writer import write_image


def setup_logging(verbose: bool = False, debug: bool = False) -> None:
    """Configure logging based on verbosity."""
    if debug:
        level = logging.DEBUG
    elif verbose:
        level = logging.INFO
    else:
        level = logging.WARNING

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


def error_line(code: str, message: str) -> str:
    """The single machine-parsable failure line."""
    flat = " ".join(str(message).replace("\t", " ").split())
    return f"error\t{code}\t{flat}"


class Config:
    """Shared configuration for CLI commands."""

    def __init__(self) -> None:
        self.verbose = False
        self.debug = False
        self.config_path: Optional[str] = None
        self.seed: Optional[int] = None
        self.out: Optional[str] = None
        self.jobs = 1

    def experiment_config(self) -> ExperimentConfig:
        """The config file (or defaults) with --seed and --out applied."""
        base = ConfigParser().parse(self.config_path) if self.config_path else ExperimentConfig()
        return base.with_overrides(master_seed=self.seed, output=self.out)

    def experiment(self) -> Experiment:
        return Experiment(self.experiment_config(), jobs=self.jobs)


pass_config = click.make_pass_decorator(Config, ensure=True)


@click.group()
@click.option("--config", "config_path", type=click.Path(), help="Experiment config (YAML)")
@click.option("--seed", type=click.IntRange(min=0), help="Override the master seed")
@click.option("--out", type=click.Path(file_okay=False), help="Override the output directory")
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True, help="Worker processes for attacks")
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
@click.option("--debug", is_flag=True, help="Enable debug output")
@click.version_option(version=__version__, prog_name="otb-morph")
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: Optional[str],
    seed: Optional[int],
    out: Optional[str],
    jobs: int,
    verbose: bool,
    debug: bool,
) -> None:
    """Simulator for one-time morph-based cancelable face templates."""
    ctx.ensure_object(Config)
    ctx.obj.verbose = verbose
    ctx.obj.debug = debug
    ctx.obj.config_path = config_path
    ctx.obj.seed = seed
    ctx.obj.out = out
    ctx.obj.jobs = jobs
    setup_logging(verbose=verbose, debug=debug)


def _finish(experiment: Experiment, result: RunResult) -> None:
    """Write the run manifest, print the summary and fail on errors."""
    experiment.write_manifest(result)
    for warning in result.warnings:
        click.echo(click.style(f"Warning: {warning}", fg="yellow"), err=True)
    click.echo(result.summary())
    if result.has_errors:
        click.echo(click.style(f"{result.command.capitalize()} errors:", fg="red"), err=True)
        for error in result.errors:
            click.echo(f"  - {error}", err=True)
        click.echo(error_line("run-failed", f"{len(result.errors)} error(s); see run-manifest.json"), err=True)
        sys.exit(1)


@cli.command()
@click.argument("face_a", type=click.Path())
@click.argument("landmarks_a", type=click.Path())
@click.argument("face_b", type=click.Path())
@click.argument("landmarks_b", type=click.Path())
@click.option("--alpha", type=float, default=0.5, show_default=True, help="Weight of face B")
@click.option(
    "--border-policy",
    type=click.Choice([p.value for p in BorderPolicy]),
    default=BorderPolicy.IDENTITY.value,
    show_default=True,
    help="Fill for pixels outside every triangle",
)
@click.option("--output", "-o", required=True, type=click.Path(dir_okay=False), help="Output PGM/PPM file")
@pass_config
def morph(
    config: Config,
    face_a: str,
    landmarks_a: str,
    face_b: str,
    landmarks_b: str,
    alpha: float,
    border_policy: str,
    output: str,
) -> None:
    """Morph two faces and print warp diagnostics.

    Example:
        otb-morph morph a.pgm a.lm b.pgm b.lm --alpha 0.5 -o morph.pgm
    """
    logger = logging.getLogger("morph")
    images, landmarks = ImageParser(), LandmarkParser()
    a, b = images.parse(face_a), images.parse(face_b)
    la, lb = landmarks.parse(landmarks_a), landmarks.parse(landmarks_b)
    params = MorphParams(alpha=alpha, border_policy=BorderPolicy(border_policy))
    diagnostics = WarpDiagnostics()
    logger.info("Morphing %s and %s at alpha=%s", face_a, face_b, alpha)
    result = morph_faces(a, la, b, lb, params, diagnostics)
    path = write_image(result, output)

    click.echo(f"Morph written: {path}")
    for name, value in diagnostics.as_dict().items():
        click.echo(f"  {name}: {value}")
    result_manifest.write_manifest(
        path.parent,
        "morph",
        "ok",
        params={"alpha": alpha, "border_policy": border_policy},
        artifacts={"image": path.name},
        info=diagnostics.as_dict(),
    )


@cli.command()
@pass_config
def simulate(config: Config) -> None:
    """Enroll clients and run verification sessions; writes JSON-lines transcripts.

    Example:
        otb-morph --config configs/default.yaml simulate
    """
    experiment = config.experiment()
    _finish(experiment, experiment.simulate())


@cli.command()
@pass_config
def attack(config: Config) -> None:
    """Run hill-climbing attacks per scenario and seed; writes trajectory CSVs.

    Example:
        otb-morph --config configs/default.yaml --jobs 4 attack
    """
    experiment = config.experiment()
    _finish(experiment, experiment.attack())


@cli.command()
@click.option("--inputs", type=click.Path(file_okay=False), help="Directory holding scores/ and traces/ (default: --out)")
@pass_config
def evaluate(config: Config, inputs: Optional[str]) -> None:
    """Build the report from stored scores and traces.

    Example:
        otb-morph --config configs/default.yaml evaluate
    """
    experiment = config.experiment()
    _finish(experiment, experiment.evaluate(inputs))


@cli.command()
@pass_config
def demo(config: Config) -> None:
    """Enrollment, rotation, replay and impostor storyline on one victim.

    Example:
        otb-morph --config configs/demo.yaml demo
    """
    experiment = config.experiment()
    _finish(experiment, experiment.demo())


@cli.command()
@click.option("--client", "client_id", required=True, help="Client receiving the pseudonyms")
@click.option("--count", type=click.IntRange(min=1), default=8, show_default=True, help="Pseudonym sets to issue")
@pass_config
def issue(config: Config, client_id: str, count: int) -> None:
    """Issue pseudonym sets and write their auxiliary data.

    Example:
        otb-morph --out runs/ads issue --client client-0 --count 4
    """
    experiment = config.experiment()
    _finish(experiment, experiment.issue(client_id, count))


def app(args: Optional[list[str]] = None) -> int:
    """
    Main application entry point (for testing).

    Args:
        args: Command-line arguments (defaults to sys.argv[1:])

    Returns:
        Exit code (0 for success)
    """
    try:
        code = cli(args, standalone_mode=False)
        return code if isinstance(code, int) else 0
    except click.UsageError as e:
        click.echo(error_line("usage", e.format_message()), err=True)
        return 1
    except click.ClickException as e:
        click.echo(error_line("usage", e.format_message()), err=True)
        return 1
    except click.Abort:
        click.echo(error_line("aborted", "interrupted"), err=True)
        return 1
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    except Exception as e:
        logging.getLogger(__name__).debug("Command failed", exc_info=True)
        click.echo(error_line(error_code(e), str(e)), err=True)
        return 1


def main() -> None:
    """CLI entry point."""
    sys.exit(app())


if __name__ == "__main__":
    main()
