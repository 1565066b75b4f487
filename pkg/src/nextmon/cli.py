"""Command line interface: run, demo, replay, serve."""

from __future__ import annotations

import sys

import click

from . import harness
from .features import ConfigurationError, InputError
from .harness import ConfigError
from .thermal import SimulationFault, WeatherError

EXIT_CONFIG = 2
EXIT_RUNTIME = 1


def _fail(exc: Exception) -> "click.exceptions.Exit":
    config_errors = (ConfigError, ConfigurationError, WeatherError)
    click.echo(f"error: {exc}", err=True)
    return click.exceptions.Exit(EXIT_CONFIG if isinstance(exc, config_errors) else EXIT_RUNTIME)


@click.group()
def main():
    """Multi-timescale predictions for a simulated heating system."""


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--output-dir", default=None, help="Override the config's output directory.")
@click.option("--steps", type=int, default=None, help="Override the number of steps.")
def run(config_path, output_dir, steps):
    """Run the batch experiment described by CONFIG_PATH (YAML)."""
    try:
        config = harness.load_config(config_path)
        if output_dir is not None or steps is not None:
            from dataclasses import replace

            overrides = {}
            if output_dir is not None:
                overrides["output_dir"] = output_dir
            if steps is not None:
                overrides["steps"] = steps
            config = replace(config, **overrides)
        metrics = harness.run_experiment(config)
    except (ConfigError, ConfigurationError, WeatherError, InputError, SimulationFault, OSError) as exc:
        raise _fail(exc)
    click.echo(f"wrote artifacts to {config.output_dir}")
    for label, entry in metrics["horizons"].items():
        click.echo(
            f"  {label}: rmse pre/post burn-in = "
            f"{entry['rmse_pre_burn_in']} / {entry['rmse_post_burn_in']}"
        )


@main.group()
def demo():
    """Built-in demonstration runs."""


@demo.command()
@click.option("--output-dir", default="runs/watertank", show_default=True)
@click.option("--steps", type=int, default=9000, show_default=True)
def watertank(output_dir, steps):
    """Two-horizon prediction of an insulated water tank heating cycle."""
    try:
        metrics = harness.demo_watertank(output_dir, steps)
    except (ConfigError, ConfigurationError, OSError) as exc:
        raise _fail(exc)
    click.echo(f"wrote artifacts to {output_dir}")
    click.echo(f"burn-in marker at {metrics['burn_in_steps']} steps")


@main.command()
@click.argument("run_csv", type=click.Path(exists=True, dir_okay=False))
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
def replay(run_csv, config_path):
    """Re-run a fresh learner over RUN_CSV and verify recorded predictions."""
    try:
        config = harness.load_config(config_path)
        result = harness.replay(run_csv, config)
    except (ConfigError, ConfigurationError, WeatherError, InputError, OSError, KeyError) as exc:
        raise _fail(exc)
    click.echo(f"replayed {result['rows']} rows, {result['mismatches']} mismatches")
    if result["mismatches"]:
        sys.exit(EXIT_RUNTIME)


@main.command()
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--bind", default="127.0.0.1:8000", show_default=True, help="host:port to listen on.")
@click.option("--speed", type=int, default=60, show_default=True, help="Initial playback speed.")
@click.option("--assets", default=None, help="Directory with built dashboard assets.")
def serve(config_path, bind, speed, assets):
    """Serve the live simulation and operator dashboard."""
    from . import service as service_mod

    try:
        config = harness.load_config(config_path)
        service_mod.serve(config, bind=bind, speed=speed, assets_dir=assets)
    except (ConfigError, ConfigurationError, WeatherError, service_mod.CommandError) as exc:
        raise _fail(exc)
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


if __name__ == "__main__":
    main()
