"""Command-line surface: covertsim run | replay | resources | list-scenarios.

Configs come from a JSON file and/or inline flags; flags override file
values. Exit codes: 0 on completion, 2 on config error, 3 when --assert is
passed and an acceptance threshold fails.
"""
from __future__ import annotations

import json
import sys

import click

from . import experiments as exp


def _load_config(config_path, scenario, seed, trials, params, adversary):
    data: dict = {}
    if config_path:
        with open(config_path) as fh:
            data = json.load(fh)
    if scenario:
        data["scenario"] = scenario
    if seed is not None:
        data["seed"] = seed
    if trials is not None:
        data["trials"] = trials
    if adversary:
        data["adversary"] = json.loads(adversary)
    if params:
        merged = dict(data.get("params", {}))
        for item in params:
            if "=" not in item:
                raise exp.ConfigError(f"--param expects key=value, got {item!r}")
            key, raw = item.split("=", 1)
            try:
                merged[key] = json.loads(raw)
            except json.JSONDecodeError:
                merged[key] = raw
        data["params"] = merged
    return exp.ExperimentConfig.from_dict(data)


def _config_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True),
                      default=None, help="JSON config file")(fn)
    fn = click.option("--scenario", default=None)(fn)
    fn = click.option("--seed", type=int, default=None)(fn)
    fn = click.option("--trials", type=int, default=None)(fn)
    fn = click.option("--param", "params", multiple=True,
                      help="inline scenario parameter key=value (JSON values)")(fn)
    fn = click.option("--adversary", default=None,
                      help='adversary spec as JSON, e.g. {"kind": "depolarize", "p": 0.3}')(fn)
    return fn


@click.group()
def main():
    """Desk-scale covert verifiable quantum learning experiments."""


@main.command()
@_config_options
@click.option("--out", "out_dir", default=None, help="directory for report.json / summary.csv")
@click.option("--assert", "do_assert", is_flag=True, default=False,
              help="exit 3 when a registered acceptance threshold fails")
def run(config_path, scenario, seed, trials, params, adversary, out_dir, do_assert):
    """Run a seeded Monte-Carlo experiment and emit reports."""
    try:
        cfg = _load_config(config_path, scenario, seed, trials, params, adversary)
    except (exp.ConfigError, json.JSONDecodeError, OSError) as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(2)
    report = exp.run_experiment(cfg, out_dir=out_dir)
    click.echo(json.dumps(
        {"scenario": report.scenario, "trials": report.trials,
         "aggregate": report.aggregate, "resources": report.resources},
        indent=2, default=float,
    ))
    if do_assert:
        ok, msg = exp.check_assertions(report)
        click.echo(("PASS: " if ok else "FAIL: ") + msg)
        if not ok:
            sys.exit(3)


@main.command()
@_config_options
@click.option("--trial", "trial_index", type=int, required=True)
def replay(config_path, scenario, seed, trials, params, adversary, trial_index):
    """Re-run a single trial bit-exactly from (seed, trial index)."""
    try:
        cfg = _load_config(config_path, scenario, seed, trials, params, adversary)
    except (exp.ConfigError, json.JSONDecodeError, OSError) as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(2)
    record = exp.run_trial(cfg, trial_index)
    click.echo(json.dumps(record, indent=2, default=float, sort_keys=True))


@main.command()
@_config_options
def resources(config_path, scenario, seed, trials, params, adversary):
    """Print the paper-formula resource counts next to configured overrides."""
    try:
        cfg = _load_config(config_path, scenario, seed, trials, params, adversary)
    except (exp.ConfigError, json.JSONDecodeError, OSError) as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(2)
    table = exp.resource_table(cfg)
    width = max(len(k) for k in table)
    for k, v in table.items():
        click.echo(f"{k:<{width}}  {v}")


@main.command(name="list-scenarios")
def list_scenarios():
    """List scenario names with one-line descriptions."""
    width = max(len(name) for name in exp.SCENARIOS)
    for name, sc in exp.SCENARIOS.items():
        click.echo(f"{name:<{width}}  {sc.description}")


if __name__ == "__main__":
    main()
