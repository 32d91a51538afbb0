"""Experiment runner: configuration, suite execution, report artifacts.

One JSON config describes one run; any scalar leaf can be overridden on
the command line with dotted flags (e.g. ``--ensemble.n_paths=1000``).
Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error,
3 internal error.
"""

from __future__ import annotations

import copy
import json
import sys
import time
from importlib import metadata
from pathlib import Path as FilePath

import click

from .excursions import decompose_excursions
from .grids import SeedSpec, TimeGrid
from .pathgen import FAMILIES, brownian_path
from .reporting import canonical_json, content_hash
from .serialize import excursions_to_csv, write_binary, write_path_csv
from .suites import SUITES, describe_check, run_check, suite_checks

DEFAULT_CONFIG: dict = {
    "suite": "all",
    "grid": {"dt": 1e-4, "n_steps": 10000},
    "ensemble": {"n_paths": 2000, "master_seed": 20240601},
    "process": {"family": "reflected", "params": {}},
    "phi": {"kind": "constant", "c": 1.0},
    "tolerances": {},
    "output_dir": "sigmalab-out",
    "workers": 1,
}

HEAVY_PROFILE = {
    "grid": {"dt": 1e-5, "n_steps": 100000},
    "ensemble": {"n_paths": 10000},
}

_VALID_SUITES = ("sigma-verify", "identities", "estimates", "representation", "all")


class ConfigError(Exception):
    pass


def _merge(base: dict, override: dict, prefix: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        path = f"{prefix}{key}"
        if key not in out:
            raise ConfigError(f"unknown configuration key: {path!r}")
        if isinstance(out[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"configuration key {path!r} expects an object")
            out[key] = _merge(out[key], value, prefix=f"{path}.")
        else:
            out[key] = value
    return out


def _apply_dotted(config: dict, dotted: str, raw_value: str) -> None:
    keys = dotted.split(".")
    node = config
    for key in keys[:-1]:
        if key not in node or not isinstance(node[key], dict):
            raise ConfigError(f"unknown configuration key: {dotted!r}")
        node = node[key]
    leaf = keys[-1]
    if leaf not in node:
        raise ConfigError(f"unknown configuration key: {dotted!r}")
    try:
        node[leaf] = json.loads(raw_value)
    except json.JSONDecodeError:
        node[leaf] = raw_value


def validate_config(config: dict) -> None:
    if config["suite"] not in _VALID_SUITES:
        raise ConfigError(f"unknown suite: {config['suite']!r}")
    family = config["process"]["family"]
    if family not in FAMILIES:
        raise ConfigError(f"unknown process family: {family!r}")
    grid = config["grid"]
    if not (isinstance(grid["n_steps"], int) and grid["n_steps"] >= 1):
        raise ConfigError("grid.n_steps must be a positive integer")
    if not grid["dt"] > 0:
        raise ConfigError("grid.dt must be positive")
    ens = config["ensemble"]
    if not (isinstance(ens["n_paths"], int) and ens["n_paths"] >= 1):
        raise ConfigError("ensemble.n_paths must be a positive integer")
    if not (isinstance(ens["master_seed"], int) and 0 <= ens["master_seed"] < 2**64):
        raise ConfigError("ensemble.master_seed must be a 64-bit unsigned integer")
    if not (isinstance(config["workers"], int) and config["workers"] >= 1):
        raise ConfigError("workers must be a positive integer")


def load_config(config_path: str | None, overrides: list[str], heavy: bool,
                out_dir: str | None) -> dict:
    config = copy.deepcopy(DEFAULT_CONFIG)
    if config_path is not None:
        try:
            with open(config_path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config file must hold a JSON object")
        config = _merge(config, user)
    if heavy:
        config = _merge(config, HEAVY_PROFILE)
    for item in overrides:
        if not item.startswith("--") or "=" not in item:
            raise ConfigError(f"unrecognized argument: {item!r} (expected --key.path=value)")
        dotted, raw = item[2:].split("=", 1)
        _apply_dotted(config, dotted, raw)
    if out_dir is not None:
        config["output_dir"] = out_dir
    validate_config(config)
    return config


def base_params(config: dict) -> dict:
    return {
        "dt": config["grid"]["dt"],
        "n_steps": config["grid"]["n_steps"],
        "n_paths": config["ensemble"]["n_paths"],
        "master_seed": config["ensemble"]["master_seed"],
        "family": config["process"]["family"],
        "phi_kind": config["phi"]["kind"],
        "phi_c": config["phi"].get("c", 1.0),
    }


def execute_suite(config: dict) -> dict:
    """Run the configured suite and return the report payload."""
    started = time.time()
    params0 = base_params(config)
    results = []
    for spec, defaults in suite_checks(config["suite"]):
        params = {**params0, **defaults, **config["tolerances"].get(spec.name, {})}
        params.setdefault("check_name", spec.name)
        result = run_check(spec, params, workers=config["workers"])
        results.append(result)
    results.sort(key=lambda r: r.name)
    aggregate = all(r.passed for r in results)
    hashed = {
        "config": {k: config[k] for k in ("suite", "grid", "ensemble", "process", "phi", "tolerances")},
        "checks": [r.payload() for r in results],
    }
    return {
        **hashed,
        "aggregate_pass": aggregate,
        "content_hash": content_hash(hashed),
        "wall_time_s": time.time() - started,
    }


def write_artifacts(config: dict, report: dict) -> FilePath:
    out = FilePath(config["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        fh.write(canonical_json(report))
    with open(out / "hash.txt", "w") as fh:
        fh.write(report["content_hash"] + "\n")
    # plot-ready sample artifacts for the configured process
    grid = TimeGrid(dt=config["grid"]["dt"], n_steps=config["grid"]["n_steps"])
    seed = SeedSpec(config["ensemble"]["master_seed"], 0)
    sample = FAMILIES[config["process"]["family"]](grid, seed)
    write_path_csv(sample, out / "sample_path.csv")
    write_binary(sample, out / "sample_path.slab")
    b = brownian_path(grid, seed)
    excursions_to_csv(decompose_excursions(b, 0.0), out / "sample_excursions.csv")
    with open(out / "checks.csv", "w") as fh:
        fh.write("check,pass\n")
        for chk in report["checks"]:
            fh.write(f"{chk['name']},{int(bool(chk['pass']))}\n")
    return out


@click.group()
def main() -> None:
    """Monte Carlo verification suites for zero-set driven processes."""


@main.command(context_settings={"ignore_unknown_options": True, "allow_extra_args": True})
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--heavy", is_flag=True, help="heavy profile: dt=1e-5, 10^4 paths")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.pass_context
def run(ctx: click.Context, config_path: str | None, heavy: bool, out_dir: str | None) -> None:
    """Execute a suite and write report.json, CSV artifacts and hash.txt."""
    try:
        config = load_config(config_path, list(ctx.args), heavy, out_dir)
    except ConfigError as exc:
        click.echo(f"configuration error: {exc}", err=True)
        sys.exit(2)
    try:
        report = execute_suite(config)
        out = write_artifacts(config, report)
    except Exception as exc:  # noqa: BLE001 - internal failures exit 3 by contract
        click.echo(f"internal error: {exc}", err=True)
        sys.exit(3)
    for chk in report["checks"]:
        click.echo(f"[{'PASS' if chk['pass'] else 'FAIL'}] {chk['name']}")
    click.echo(f"report: {out / 'report.json'}  hash: {report['content_hash'][:16]}...")
    sys.exit(0 if report["aggregate_pass"] else 1)


@main.command()
@click.argument("suite")
def describe(suite: str) -> None:
    """List the checks a suite enforces, with their identities and tolerances."""
    try:
        checks = suite_checks(suite)
    except KeyError:
        click.echo(f"unknown suite: {suite!r} (choose from {', '.join(_VALID_SUITES)})", err=True)
        sys.exit(2)
    click.echo(f"suite {suite}: {len(checks)} checks")
    for spec, defaults in checks:
        click.echo("  - " + describe_check(spec, defaults))


@main.command()
def version() -> None:
    try:
        click.echo(metadata.version("sigmalab"))
    except metadata.PackageNotFoundError:
        click.echo("0.0.0+uninstalled")


if __name__ == "__main__":
    main()
