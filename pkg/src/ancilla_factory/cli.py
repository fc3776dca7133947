"""Command-line front end.

Subcommands: codes | network | figure4 | tables | simulate | solve.
File-producing commands drop their CSV/JSON (and rendered PNG) under --out.
Errors print one machine-parsable line to stderr and exit nonzero.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import codes as codes_mod
from . import report
from .codes import (
    CatalogFormatError,
    ConstructionError,
    DecoderSizeError,
    css_catalog,
    parent_catalog,
    verify_code_properties,
    weight_distribution,
)
from .model import CodeParams, Scenario, solve_max_gamma
from .network import build_prep_network, count_resources
from .pauli_sim import NoiseModel, simulate_block_cycle


class CliError(click.ClickException):
    exit_code = 2

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.error_code = code

    def show(self, file=None):
        click.echo(f"error {self.error_code}: {self.format_message()}", err=True)


def _fail(code: str, message: str):
    raise CliError(code, message)


def _get_css(name: str):
    try:
        return css_catalog()[name]
    except KeyError:
        _fail("E_UNKNOWN_CODE", f"unknown code {name!r}; known: {sorted(css_catalog())}")


class FloatIntParam(click.ParamType):
    """Integer that accepts scientific notation like 1e6."""

    name = "int"

    def convert(self, value, param, ctx):
        try:
            out = int(float(value))
        except ValueError:
            self.fail(f"{value!r} is not a number", param, ctx)
        return out


FLOATINT = FloatIntParam()


@click.group()
@click.option("--out", type=click.Path(path_type=Path), default=None,
              help="Directory for generated files (default: print only).")
@click.option("--seed", type=FLOATINT, default=0, help="Master RNG seed.")
@click.option("--threads", type=int, default=1, help="Worker processes for simulation.")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              help="Delimited output format.")
@click.version_option()
@click.pass_context
def main(ctx, out, seed, threads, fmt):
    """Ancilla-factory error-correction analysis toolkit."""
    ctx.ensure_object(dict)
    ctx.obj.update(out=out, seed=seed, threads=threads, fmt=fmt)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)


@main.command("codes")
@click.option("--list", "list_all", is_flag=True, help="List the catalog.")
@click.option("--verify", "verify_name", default=None, help="Verify one parent code.")
def cmd_codes(list_all, verify_name):
    """List catalog codes or verify a parent code's properties."""
    if not list_all and verify_name is None:
        list_all = True
    if list_all:
        click.echo("parent codes:")
        for code in parent_catalog().values():
            flag = "verified" if code.verified else "trusted"
            click.echo(f"  {code.name}: [{code.n},{code.k},{code.d}] d {flag}")
        click.echo("CSS codes:")
        for css in css_catalog().values():
            avail = "matrices available" if css.matrices_available else "parameters only"
            click.echo(f"  {css.name}: [[{css.n},1,{css.d}]] m={css.m} w={css.w} ({avail})")
    if verify_name is not None:
        cat = parent_catalog()
        if verify_name not in cat:
            _fail("E_UNKNOWN_CODE", f"unknown code {verify_name!r}; known: {sorted(cat)}")
        code = cat[verify_name]
        props = verify_code_properties(code)
        click.echo(f"{code.name}: self_dual={props.self_dual} doubly_even={props.doubly_even}"
                   f" (by {props.doubly_even_by})")
        if props.min_distance_checked:
            click.echo(f"  min distance {props.min_distance} (enumerated)")
            dist = weight_distribution(code)
            click.echo("  weight distribution: "
                       + " ".join(f"{w}:{c}" for w, c in sorted(dist.items())))
        else:
            click.echo(f"  min distance {code.d} (trusted, not enumerated)")


@main.command("network")
@click.option("--code", "name", required=True, help="CSS code name, e.g. css7.")
@click.option("--dump/--no-dump", default=True, help="Print the timestep dump.")
def cmd_network(name, dump):
    """Build the preparation network and print its census and dump."""
    css = _get_css(name)
    try:
        net = build_prep_network(css)
    except ConstructionError as exc:
        _fail("E_NO_MATRICES", str(exc))
    rc = count_resources(net)
    click.echo(f"{name}: ops {rc.ops_total} timesteps {rc.timesteps} "
               f"idle-qubit-timesteps {rc.idle_qubit_timesteps}")
    click.echo("ops by kind: " + " ".join(f"{k}:{v}" for k, v in sorted(rc.ops_by_kind.items())))
    if dump:
        click.echo(net.dump())


@main.command("figure4")
@click.option("--codes", "names", default=",".join(report.CURVE_CODES),
              help="Comma-separated CSS code names.")
@click.option("--mode", type=click.Choice(["serial", "parallel"]), default="serial")
@click.option("--ratio", type=float, default=None,
              help="n*epsilon/gamma (default 0.5 serial, 2.0 parallel).")
@click.option("--gamma-min", type=float, default=1e-7)
@click.option("--gamma-max", type=float, default=1e-3)
@click.option("--points", type=FLOATINT, default=61)
@click.pass_context
def cmd_figure4(ctx, names, mode, ratio, gamma_min, gamma_max, points):
    """Failure-probability curves P(gamma): CSV per code plus a rendered plot."""
    ratio = ratio if ratio is not None else (0.5 if mode == "serial" else 2.0)
    out: Path = ctx.obj["out"] or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    curves = {}
    for name in names.split(","):
        name = name.strip()
        _get_css(name)
        try:
            spec = report.CurveSpec(name, mode, ratio, gamma_min, gamma_max, points)
        except ValueError as exc:
            _fail("E_BAD_ARG", str(exc))
        curve = report.failure_curve(spec)
        curves[name] = curve
        path = out / f"figure4_{name}_{mode}.csv"
        path.write_text(report.curve_to_csv(curve))
        click.echo(f"wrote {path}")
    png = out / f"figure4_{mode}.png"
    report.render_failure_curves(curves, mode, ratio, png)
    click.echo(f"wrote {png}")


@main.command("tables")
@click.argument("scenario_file", required=False, type=click.Path(exists=True, path_type=Path))
@click.pass_context
def cmd_tables(ctx, scenario_file):
    """Overhead tables (serial and parallel modes) for a scenario JSON."""
    try:
        scenario = report.load_scenario(scenario_file)
    except (ValueError, OSError) as exc:
        _fail("E_BAD_SCENARIO", str(exc))
    out: Path = ctx.obj["out"] or Path(".")
    out.mkdir(parents=True, exist_ok=True)
    fmt = ctx.obj["fmt"]
    rows_by_mode = {}
    for mode in ("serial", "parallel"):
        rows = report.overhead_table(scenario, mode)
        rows_by_mode[mode] = rows
        if fmt == "csv":
            path = out / f"tables_{mode}.csv"
            path.write_text(report.rows_to_csv(rows))
        else:
            path = out / f"tables_{mode}.json"
            path.write_text(json.dumps([r.as_dict() for r in rows], indent=2) + "\n")
        click.echo(f"wrote {path}")
        click.echo(report.rows_to_csv(rows).rstrip())
    png = out / "tables_gamma.png"
    report.render_table_chart(rows_by_mode, png)
    click.echo(f"wrote {png}")


@main.command("simulate")
@click.option("--code", "name", required=True)
@click.option("--gamma", type=float, required=True)
@click.option("--epsilon", type=float, default=None)
@click.option("--ratio", type=float, default=None, help="n*epsilon/gamma ratio.")
@click.option("--r", "reps", type=int, default=None, help="Syndrome repetitions (default t+1).")
@click.option("--mode", type=click.Choice(["serial", "parallel"]), default="serial")
@click.option("--trials", type=FLOATINT, default=10000)
@click.pass_context
def cmd_simulate(ctx, name, gamma, epsilon, ratio, reps, mode, trials):
    """Monte Carlo correction cycles; streams progress, emits a JSON result."""
    css = _get_css(name)
    if not css.matrices_available:
        _fail("E_NO_MATRICES", f"{name}: matrices unavailable for simulation")
    if trials <= 0:
        _fail("E_BAD_ARG", "trials must be positive")
    if epsilon is not None and ratio is not None:
        _fail("E_BAD_ARG", "give either --epsilon or --ratio, not both")
    if epsilon is None:
        epsilon = (ratio if ratio is not None else 0.0) * gamma / css.n
    reps = reps if reps is not None else css.t + 1
    noise = NoiseModel(gamma, epsilon)

    def progress(done, total):
        if done % 16 == 0 or done == total:
            click.echo(f"progress {done}/{total} chunks", err=True)

    stats = simulate_block_cycle(css, noise, reps, mode, trials,
                                 seed=ctx.obj["seed"], threads=ctx.obj["threads"],
                                 on_progress=progress)
    payload = json.dumps(stats.to_json(), indent=2)
    click.echo(payload)
    if ctx.obj["out"] is not None:
        path = ctx.obj["out"] / f"simulate_{name}_{mode}.json"
        path.write_text(payload + "\n")
        click.echo(f"wrote {path}", err=True)


@main.command("solve")
@click.option("--code", "name", required=True)
@click.option("--mode", type=click.Choice(["serial", "parallel"]), default="serial")
@click.option("--ratio", type=float, default=None)
@click.option("--printed-form", is_flag=True,
              help="Solve against the plain power-sum tail instead of the bounded tail.")
@click.argument("scenario_file", required=False, type=click.Path(exists=True, path_type=Path))
def cmd_solve(name, mode, ratio, printed_form, scenario_file):
    """Largest tolerable gamma for a code under a scenario's budget."""
    css = _get_css(name)
    try:
        scenario = report.load_scenario(scenario_file)
    except (ValueError, OSError) as exc:
        _fail("E_BAD_SCENARIO", str(exc))
    ratio = ratio if ratio is not None else (0.5 if mode == "serial" else 2.0)
    scenario = Scenario(scenario.K, scenario.Q, mode, ratio,
                        scenario.gamma0, scenario.eta, scenario.r)
    params = CodeParams.from_css(css, r=scenario.r, eta=scenario.eta)
    try:
        gamma, eps = solve_max_gamma(params, scenario, bounded=not printed_form)
    except ValueError as exc:
        _fail("E_UNREACHABLE", str(exc))
    click.echo(json.dumps({
        "code": name, "mode": mode, "epsilon_ratio": ratio,
        "K": scenario.K, "Q": scenario.Q,
        "gamma_max": gamma, "epsilon_max": eps,
        "target_P": scenario.target(params.steps_per_correction),
    }, indent=2))


if __name__ == "__main__":
    main()
