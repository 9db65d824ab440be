"""Command line front end.

Exit codes: 0 success, 2 invalid input or data (validation/parse), 3
numerical breakdown inside the simplex. Click handles usage errors.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .branchbound import BnbConfig, solve_mip
from .cutloop import CutLoopConfig, run_cut_loop
from .cuts import validate_cut
from .errors import NumericalBreakdownError, ParseError, ValidationError
from .formulations import FormulationKind, build_formulation
from .instances import (CmstFormat, generate_fct, load_instance, parse_cmst,
                        save_instance)
from .lpio import model_to_json, write_lp
from .report import (apply_overrides, load_manifest, run_experiment,
                     write_outputs)

KIND_CHOICES = [k.value for k in FormulationKind]


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ParseError, ValidationError, FileNotFoundError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except NumericalBreakdownError as exc:
            click.echo(f"numerical breakdown: {exc}", err=True)
            sys.exit(3)
    return wrapper


@click.group()
def main():
    """Binarized formulations of fixed-charge flow problems and the
    cutting planes they expose."""


@main.command()
@click.option("--n", type=int, required=True, help="suppliers = customers")
@click.option("--B", "big_b", type=int, required=True, help="max supply/demand value")
@click.option("--r", type=float, required=True, help="demand/supply ratio in (0,1)")
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handle_errors
def generate(n, big_b, r, seed, out):
    """Generate a random transportation instance and save it as JSON."""
    inst = generate_fct(n, big_b, r, seed)
    save_instance(inst, out)
    click.echo(f"wrote {out}: {n}x{n}, supplies sum {int(inst.supply.sum())}, "
               f"demands sum {int(inst.demand.sum())}")


@main.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["orlib", "json"]),
              default="orlib", show_default=True)
@click.option("--capacity", type=int, default=None,
              help="tree capacity (required for orlib sources)")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@handle_errors
def ingest(source, fmt, capacity, out):
    """Convert an external instance file to the native JSON format."""
    text = Path(source).read_text(encoding="utf-8")
    inst = parse_cmst(text, CmstFormat(fmt), capacity)
    save_instance(inst, out)
    click.echo(f"wrote {out}: {inst.n} vertices + root, capacity {inst.capacity}")


def _kind_option(fn):
    return click.option("--kind", type=click.Choice(KIND_CHOICES), required=True)(fn)


def _load_build(instance, kind, literal_flow_removal):
    inst = load_instance(instance)
    return build_formulation(inst, FormulationKind.parse(kind),
                             literal_flow_removal=literal_flow_removal)


@main.command()
@click.option("--instance", type=click.Path(exists=True, dir_okay=False), required=True)
@_kind_option
@click.option("--literal-flow-removal", is_flag=True,
              help="drop aggregate flow rows without restoring plain ones")
@click.option("--out", type=click.Path(dir_okay=False), required=True,
              help=".lp or .json output")
@handle_errors
def build(instance, kind, literal_flow_removal, out):
    """Build a formulation and write it as an LP or JSON file."""
    model, _ = _load_build(instance, kind, literal_flow_removal)
    text = model_to_json(model) if out.endswith(".json") else write_lp(model)
    Path(out).write_text(text, encoding="utf-8")
    click.echo(f"wrote {out}: {model.num_vars} vars, {model.num_rows} rows")


@main.command()
@click.option("--instance", type=click.Path(exists=True, dir_okay=False), required=True)
@_kind_option
@click.option("--rounds", type=int, default=50, show_default=True)
@click.option("--gmi-first", is_flag=True,
              help="first round uses tableau cuts instead of formulation cuts")
@click.option("--complement-mode", type=click.Choice(["complement", "none", "both"]),
              default="both", show_default=True)
@click.option("--literal-flow-removal", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="optional JSON report with the full trajectory")
@handle_errors
def cutplane(instance, kind, rounds, gmi_first, complement_mode,
             literal_flow_removal, out):
    """Run the separation loop on one formulation and print the bounds."""
    model, _ = _load_build(instance, kind, literal_flow_removal)
    cfg = CutLoopConfig(max_rounds=rounds, gmi_first_round=gmi_first,
                        complement_mode=complement_mode)
    rep = run_cut_loop(model, cfg)
    for t, v in enumerate(rep.lp_values):
        label = "root" if t == 0 else f"r{t:03d}"
        added = "" if t == 0 else f"  +{rep.cuts_per_round[t - 1]} cuts"
        click.echo(f"{label}  bound {v:.6f}{added}")
    click.echo(f"done: {rep.status}, {rep.total_cuts} cuts in {rep.rounds} rounds, "
               f"bound {rep.lp_values[0]:.6f} -> {rep.lp_values[-1]:.6f}")
    if out:
        doc = {"instance": str(instance), "kind": kind, "status": rep.status,
               "trajectory": rep.lp_values, "cuts_per_round": rep.cuts_per_round,
               "total_cuts": rep.total_cuts}
        Path(out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        click.echo(f"wrote {out}")


@main.command()
@click.option("--instance", type=click.Path(exists=True, dir_okay=False), required=True)
@_kind_option
@click.option("--node-limit", type=int, default=1_000_000, show_default=True)
@click.option("--literal-flow-removal", is_flag=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@handle_errors
def solve(instance, kind, node_limit, literal_flow_removal, out):
    """Solve one formulation to integer optimality by branch and bound."""
    model, _ = _load_build(instance, kind, literal_flow_removal)
    res = solve_mip(model, BnbConfig(node_limit=node_limit))
    if res.objective is None:
        click.echo(f"{res.status}: no solution ({res.nodes} nodes)")
    else:
        click.echo(f"{res.status}: objective {res.objective:.6f} "
                   f"({res.nodes} nodes, bound {res.best_bound:.6f})")
    if out:
        doc = {"instance": str(instance), "kind": kind, "status": res.status,
               "objective": res.objective, "nodes": res.nodes,
               "best_bound": res.best_bound,
               "x": None if res.x is None else list(res.x)}
        Path(out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        click.echo(f"wrote {out}")


@main.command("validate-cuts")
@click.option("--instance", type=click.Path(exists=True, dir_okay=False), required=True)
@_kind_option
@click.option("--rounds", type=int, default=50, show_default=True)
@click.option("--limit", type=int, default=1_000_000, show_default=True,
              help="max integer assignments the oracle will enumerate")
@click.option("--literal-flow-removal", is_flag=True)
@handle_errors
def validate_cuts(instance, kind, rounds, limit, literal_flow_removal):
    """Re-derive every cut of a run and check it exhaustively."""
    model, _ = _load_build(instance, kind, literal_flow_removal)
    rep = run_cut_loop(model, CutLoopConfig(max_rounds=rounds))
    counts = {"valid": 0, "violated": 0, "skipped": 0}
    bad = []
    for rec in rep.pool.records():
        check = validate_cut(model, rec.cut, oracle_limit=limit)
        counts[check.status] += 1
        if check.status == "violated":
            bad.append((rec, check))
    click.echo(f"{rep.total_cuts} cuts: {counts['valid']} valid, "
               f"{counts['violated']} violated, {counts['skipped']} skipped")
    if bad:
        for rec, check in bad:
            click.echo(f"  round {rec.round_added}: {rec.cut.family} cut is invalid, "
                       f"witness objective {check.witness.objective:.6f}", err=True)
        sys.exit(2)


@main.command()
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--jobs", type=int, default=None, help="override manifest jobs")
@click.option("--rounds", type=int, default=None, help="override manifest rounds")
@click.option("--gmi-first", is_flag=True, default=False)
@click.option("--complement-mode", type=click.Choice(["complement", "none", "both"]),
              default=None)
@click.option("--no-figures", is_flag=True, default=False)
@handle_errors
def run(manifest, out, jobs, rounds, gmi_first, complement_mode, no_figures):
    """Run a full experiment manifest and write tables plus figures."""
    man = load_manifest(manifest)
    man = apply_overrides(man, jobs=jobs, rounds=rounds,
                          gmi_first=gmi_first or None,
                          complement_mode=complement_mode)
    result = run_experiment(man, base_dir=Path(manifest).parent)
    paths = write_outputs(result, out, figures=not no_figures)
    for agg in result.aggregates:
        closed = agg["mean_closed_pct"]
        closed_s = "NA" if closed is None else f"{closed:6.2f}%"
        click.echo(f"{agg['kind']:12s} instances {agg['instances']:3d} "
                   f"mean closed {closed_s}")
    click.echo(f"wrote {paths['rows']} and {paths['summary']}")


if __name__ == "__main__":
    main()
