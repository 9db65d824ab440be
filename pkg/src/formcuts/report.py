"""Experiment driver: manifests, per-formulation runs, delimited output.

A manifest names instances (generated, from files, or bundled) and the
formulation kinds to compare. Each (instance, kind) pair gets one cut
loop run; each instance gets one reference optimum (supplied, or proved
by branch and bound on the cut-strengthened aggregate model). Results
land in rows.csv / summary.csv / report.json; floats are written with
repr so a rerun of the same manifest is byte identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .branchbound import BnbConfig, solve_mip
import numpy as np
from .cutloop import CutLoopConfig, closed_gap_percent, gap_percent, run_cut_loop
from .errors import ValidationError
from .formulations import (FormulationKind, build_formulation,
                           lift_fct_solution)
from .model import check_feasibility
from .instances import (FctInstance, bundled_cmst20, generate_fct,
                        instance_to_json, load_instance, load_instance_text)

ROW_FIELDS = ["instance", "kind", "n_vars", "n_rows", "status", "root_lp",
              "final_lp", "cuts", "rounds", "opt", "root_gap_pct",
              "final_gap_pct", "closed_pct"]
SUMMARY_FIELDS = ["kind", "instances", "mean_root_gap_pct", "mean_final_gap_pct",
                  "mean_closed_pct", "mean_cuts", "mean_rounds"]


@dataclass
class ExperimentManifest:
    name: str
    instances: list[dict]
    kinds: list[str]
    rounds: int = 50
    gmi_first_round: bool = False
    complement_mode: str = "both"
    jobs: int = 1
    opt: str = "bnb"          # bnb | given | none
    node_limit: int = 1_000_000
    meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.instances:
            raise ValidationError("manifest lists no instances")
        if not self.kinds:
            raise ValidationError("manifest lists no formulation kinds")
        for kind in self.kinds:
            FormulationKind.parse(kind)
        if self.opt not in ("bnb", "given", "none"):
            raise ValidationError(f"unknown opt mode {self.opt!r}")
        if self.rounds < 0 or self.jobs < 1 or self.node_limit < 1:
            raise ValidationError("rounds/jobs/node_limit out of range")


def load_manifest(path: str | Path) -> ExperimentManifest:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"manifest is not valid JSON: {exc}") from exc
    known = {f for f in ExperimentManifest.__dataclass_fields__}
    extra = set(raw) - known
    if extra:
        raise ValidationError(f"unknown manifest keys: {sorted(extra)}")
    man = ExperimentManifest(**raw)
    man.validate()
    return man


def apply_overrides(man: ExperimentManifest, jobs: int | None = None,
                    rounds: int | None = None, gmi_first: bool | None = None,
                    complement_mode: str | None = None) -> ExperimentManifest:
    """Command-line flags beat manifest values; None leaves them alone."""
    if jobs is not None:
        man.jobs = jobs
    if rounds is not None:
        man.rounds = rounds
    if gmi_first is not None:
        man.gmi_first_round = gmi_first
    if complement_mode is not None:
        man.complement_mode = complement_mode
    man.validate()
    return man


def resolve_instances(man: ExperimentManifest, base_dir: str | Path = ".",
                      ) -> list[tuple[str, object, float | None]]:
    """Materialize every instance entry as (id, instance, explicit opt)."""
    out = []
    seen = set()
    for entry in man.instances:
        explicit = entry.get("opt")
        if "generate" in entry:
            g = dict(entry["generate"])
            g.pop("type", None)
            n, b, r, seed = g["n"], g["B"], g["r"], g["seed"]
            inst = generate_fct(n, b, r, seed)
            iid = entry.get("id", f"fct{n}x{n}-B{b}-r{r}-s{seed}")
        elif "file" in entry:
            path = Path(base_dir) / entry["file"]
            inst = load_instance(path)
            iid = entry.get("id", path.stem)
        elif "bundled" in entry:
            if entry["bundled"] != "cmst20":
                raise ValidationError(f"unknown bundled instance {entry['bundled']!r}")
            inst = bundled_cmst20()
            iid = entry.get("id", "cmst20")
        else:
            raise ValidationError(f"instance entry needs generate/file/bundled: {entry}")
        if explicit is None and isinstance(inst.meta, dict):
            explicit = inst.meta.get("best_known")
        if iid in seen:
            raise ValidationError(f"duplicate instance id {iid!r}")
        seen.add(iid)
        out.append((iid, inst, explicit))
    return out


def _loop_config(man: ExperimentManifest) -> CutLoopConfig:
    return CutLoopConfig(max_rounds=man.rounds, gmi_first_round=man.gmi_first_round,
                         complement_mode=man.complement_mode)


def reference_kind(inst) -> FormulationKind:
    """Formulation used to prove the reference optimum."""
    if isinstance(inst, FctInstance):
        return FormulationKind.AVV
    return FormulationKind.CMST_AVV


def greedy_fct_solution(inst: FctInstance) -> tuple[float, np.ndarray]:
    """Feasible upper bound: route greedily along cheapest arcs.

    One pass over arcs in (cost, i, j) order always meets every demand
    because supplies cover demands in total. Returns the opening cost
    and the stacked (x, y) base-block values in arc-major order.
    """
    n, m = inst.n_suppliers, inst.n_customers
    s = inst.supply.astype(np.int64).copy()
    d = inst.demand.astype(np.int64).copy()
    flow = np.zeros((n, m), dtype=np.int64)
    order = sorted(((int(inst.cost[i, j]), i, j) for i in range(n) for j in range(m)))
    for _, i, j in order:
        f = min(s[i], d[j])
        if f > 0:
            flow[i, j] = f
            s[i] -= f
            d[j] -= f
    y = (flow > 0).astype(np.float64)
    obj = float((inst.cost * y).sum())
    base = np.concatenate([flow.reshape(-1).astype(np.float64), y.reshape(-1)])
    return obj, base


def prove_optimum(inst, node_limit: int = 1_000_000) -> float | None:
    """Cut loop on the aggregate formulation, then branch and bound.

    The cuts were separated from valid rows only, so the strengthened
    model has the same integer optimum; the tree just starts tighter.
    Branching prefers the arc-opening indicators, which decide the
    structure; the linked flow variables mostly follow. A greedy
    starting solution lets the tree prune from the first node.
    """
    model, vmap = build_formulation(inst, reference_kind(inst))
    rep = run_cut_loop(model)
    prio = np.array([1.0 if v.tag.startswith("y(") else 0.0
                     for v in model.variables])
    start = None
    if isinstance(inst, FctInstance):
        obj, base = greedy_fct_solution(inst)
        lifted = lift_fct_solution(model, vmap, base)
        report = check_feasibility(model, lifted.values)
        if report.integer_feasible:
            start = (obj, lifted.values)
    res = solve_mip(rep.strengthened,
                    BnbConfig(node_limit=node_limit, branch_priority=prio,
                              incumbent=start))
    if res.status != "optimal":
        return None
    return res.objective


def _fmt(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, float):
        if math.isnan(v):
            return "NA"
        return repr(v)
    return str(v)


# top-level so ProcessPoolExecutor can pickle the tasks

def _cutloop_task(payload: str, kind: str, rounds: int, gmi_first: bool,
                  complement_mode: str) -> dict:
    inst = load_instance_text(payload)
    model, _ = build_formulation(inst, FormulationKind.parse(kind))
    cfg = CutLoopConfig(max_rounds=rounds, gmi_first_round=gmi_first,
                        complement_mode=complement_mode)
    rep = run_cut_loop(model, cfg)
    return {
        "kind": kind,
        "n_vars": model.num_vars,
        "n_rows": model.num_rows,
        "status": rep.status,
        "root_lp": rep.lp_values[0],
        "final_lp": rep.lp_values[-1],
        "cuts": rep.total_cuts,
        "rounds": rep.rounds,
        "trajectory": list(rep.lp_values),
        "cuts_per_round": list(rep.cuts_per_round),
    }


def _opt_task(payload: str, node_limit: int) -> float | None:
    return prove_optimum(load_instance_text(payload), node_limit)


@dataclass
class ExperimentResult:
    manifest: ExperimentManifest
    records: list[dict]
    aggregates: list[dict]


def run_experiment(man: ExperimentManifest, base_dir: str | Path = ".",
                   ) -> ExperimentResult:
    man.validate()
    resolved = resolve_instances(man, base_dir)
    payloads = [instance_to_json(inst) for _, inst, _ in resolved]

    opts: list[float | None] = [explicit for _, _, explicit in resolved]
    opt_jobs = [k for k, v in enumerate(opts) if v is None and man.opt == "bnb"]
    loop_args = [(payloads[k], kind, man.rounds, man.gmi_first_round,
                  man.complement_mode)
                 for k in range(len(resolved)) for kind in man.kinds]

    if man.jobs > 1:
        with ProcessPoolExecutor(max_workers=man.jobs) as pool:
            opt_futs = {k: pool.submit(_opt_task, payloads[k], man.node_limit)
                        for k in opt_jobs}
            loop_futs = [pool.submit(_cutloop_task, *args) for args in loop_args]
            for k, fut in opt_futs.items():
                opts[k] = fut.result()
            loop_out = [f.result() for f in loop_futs]
    else:
        for k in opt_jobs:
            opts[k] = _opt_task(payloads[k], man.node_limit)
        loop_out = [_cutloop_task(*args) for args in loop_args]

    records = []
    t = 0
    for k, (iid, _, _) in enumerate(resolved):
        for _kind in man.kinds:
            loop_rec = dict(loop_out[t])
            t += 1
            loop_rec["instance"] = iid
            opt = opts[k]
            loop_rec["opt"] = opt
            if opt is None:
                loop_rec["root_gap_pct"] = None
                loop_rec["final_gap_pct"] = None
                loop_rec["closed_pct"] = None
            else:
                loop_rec["root_gap_pct"] = gap_percent(opt, loop_rec["root_lp"])
                loop_rec["final_gap_pct"] = gap_percent(opt, loop_rec["final_lp"])
                loop_rec["closed_pct"] = closed_gap_percent(
                    loop_rec["root_lp"], loop_rec["final_lp"], opt)
            ordered = {f: loop_rec[f] for f in ROW_FIELDS}
            for key, value in loop_rec.items():
                if key not in ordered:
                    ordered[key] = value
            records.append(ordered)

    aggregates = aggregate_records(man.kinds, records)
    return ExperimentResult(man, records, aggregates)


def aggregate_records(kinds: list[str], records: list[dict]) -> list[dict]:
    """Per-kind means over the records that carry a reference optimum."""
    out = []
    for kind in kinds:
        rows = [r for r in records if r["kind"] == kind and r["opt"] is not None]
        agg = {"kind": kind, "instances": len(rows)}
        for src, dst in (("root_gap_pct", "mean_root_gap_pct"),
                         ("final_gap_pct", "mean_final_gap_pct"),
                         ("closed_pct", "mean_closed_pct"),
                         ("cuts", "mean_cuts"), ("rounds", "mean_rounds")):
            vals = [r[src] for r in rows if r[src] is not None
                    and not (isinstance(r[src], float) and math.isnan(r[src]))]
            agg[dst] = sum(vals) / len(vals) if vals else None
        out.append(agg)
    return out


def rows_csv_text(records: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for rec in records:
        w.writerow([_fmt(rec[f]) for f in ROW_FIELDS])
    return buf.getvalue()


def summary_csv_text(aggregates: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_FIELDS)
    for agg in aggregates:
        w.writerow([_fmt(agg[f]) for f in SUMMARY_FIELDS])
    return buf.getvalue()


def write_outputs(result: ExperimentResult, out_dir: str | Path,
                  figures: bool = True) -> dict:
    """Write rows.csv, summary.csv, report.json (and figures) to out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {}
    paths["rows"] = out / "rows.csv"
    paths["rows"].write_text(rows_csv_text(result.records), encoding="utf-8")
    paths["summary"] = out / "summary.csv"
    paths["summary"].write_text(summary_csv_text(result.aggregates), encoding="utf-8")
    doc = {
        "name": result.manifest.name,
        "kinds": result.manifest.kinds,
        "rounds": result.manifest.rounds,
        "gmi_first_round": result.manifest.gmi_first_round,
        "complement_mode": result.manifest.complement_mode,
        "records": result.records,
        "aggregates": result.aggregates,
    }
    paths["report"] = out / "report.json"
    with open(paths["report"], "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if figures:
        from .figures import render_figures
        paths["figures"] = render_figures(result, out / "figures")
    return paths
