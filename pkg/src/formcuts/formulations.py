"""Model builders: plain FCT, its binarized variants, and rooted CMST.

Every FCT-family formulation shares the same leading variable block
(all x arcs, then all y arcs, in row-major arc order), so projecting an
extended solution back to the plain model is a truncation. Auxiliary
selection variables z, and the per-node aggregates u/w (or g/h for
CMST), are appended after that block and described by a VarMap.

Constraint tags are structured as family(indices) and are the handle
the cut machinery uses to report provenance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .instances import CmstInstance, FctInstance, build_multigraph
from .model import (LinearExpr, MipModel, ModelBuilder, Sense, Solution, VarKind)


class FormulationKind(enum.Enum):
    FCT = "fct"
    FULLB = "fullb"
    AVV = "avv"
    UNARYB_PLUS = "unaryb+"
    LOGB_PLUS = "logb+"
    AVV_MINUS_Z = "avv-z"
    AVV_PLUS_U = "avv+u"
    AVV_PLUS_U_MINUS_Z = "avv+u-z"
    CMST_AVV = "cmst-avv"
    CMST_AVV_PLUS_U = "cmst-avv+u"
    CMST_AVV_PLUS_U_MINUS_Z = "cmst-avv+u-z"

    @property
    def is_cmst(self) -> bool:
        return self.value.startswith("cmst")

    @staticmethod
    def parse(text: str) -> "FormulationKind":
        try:
            return FormulationKind(text.strip().lower())
        except ValueError:
            valid = ", ".join(k.value for k in FormulationKind)
            raise ValidationError(f"unknown formulation kind {text!r}; one of: {valid}")


class BinScheme(enum.Enum):
    FULL = "full"          # sum k*z_k = x, sum z_k <= 1
    UNARY = "unary"        # sum z_k = x, z_1 >= z_2 >= ...
    LOG = "log"            # sum 2^(k-1) z_k = x, x <= a
    AVV = "avv"            # full scheme with a k=0 copy and a convexity row


@dataclass(frozen=True)
class AuxLink:
    """Where an auxiliary variable comes from.

    For selection variables, orig is the binarized variable's id and
    index is the represented value k. Aggregates set orig = -1 and carry
    the node id instead.
    """

    orig: int
    scheme: str
    index: int
    node: int = -1


@dataclass
class VarMap:
    """Bookkeeping between a formulation and its auxiliary variables."""

    aux: dict[int, AuxLink] = field(default_factory=dict)
    recon: dict[int, LinearExpr] = field(default_factory=dict)   # orig id -> expr over aux
    agg_def: dict[int, LinearExpr] = field(default_factory=dict)  # agg id -> defining sum
    n_base: int = 0  # size of the shared leading block (projection = truncation)

    def check(self) -> None:
        seen_orig_index = set()
        for aux_id, link in self.aux.items():
            key = (link.orig, link.scheme, link.index, link.node)
            if key in seen_orig_index:
                raise ValidationError(f"duplicate aux link {key}")
            seen_orig_index.add(key)
        for orig, expr in self.recon.items():
            for j, _ in expr.terms:
                if j not in self.aux:
                    raise ValidationError(
                        f"reconstruction of var {orig} references non-aux id {j}")
                if self.aux[j].orig != orig:
                    raise ValidationError(
                        f"reconstruction of var {orig} mixes in aux of var {self.aux[j].orig}")


def _nbits(a: int) -> int:
    return max(1, math.ceil(math.log2(a + 1)))


def binarize_variable(model: MipModel, var_id: int, scheme: BinScheme) -> tuple[MipModel, VarMap]:
    """Attach selection variables for one integer variable of a model.

    The variable must be integer-kind with bounds [0, a], a >= 1 finite.
    It is retained; new rows tie it to the added z block according to
    the scheme. Returns the extended model and the VarMap for the block.
    """
    if not 0 <= var_id < model.num_vars:
        raise ValidationError(f"no variable with id {var_id}")
    var = model.variables[var_id]
    if not var.kind.is_integer:
        raise ValidationError(f"variable {var.name} is continuous; binarization "
                              "applies to bounded integer variables")
    if var.lower != 0 or not math.isfinite(var.upper) or var.upper < 1:
        raise ValidationError(f"variable {var.name} needs bounds [0, a] with a >= 1")
    a = int(round(var.upper))

    b = ModelBuilder(model.name)
    for v in model.variables:
        b.add_var(v.name, v.lower, v.upper, v.kind, v.tag)
    for con in model.constraints:
        b.add_row(con.expr, con.sense, con.rhs, con.tag)
    b.set_objective(model.objective)

    vmap = VarMap(n_base=model.num_vars)
    _add_selection_block(b, vmap, x_id=var_id, a=a, scheme=scheme, label=var.name,
                         name_label=var.name, y_id=None)
    out = b.build()
    vmap.check()
    return out, vmap


def _add_selection_block(b: ModelBuilder, vmap: VarMap, x_id: int, a: int,
                         scheme: BinScheme, label: str, name_label: str,
                         y_id: int | None) -> list[int]:
    """Add one variable's z block plus linking rows; returns the z ids.

    When y_id is given, the scheme's strengthening row tied to the setup
    variable is added as well (z_1 = y for unary, sum z >= y for log,
    sum_{k>=1} z = y for the avv scheme).
    """
    k_lo = 0 if scheme is BinScheme.AVV else 1
    count = (_nbits(a) if scheme is BinScheme.LOG else a - k_lo + 1)
    z: list[int] = []
    for k in range(k_lo, k_lo + count):
        zid = b.add_var(f"z_{name_label}_{k}", 0, 1, VarKind.BINARY,
                        tag=f"z({label},{k})")
        vmap.aux[zid] = AuxLink(orig=x_id, scheme=scheme.value, index=k)
        z.append(zid)

    if scheme in (BinScheme.FULL, BinScheme.AVV):
        weights = list(range(k_lo, k_lo + count))
        b.add_row([(zid, float(k)) for zid, k in zip(z, weights)] + [(x_id, -1.0)],
                  Sense.EQ, 0.0, f"binz-link({label})")
        vmap.recon[x_id] = LinearExpr.from_pairs(
            (zid, float(k)) for zid, k in zip(z, weights))
        if scheme is BinScheme.FULL:
            b.add_row([(zid, 1.0) for zid in z], Sense.LE, 1.0, f"binz-sos({label})")
        else:
            nonzero = z[1:]  # k >= 1 copies
            if y_id is not None:
                b.add_row([(zid, 1.0) for zid in nonzero] + [(y_id, -1.0)],
                          Sense.EQ, 0.0, f"binz-y({label})")
            b.add_row([(zid, 1.0) for zid in z], Sense.EQ, 1.0, f"binz-conv({label})")
    elif scheme is BinScheme.UNARY:
        b.add_row([(zid, 1.0) for zid in z] + [(x_id, -1.0)], Sense.EQ, 0.0,
                  f"unary-link({label})")
        vmap.recon[x_id] = LinearExpr.from_pairs((zid, 1.0) for zid in z)
        for k in range(len(z) - 1):
            b.add_row([(z[k], 1.0), (z[k + 1], -1.0)], Sense.GE, 0.0,
                      f"unary-ord({label},{k + 1})")
        if y_id is not None:
            b.add_row([(z[0], 1.0), (y_id, -1.0)], Sense.EQ, 0.0, f"unary-y({label})")
    elif scheme is BinScheme.LOG:
        b.add_row([(zid, float(2 ** k)) for k, zid in enumerate(z)] + [(x_id, -1.0)],
                  Sense.EQ, 0.0, f"log-link({label})")
        vmap.recon[x_id] = LinearExpr.from_pairs(
            (zid, float(2 ** k)) for k, zid in enumerate(z))
        b.add_row([(x_id, 1.0)], Sense.LE, float(a), f"log-cap({label})")
        if y_id is not None:
            b.add_row([(zid, 1.0) for zid in z] + [(y_id, -1.0)], Sense.GE, 0.0,
                      f"log-y({label})")
    else:
        raise ValidationError(f"unknown scheme {scheme}")
    return z


_FCT_KINDS = {FormulationKind.FCT, FormulationKind.FULLB, FormulationKind.AVV,
              FormulationKind.UNARYB_PLUS, FormulationKind.LOGB_PLUS,
              FormulationKind.AVV_MINUS_Z, FormulationKind.AVV_PLUS_U,
              FormulationKind.AVV_PLUS_U_MINUS_Z}
_AVV_KINDS = {FormulationKind.AVV, FormulationKind.AVV_MINUS_Z,
              FormulationKind.AVV_PLUS_U, FormulationKind.AVV_PLUS_U_MINUS_Z}


def build_fct(inst: FctInstance) -> MipModel:
    """The plain fixed-charge transportation model (setup costs on y)."""
    model, _ = build_formulation(inst, FormulationKind.FCT)
    return model


def build_formulation(inst: FctInstance | CmstInstance, kind: FormulationKind | str,
                      *, literal_flow_removal: bool = False) -> tuple[MipModel, VarMap]:
    """Build any supported formulation of an instance.

    literal_flow_removal applies to the avv-z kind only: by default the
    x-space flow rows are restored so the model stays a correct problem
    statement; the literal variant drops flow conservation entirely and
    exists for side-by-side comparison.
    """
    if isinstance(kind, str):
        kind = FormulationKind.parse(kind)
    if literal_flow_removal and kind is not FormulationKind.AVV_MINUS_Z:
        raise ValidationError("literal_flow_removal only applies to kind avv-z")
    if kind.is_cmst:
        if not isinstance(inst, CmstInstance):
            raise ValidationError(f"kind {kind.value} needs a CMST instance")
        return _build_cmst(inst, kind)
    if not isinstance(inst, FctInstance):
        raise ValidationError(f"kind {kind.value} needs an FCT instance")
    return _build_fct_family(inst, kind, literal_flow_removal)


def _build_fct_family(inst: FctInstance, kind: FormulationKind,
                      literal_flow_removal: bool) -> tuple[MipModel, VarMap]:
    inst.validate()
    n, m = inst.n_suppliers, inst.n_customers
    arcs = [(i, j) for i in range(n) for j in range(m)]
    a = inst.capacity
    b = ModelBuilder(f"{kind.value}[n{n}m{m}]")
    x_id = {}
    y_id = {}
    for i, j in arcs:
        x_id[i, j] = b.add_var(f"x_{i}_{j}", 0.0, float(a[i, j]), VarKind.CONTINUOUS,
                               tag=f"x({i},{j})")
    for i, j in arcs:
        y_id[i, j] = b.add_var(f"y_{i}_{j}", 0.0, 1.0, VarKind.BINARY, tag=f"y({i},{j})")
    b.set_objective([(y_id[i, j], float(inst.cost[i, j])) for i, j in arcs])
    vmap = VarMap(n_base=2 * len(arcs))

    x_flow = kind in {FormulationKind.FCT, FormulationKind.FULLB,
                      FormulationKind.UNARYB_PLUS, FormulationKind.LOGB_PLUS} \
        or (kind is FormulationKind.AVV_MINUS_Z and not literal_flow_removal)
    if x_flow:
        for i in range(n):
            b.add_row([(x_id[i, j], 1.0) for j in range(m)], Sense.LE,
                      float(inst.supply[i]), f"supply({i})")
        for j in range(m):
            b.add_row([(x_id[i, j], 1.0) for i in range(n)], Sense.EQ,
                      float(inst.demand[j]), f"demand({j})")

    for i, j in arcs:
        b.add_row([(y_id[i, j], 1.0), (x_id[i, j], -1.0)], Sense.LE, 0.0,
                  f"link-xy({i},{j})")
        b.add_row([(x_id[i, j], 1.0), (y_id[i, j], -float(a[i, j]))], Sense.LE, 0.0,
                  f"link-xa({i},{j})")

    z_ids: dict[tuple[int, int], list[int]] = {}
    scheme = {FormulationKind.FULLB: BinScheme.FULL,
              FormulationKind.UNARYB_PLUS: BinScheme.UNARY,
              FormulationKind.LOGB_PLUS: BinScheme.LOG}.get(kind)
    if kind in _AVV_KINDS:
        scheme = BinScheme.AVV
    if scheme is not None:
        for i, j in arcs:
            y_for_strength = y_id[i, j] if scheme is not BinScheme.FULL else None
            z_ids[i, j] = _add_selection_block(
                b, vmap, x_id=x_id[i, j], a=int(a[i, j]), scheme=scheme,
                label=f"{i},{j}", name_label=f"{i}_{j}", y_id=y_for_strength)

    if kind in {FormulationKind.AVV, FormulationKind.AVV_PLUS_U}:
        # flow conservation written on the selection variables: the copy
        # for value k moves k units
        for i in range(n):
            terms = []
            for j in range(m):
                for pos, zid in enumerate(z_ids[i, j]):
                    if pos >= 1:  # k = pos since the avv block starts at k = 0
                        terms.append((zid, float(pos)))
            b.add_row(terms, Sense.LE, float(inst.supply[i]), f"supply-z({i})")
        for j in range(m):
            terms = []
            for i in range(n):
                for pos, zid in enumerate(z_ids[i, j]):
                    if pos >= 1:
                        terms.append((zid, float(pos)))
            b.add_row(terms, Sense.EQ, float(inst.demand[j]), f"demand-z({j})")

    if kind in {FormulationKind.AVV_PLUS_U, FormulationKind.AVV_PLUS_U_MINUS_Z}:
        cap_max = int(a.max())
        u_ids: dict[tuple[int, int], int] = {}
        w_ids: dict[tuple[int, int], int] = {}
        for i in range(n):
            for k in range(1, cap_max + 1):
                js = [j for j in range(m) if a[i, j] >= k]
                if not js:
                    continue
                uid = b.add_var(f"u_{i}_{k}", 0.0, float(len(js)), VarKind.INTEGER,
                                tag=f"u({i},{k})")
                vmap.aux[uid] = AuxLink(orig=-1, scheme="aggregate-u", index=k, node=i)
                expr = LinearExpr.from_pairs((z_ids[i, j][k], 1.0) for j in js)
                vmap.agg_def[uid] = expr
                b.add_row([(uid, 1.0)] + [(t, -c) for t, c in expr.terms], Sense.EQ,
                          0.0, f"agg-u-def({i},{k})")
                u_ids[i, k] = uid
        for j in range(m):
            for k in range(1, cap_max + 1):
                is_ = [i for i in range(n) if a[i, j] >= k]
                if not is_:
                    continue
                wid = b.add_var(f"w_{j}_{k}", 0.0, float(len(is_)), VarKind.INTEGER,
                                tag=f"w({j},{k})")
                vmap.aux[wid] = AuxLink(orig=-1, scheme="aggregate-w", index=k, node=j)
                expr = LinearExpr.from_pairs((z_ids[i, j][k], 1.0) for i in is_)
                vmap.agg_def[wid] = expr
                b.add_row([(wid, 1.0)] + [(t, -c) for t, c in expr.terms], Sense.EQ,
                          0.0, f"agg-w-def({j},{k})")
                w_ids[j, k] = wid
        for i in range(n):
            terms = [(u_ids[i, k], float(k)) for k in range(1, cap_max + 1)
                     if (i, k) in u_ids]
            b.add_row(terms, Sense.LE, float(inst.supply[i]), f"agg-supply({i})")
        for j in range(m):
            terms = [(w_ids[j, k], float(k)) for k in range(1, cap_max + 1)
                     if (j, k) in w_ids]
            b.add_row(terms, Sense.EQ, float(inst.demand[j]), f"agg-demand({j})")

    model = b.build()
    vmap.check()
    return model, vmap


def _build_cmst(inst: CmstInstance, kind: FormulationKind) -> tuple[MipModel, VarMap]:
    inst.validate()
    arcs = build_multigraph(inst)
    b = ModelBuilder(f"{kind.value}[n{inst.n}C{inst.capacity}]")
    z: list[int] = []
    for arc in arcs:
        z.append(b.add_var(f"z_{arc.tail}_{arc.head}_{arc.size}", 0.0, 1.0,
                           VarKind.BINARY, tag=f"z({arc.tail},{arc.head},{arc.size})"))
    b.set_objective([(zid, float(inst.cost[arc.tail, arc.head]))
                     for zid, arc in zip(z, arcs)])
    vmap = VarMap(n_base=0)

    into: dict[int, list[int]] = {i: [] for i in range(inst.n + 1)}
    out_of: dict[int, list[int]] = {i: [] for i in range(inst.n + 1)}
    for pos, arc in enumerate(arcs):
        into[arc.head].append(pos)
        out_of[arc.tail].append(pos)

    for i in range(1, inst.n + 1):
        b.add_row([(z[p], 1.0) for p in into[i]], Sense.EQ, 1.0, f"indeg({i})")
    if kind in {FormulationKind.CMST_AVV, FormulationKind.CMST_AVV_PLUS_U}:
        for i in range(1, inst.n + 1):
            terms = [(z[p], float(arcs[p].size)) for p in into[i]]
            terms += [(z[p], -float(arcs[p].size)) for p in out_of[i]]
            b.add_row(terms, Sense.EQ, float(inst.demand[i]), f"flow-z({i})")

    if kind in {FormulationKind.CMST_AVV_PLUS_U, FormulationKind.CMST_AVV_PLUS_U_MINUS_Z}:
        g_ids: dict[tuple[int, int], int] = {}
        h_ids: dict[tuple[int, int], int] = {}
        for i in range(inst.n + 1):
            by_size_in: dict[int, list[int]] = {}
            for p in into[i]:
                by_size_in.setdefault(arcs[p].size, []).append(p)
            by_size_out: dict[int, list[int]] = {}
            for p in out_of[i]:
                by_size_out.setdefault(arcs[p].size, []).append(p)
            for k in sorted(by_size_in):
                gid = b.add_var(f"g_{i}_{k}", 0.0, float(len(by_size_in[k])),
                                VarKind.INTEGER, tag=f"g({i},{k})")
                vmap.aux[gid] = AuxLink(orig=-1, scheme="aggregate-in", index=k, node=i)
                expr = LinearExpr.from_pairs((z[p], 1.0) for p in by_size_in[k])
                vmap.agg_def[gid] = expr
                b.add_row([(gid, 1.0)] + [(t, -c) for t, c in expr.terms], Sense.EQ,
                          0.0, f"agg-g-def({i},{k})")
                g_ids[i, k] = gid
            for k in sorted(by_size_out):
                hid = b.add_var(f"h_{i}_{k}", 0.0, float(len(by_size_out[k])),
                                VarKind.INTEGER, tag=f"h({i},{k})")
                vmap.aux[hid] = AuxLink(orig=-1, scheme="aggregate-out", index=k, node=i)
                expr = LinearExpr.from_pairs((z[p], 1.0) for p in by_size_out[k])
                vmap.agg_def[hid] = expr
                b.add_row([(hid, 1.0)] + [(t, -c) for t, c in expr.terms], Sense.EQ,
                          0.0, f"agg-h-def({i},{k})")
                h_ids[i, k] = hid
        for i in range(1, inst.n + 1):
            terms = [(g_ids[i, k], 1.0) for k in range(1, inst.capacity + 1)
                     if (i, k) in g_ids]
            b.add_row(terms, Sense.EQ, 1.0, f"agg-indeg({i})")
            flow = [(g_ids[i, k], float(k)) for k in range(1, inst.capacity + 1)
                    if (i, k) in g_ids]
            flow += [(h_ids[i, k], -float(k)) for k in range(1, inst.capacity + 1)
                     if (i, k) in h_ids]
            b.add_row(flow, Sense.EQ, float(inst.demand[i]), f"agg-flow({i})")

    model = b.build()
    vmap.check()
    return model, vmap


def lift_fct_solution(model: MipModel, vmap: VarMap, base_values: np.ndarray) -> Solution:
    """Extend an integer-feasible plain-FCT point to a binarized model.

    base_values covers the shared x/y block; selection variables are set
    from the integral x values and aggregates from their defining sums.
    """
    x = np.zeros(model.num_vars)
    if vmap.n_base:
        x[:vmap.n_base] = base_values[:vmap.n_base]
    for aux_id, link in vmap.aux.items():
        if link.orig < 0:
            continue
        v = int(round(float(base_values[link.orig])))
        if link.scheme in (BinScheme.FULL.value, BinScheme.AVV.value):
            x[aux_id] = 1.0 if link.index == v else 0.0
        elif link.scheme == BinScheme.UNARY.value:
            x[aux_id] = 1.0 if v >= link.index else 0.0
        elif link.scheme == BinScheme.LOG.value:
            x[aux_id] = float((v >> (link.index - 1)) & 1)
        else:
            raise ValidationError(f"cannot lift through scheme {link.scheme!r}")
    for aux_id, expr in vmap.agg_def.items():
        x[aux_id] = expr.value(x)
    obj = model.objective.value(x)
    return Solution(values=x, objective=obj)


def project_solution(vmap: VarMap, values: np.ndarray) -> np.ndarray:
    """Truncate an extended point back to the shared leading block."""
    return np.array(values[:vmap.n_base], dtype=np.float64)
