"""Problem instances: fixed-charge transportation and capacitated MST.

The transportation generator is fully deterministic given (n, B, r,
seed): supplies and raw demands are uniform on {1..B}, demands are
rescaled so they sum to round-half-up(r * total supply) with a unit-step
repair loop, and arc costs are uniform on {1..100}. Draw order is fixed:
supplies, raw demands, repair picks, costs.

CMST instances carry a root vertex 0, per-vertex demands (root demand
0), a vehicle capacity C, and a dense cost matrix over all vertices.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .rng import SplitMix64, round_half_up

COST_MAX = 100


@dataclass
class FctInstance:
    """n_suppliers x n_customers fixed-charge transportation data."""

    n_suppliers: int
    n_customers: int
    supply: np.ndarray
    demand: np.ndarray
    cost: np.ndarray      # fixed charge per arc, n_suppliers x n_customers
    capacity: np.ndarray  # a_ij = min(s_i, d_j)
    meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        n, m = self.n_suppliers, self.n_customers
        if n < 1 or m < 1:
            raise ValidationError("need at least one supplier and one customer")
        if self.supply.shape != (n,) or self.demand.shape != (m,):
            raise ValidationError("supply/demand shape mismatch")
        if self.cost.shape != (n, m) or self.capacity.shape != (n, m):
            raise ValidationError("cost/capacity shape mismatch")
        if (self.supply < 1).any() or (self.demand < 1).any():
            raise ValidationError("supplies and demands must be >= 1")
        if int(self.demand.sum()) > int(self.supply.sum()):
            raise ValidationError("total demand exceeds total supply")
        expected = np.minimum.outer(self.supply, self.demand)
        if not np.array_equal(self.capacity, expected):
            raise ValidationError("capacity must equal min(supply_i, demand_j) per arc")
        if (self.cost < 0).any():
            raise ValidationError("costs must be nonnegative")


@dataclass
class CmstInstance:
    """Rooted CMST data: vertex 0 is the root, demands are per vertex."""

    n: int              # number of non-root vertices; vertex ids 0..n
    capacity: int
    demand: np.ndarray  # length n + 1, demand[0] == 0
    cost: np.ndarray    # (n + 1) x (n + 1)
    meta: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.n < 1:
            raise ValidationError("need at least one non-root vertex")
        v = self.n + 1
        if self.demand.shape != (v,):
            raise ValidationError("demand vector must cover root + all vertices")
        if self.cost.shape != (v, v):
            raise ValidationError("cost matrix must be (n+1) x (n+1)")
        if self.demand[0] != 0:
            raise ValidationError("root demand must be 0")
        if (self.demand[1:] <= 0).any():
            raise ValidationError("non-root demands must be positive")
        if self.capacity < int(self.demand[1:].max(initial=0)):
            raise ValidationError("capacity below the largest single demand")


@dataclass(frozen=True)
class MultiArc:
    """One copy (tail, head)^size of a digraph arc; size is the exact
    demand carried into the head's subtree when the copy is selected."""

    tail: int
    head: int
    size: int


def generate_fct(n: int, big_b: int, r: float, seed: int) -> FctInstance:
    """Generate a square n x n fixed-charge transportation instance.

    Total demand is forced to round-half-up(r * total supply) by uniform
    unit repairs clamped to [1, B]. Raises ValidationError when the
    target is below n (each demand must stay >= 1).
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if big_b < 1:
        raise ValidationError("B must be >= 1")
    if not 0.0 < r < 1.0:
        raise ValidationError("r must be in (0, 1)")
    gen = SplitMix64(seed)
    supply = np.array([gen.randint(1, big_b) for _ in range(n)], dtype=np.int64)
    demand = np.array([gen.randint(1, big_b) for _ in range(n)], dtype=np.int64)
    target = int(round_half_up(r * int(supply.sum())))
    if target < n:
        raise ValidationError(
            f"round(r * sum supply) = {target} < n = {n}: demands cannot all stay >= 1")
    # proportional rescale, then unit repairs on uniformly chosen customers
    raw_total = int(demand.sum())
    demand = np.array(
        [min(big_b, max(1, int(round_half_up(d * target / raw_total)))) for d in demand],
        dtype=np.int64)
    while int(demand.sum()) != target:
        j = gen.randint(0, n - 1)
        if demand.sum() < target and demand[j] < big_b:
            demand[j] += 1
        elif demand.sum() > target and demand[j] > 1:
            demand[j] -= 1
    cost = np.array([[gen.randint(1, COST_MAX) for _ in range(n)] for _ in range(n)],
                    dtype=np.int64)
    inst = FctInstance(
        n_suppliers=n, n_customers=n, supply=supply, demand=demand, cost=cost,
        capacity=np.minimum.outer(supply, demand),
        meta={"B": big_b, "r": r, "seed": seed})
    inst.validate()
    return inst


class CmstFormat(enum.Enum):
    ORLIB = "orlib"
    JSON = "json"


def parse_cmst(text: str, fmt: CmstFormat | str, capacity: int | None = None) -> CmstInstance:
    """Parse CMST text in the OR-Library tc/te layout or native JSON.

    The tc/te layout expected here: a node-count header n (root not
    counted), then (n+1)^2 whitespace-separated integers giving the
    symmetric cost matrix row-major with the central vertex first, then
    optionally a trailing root index (remapped to position 0). Demands
    are unitary; capacity comes from the `capacity` argument. Native
    JSON carries capacity and demands itself.
    """
    fmt = CmstFormat(fmt) if not isinstance(fmt, CmstFormat) else fmt
    if fmt is CmstFormat.JSON:
        inst = load_instance_text(text)
        if not isinstance(inst, CmstInstance):
            raise ParseError("JSON payload is not a CMST instance")
        return inst

    tokens = text.split()
    if not tokens:
        raise ParseError("empty file: missing node-count header")
    try:
        values = [int(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"non-integer token in cost data: {exc}") from exc
    n = values[0]
    if n < 1:
        raise ParseError(f"node count header must be >= 1, got {n}")
    need = (n + 1) * (n + 1)
    body = values[1:]
    if len(body) < need:
        raise ParseError(
            f"truncated cost matrix: expected {need} entries for {n}+root vertices, "
            f"found {len(body)}")
    cost = np.array(body[:need], dtype=np.int64).reshape(n + 1, n + 1)
    rest = body[need:]
    root = 0
    if len(rest) == 1:
        root = rest[0]
        if not 0 <= root <= n:
            raise ParseError(f"root index {root} out of range 0..{n}")
    elif len(rest) > 1:
        raise ParseError(f"{len(rest)} unexpected trailing tokens after cost matrix")
    if root != 0:
        order = [root] + [v for v in range(n + 1) if v != root]
        cost = cost[np.ix_(order, order)]
    # both arc directions must carry the symmetric edge cost; accept a
    # file that fills only one triangle and mirror it
    if not np.array_equal(cost, cost.T):
        lower_empty = not cost[np.tril_indices(n + 1, -1)].any()
        upper_empty = not cost[np.triu_indices(n + 1, 1)].any()
        if lower_empty or upper_empty:
            cost = np.maximum(cost, cost.T)
        else:
            raise ParseError("cost matrix is neither symmetric nor one-triangle")
    if capacity is None:
        raise ValidationError("tc/te files carry no capacity: pass one (sidecar/flag)")
    demand = np.ones(n + 1, dtype=np.int64)
    demand[0] = 0
    inst = CmstInstance(n=n, capacity=int(capacity), demand=demand, cost=cost)
    inst.validate()
    return inst


def build_multigraph(inst: CmstInstance) -> list[MultiArc]:
    """Enumerate arc copies (i, j)^k.

    Copies exist for every ordered pair i != j with j != root, with
    sizes k = 1 .. C - d_i (root demand counts as 0). Order is
    deterministic: tails ascending, heads ascending, sizes ascending.
    """
    inst.validate()
    arcs: list[MultiArc] = []
    for i in range(inst.n + 1):
        k_max = inst.capacity - int(inst.demand[i])
        for j in range(1, inst.n + 1):
            if j == i:
                continue
            for k in range(1, k_max + 1):
                arcs.append(MultiArc(i, j, k))
    return arcs


def save_instance(inst: FctInstance | CmstInstance, path: str | Path) -> None:
    Path(path).write_text(instance_to_json(inst))


def instance_to_json(inst: FctInstance | CmstInstance) -> str:
    if isinstance(inst, FctInstance):
        doc = {
            "type": "fct",
            "n_suppliers": inst.n_suppliers,
            "n_customers": inst.n_customers,
            "supply": inst.supply.tolist(),
            "demand": inst.demand.tolist(),
            "cost": inst.cost.tolist(),
            "capacity": inst.capacity.tolist(),
            "meta": inst.meta,
        }
    else:
        doc = {
            "type": "cmst",
            "n": inst.n,
            "capacity": inst.capacity,
            "demand": inst.demand.tolist(),
            "cost": inst.cost.tolist(),
            "meta": inst.meta,
        }
    return json.dumps(doc, indent=1)


def load_instance_text(text: str) -> FctInstance | CmstInstance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad instance JSON: {exc}") from exc
    kind = doc.get("type")
    try:
        if kind == "fct":
            inst: FctInstance | CmstInstance = FctInstance(
                n_suppliers=int(doc["n_suppliers"]),
                n_customers=int(doc["n_customers"]),
                supply=np.array(doc["supply"], dtype=np.int64),
                demand=np.array(doc["demand"], dtype=np.int64),
                cost=np.array(doc["cost"], dtype=np.int64),
                capacity=np.array(doc["capacity"], dtype=np.int64),
                meta=doc.get("meta", {}))
        elif kind == "cmst":
            inst = CmstInstance(
                n=int(doc["n"]),
                capacity=int(doc["capacity"]),
                demand=np.array(doc["demand"], dtype=np.int64),
                cost=np.array(doc["cost"], dtype=np.int64),
                meta=doc.get("meta", {}))
        else:
            raise ParseError(f"unknown instance type {kind!r} (want 'fct' or 'cmst')")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"bad instance JSON structure: {exc}") from exc
    inst.validate()
    return inst


def load_instance(path: str | Path) -> FctInstance | CmstInstance:
    return load_instance_text(Path(path).read_text())


def bundled_cmst20() -> CmstInstance:
    """The shipped 20-vertex unit-demand CMST fixture (C = 5).

    Its meta block records a best-known objective computed with this
    package's cut loop plus branch and bound.
    """
    text = resources.files("formcuts").joinpath("data/cmst20.json").read_text()
    inst = load_instance_text(text)
    assert isinstance(inst, CmstInstance)
    return inst
