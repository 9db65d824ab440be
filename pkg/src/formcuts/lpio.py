"""Model serialization: LP text format and a JSON dump.

The LP writer emits the classic sectioned layout (Minimize / Subject To
/ Bounds / Generals / Binaries / End) with coefficients printed at 17
significant digits so a write/parse round trip reproduces the exact
doubles. The parser accepts exactly this layout; variable order is taken
from the Bounds section, which lists every variable.
"""

from __future__ import annotations

import json

from .errors import ParseError
from .model import Constraint, LinearExpr, MipModel, ModelBuilder, Sense, Variable, VarKind

_INF = float("inf")


def _num(v: float) -> str:
    return f"{v:.17g}"


def _expr_text(expr: LinearExpr, names: list[str]) -> str:
    if not expr.terms:
        # a zero term keeps the section non-empty and parses back to nothing
        if not names:
            raise ParseError("cannot serialize a model with no variables")
        return "0 " + names[0]
    parts = []
    for k, (j, c) in enumerate(expr.terms):
        sign = "-" if c < 0 else "+"
        mag = _num(abs(c))
        if k == 0 and sign == "+":
            parts.append(f"{mag} {names[j]}")
        else:
            parts.append(f"{sign} {mag} {names[j]}")
    return " ".join(parts)


def write_lp(model: MipModel) -> str:
    names = [v.name for v in model.variables]
    out = [f"\\ {model.name}", "Minimize", f" obj: {_expr_text(model.objective, names)}",
           "Subject To"]
    for con in model.constraints:
        out.append(f" {con.tag}: {_expr_text(con.expr, names)} {con.sense.value} {_num(con.rhs)}")
    out.append("Bounds")
    for v in model.variables:
        if v.lower == -_INF and v.upper == _INF:
            out.append(f" {v.name} free")
        elif v.upper == _INF:
            out.append(f" {v.name} >= {_num(v.lower)}")
        elif v.lower == -_INF:
            out.append(f" {v.name} <= {_num(v.upper)}")
        else:
            out.append(f" {_num(v.lower)} <= {v.name} <= {_num(v.upper)}")
    generals = [v.name for v in model.variables if v.kind is VarKind.INTEGER]
    if generals:
        out.append("Generals")
        out.append(" " + " ".join(generals))
    binaries = [v.name for v in model.variables if v.kind is VarKind.BINARY]
    if binaries:
        out.append("Binaries")
        out.append(" " + " ".join(binaries))
    out.append("End")
    return "\n".join(out) + "\n"


def _split_sections(text: str) -> dict[str, list[str]]:
    headers = {"minimize": "minimize", "subject to": "rows", "bounds": "bounds",
               "generals": "generals", "binaries": "binaries", "end": "end"}
    sections: dict[str, list[str]] = {v: [] for v in headers.values()}
    current = None
    for raw in text.splitlines():
        line = raw.split("\\")[0].rstrip()
        if not line.strip():
            continue
        key = line.strip().lower()
        if key in headers:
            current = headers[key]
            continue
        if current is None:
            raise ParseError(f"content before any section header: {line!r}")
        sections[current].append(line.strip())
    if not sections["minimize"] and current is None:
        raise ParseError("empty LP text")
    return sections


def _parse_expr_tokens(tokens: list[str], coeffs: dict[str, float]) -> None:
    """Accumulate 'sign magnitude name' triples; coefficient may be omitted."""
    sign = 1.0
    pending: float | None = None
    for tok in tokens:
        if tok in ("+", "-"):
            if pending is not None:
                raise ParseError(f"operator {tok!r} after a dangling coefficient")
            sign = 1.0 if tok == "+" else -1.0
        else:
            try:
                val = float(tok)
            except ValueError:
                coeff = sign * (1.0 if pending is None else pending)
                coeffs[tok] = coeffs.get(tok, 0.0) + coeff
                sign, pending = 1.0, None
            else:
                if pending is not None:
                    raise ParseError(f"two consecutive numbers near {tok!r}")
                pending = val
    if pending is not None:
        raise ParseError("dangling coefficient at end of expression")


def parse_lp(text: str) -> MipModel:
    """Parse the package's LP layout back into a model."""
    sections = _split_sections(text)
    name = "model"
    for raw in text.splitlines():
        if raw.startswith("\\"):
            name = raw[1:].strip() or name
            break

    # Bounds section defines the variable universe and its order.
    bounds: dict[str, tuple[float, float]] = {}
    for line in sections["bounds"]:
        toks = line.split()
        if len(toks) == 2 and toks[1].lower() == "free":
            bounds[toks[0]] = (-_INF, _INF)
        elif len(toks) == 3 and toks[1] == ">=":
            bounds[toks[0]] = (float(toks[2]), _INF)
        elif len(toks) == 3 and toks[1] == "<=":
            bounds[toks[0]] = (-_INF, float(toks[2]))
        elif len(toks) == 5 and toks[1] == "<=" and toks[3] == "<=":
            bounds[toks[2]] = (float(toks[0]), float(toks[4]))
        else:
            raise ParseError(f"unrecognized bounds line: {line!r}")
    if not bounds:
        raise ParseError("missing Bounds section")
    generals = set(" ".join(sections["generals"]).split())
    binaries = set(" ".join(sections["binaries"]).split())

    builder = ModelBuilder(name)
    ids: dict[str, int] = {}
    for vname, (lo, hi) in bounds.items():
        kind = (VarKind.BINARY if vname in binaries
                else VarKind.INTEGER if vname in generals else VarKind.CONTINUOUS)
        ids[vname] = builder.add_var(vname, lo, hi, kind)

    def expr_from(tokens: list[str]) -> LinearExpr:
        acc: dict[str, float] = {}
        _parse_expr_tokens(tokens, acc)
        missing = [v for v in acc if v not in ids]
        if missing:
            raise ParseError(f"variables missing from Bounds: {missing}")
        return LinearExpr.from_pairs((ids[v], c) for v, c in acc.items())

    obj_tokens: list[str] = []
    for line in sections["minimize"]:
        body = line.split(":", 1)[1] if ":" in line else line
        obj_tokens.extend(body.split())
    builder.set_objective(expr_from(obj_tokens))

    for line in sections["rows"]:
        if ":" not in line:
            raise ParseError(f"row without a name: {line!r}")
        tag, body = line.split(":", 1)
        toks = body.split()
        sense_pos = [k for k, t in enumerate(toks) if t in ("<=", ">=", "=")]
        if len(sense_pos) != 1:
            raise ParseError(f"row {tag.strip()!r}: expected exactly one sense")
        k = sense_pos[0]
        if k != len(toks) - 2:
            raise ParseError(f"row {tag.strip()!r}: rhs must be a single number")
        sense = Sense(toks[k])
        rhs = float(toks[-1])
        builder.add_row(expr_from(toks[:k]), sense, rhs, tag.strip())
    return builder.build()


def model_to_json(model: MipModel) -> str:
    doc = {
        "name": model.name,
        "variables": [
            {"name": v.name, "lower": v.lower, "upper": v.upper,
             "kind": v.kind.value, "tag": v.tag}
            for v in model.variables],
        "constraints": [
            {"tag": c.tag, "sense": c.sense.value, "rhs": c.rhs,
             "terms": [[j, coef] for j, coef in c.expr.terms]}
            for c in model.constraints],
        "objective": [[j, coef] for j, coef in model.objective.terms],
    }
    return json.dumps(doc, indent=1)


def model_from_json(text: str) -> MipModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad model JSON: {exc}") from exc
    try:
        variables = tuple(
            Variable(i, d["name"], float(d["lower"]), float(d["upper"]),
                     VarKind(d["kind"]), d.get("tag", ""))
            for i, d in enumerate(doc["variables"]))
        constraints = tuple(
            Constraint(LinearExpr.from_pairs((int(j), float(c)) for j, c in d["terms"]),
                       Sense(d["sense"]), float(d["rhs"]), d["tag"])
            for d in doc["constraints"])
        objective = LinearExpr.from_pairs((int(j), float(c)) for j, c in doc["objective"])
        model = MipModel(doc.get("name", "model"), variables, constraints, objective)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad model JSON structure: {exc}") from exc
    model.validate()
    return model
