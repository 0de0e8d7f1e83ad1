"""Free-format MPS export and import.

Row names are the model's constraint tags and column names are variable ids,
so external tooling can map rows back to the formulation.  Output is
byte-deterministic for a fixed model.  Minimization is implied (no OBJSENSE
record); the objective constant is stored, by the usual convention, as the
negated RHS entry of the objective row.  Every variable appears in COLUMNS
(a zero objective entry is emitted for otherwise empty columns) so the
variable order round-trips exactly.
"""

from __future__ import annotations

from .model import LinearConstraint, MilpModel, VarRef

OBJ_ROW = "OBJ"
_SENSE_TO_ROW = {"=": "E", "<=": "L", ">=": "G"}
_ROW_TO_SENSE = {v: k for k, v in _SENSE_TO_ROW.items()}


def _fmt(value) -> str:
    if isinstance(value, bool):
        raise TypeError("boolean coefficient")
    if isinstance(value, int):
        return str(value)
    f = float(value)
    if f.is_integer():
        return str(int(f))
    return repr(f)


def _num(token: str):
    try:
        return int(token)
    except ValueError:
        return float(token)


def export_mps(m: MilpModel, path) -> None:
    lines = [f"NAME {m.name}"]
    lines.append("ROWS")
    lines.append(f" N {OBJ_ROW}")
    for con in m.constraints:
        lines.append(f" {_SENSE_TO_ROW[con.sense]} {con.tag}")

    entries: dict[str, list[tuple[str, object]]] = {v.id: [] for v in m.variables}
    for var_id, coef in m.objective.items():
        entries[var_id].append((OBJ_ROW, coef))
    for con in m.constraints:
        for var_id, coef in con.terms:
            entries[var_id].append((con.tag, coef))

    lines.append("COLUMNS")
    lines.append(" MARKER 'MARKER' 'INTORG'")
    for var in m.variables:
        rows = entries[var.id]
        if not rows:
            rows = [(OBJ_ROW, 0)]
        for row, coef in rows:
            lines.append(f" {var.id} {row} {_fmt(coef)}")
    lines.append(" MARKER 'MARKER' 'INTEND'")

    lines.append("RHS")
    if m.offset != 0:
        lines.append(f" RHS {OBJ_ROW} {_fmt(-m.offset)}")
    for con in m.constraints:
        if con.rhs != 0:
            lines.append(f" RHS {con.tag} {_fmt(con.rhs)}")

    lines.append("RANGES")
    lines.append("BOUNDS")
    for var in m.variables:
        if var.binary:
            lines.append(f" BV BND {var.id}")
        else:
            lines.append(f" LO BND {var.id} {_fmt(var.lower)}")
            lines.append(f" UP BND {var.id} {_fmt(var.upper)}")
    lines.append("ENDATA")

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mps(path) -> MilpModel:
    """Parse a free-format MPS file written by :func:`export_mps`."""
    name = "model"
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    obj_row: str | None = None
    columns: dict[str, list[tuple[str, object]]] = {}
    col_order: list[str] = []
    rhs: dict[str, object] = {}
    bounds: dict[str, dict[str, object]] = {}
    section = None

    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip()
            if not line or line.startswith("*"):
                continue
            tokens = line.split()
            if not raw[0].isspace():
                section = tokens[0]
                if section == "NAME" and len(tokens) > 1:
                    name = tokens[1]
                continue
            if section == "ROWS":
                kind, row = tokens[0], tokens[1]
                if kind == "N":
                    if obj_row is None:
                        obj_row = row
                    continue
                row_sense[row] = _ROW_TO_SENSE[kind]
                row_order.append(row)
            elif section == "COLUMNS":
                if "'MARKER'" in tokens:
                    continue  # all variables are integer in this toolkit
                var = tokens[0]
                if var not in columns:
                    columns[var] = []
                    col_order.append(var)
                pairs = tokens[1:]
                for i in range(0, len(pairs), 2):
                    columns[var].append((pairs[i], _num(pairs[i + 1])))
            elif section == "RHS":
                pairs = tokens[1:]
                for i in range(0, len(pairs), 2):
                    rhs[pairs[i]] = _num(pairs[i + 1])
            elif section == "BOUNDS":
                btype, var = tokens[0], tokens[2]
                spec = bounds.setdefault(var, {})
                if btype == "BV":
                    spec["binary"] = True
                elif btype in ("LO", "LI"):
                    spec["lower"] = _num(tokens[3])
                elif btype in ("UP", "UI"):
                    spec["upper"] = _num(tokens[3])
                elif btype == "FX":
                    spec["lower"] = spec["upper"] = _num(tokens[3])

    variables = []
    for var_id in col_order:
        spec = bounds.get(var_id, {})
        binary = bool(spec.get("binary", False))
        lower = 0 if binary else int(spec.get("lower", 0))
        upper = 1 if binary else int(spec.get("upper", 0))
        family = var_id.split(":", 1)[0]
        subject = var_id.split(":", 1)[1] if ":" in var_id else var_id
        variables.append(
            VarRef(id=var_id, family=family, subject=subject, lower=lower, upper=upper, binary=binary)
        )

    objective: dict[str, object] = {}
    row_terms: dict[str, list[tuple[str, object]]] = {r: [] for r in row_order}
    for var_id in col_order:
        for row, coef in columns[var_id]:
            if row == obj_row:
                if coef != 0:
                    objective[var_id] = objective.get(var_id, 0) + coef
            else:
                row_terms[row].append((var_id, coef))

    constraints = [
        LinearConstraint(terms=tuple(row_terms[r]), sense=row_sense[r], rhs=rhs.get(r, 0), tag=r)
        for r in row_order
    ]
    offset = -rhs.get(obj_row, 0) if obj_row is not None else 0
    return MilpModel(
        name=name,
        variables=tuple(variables),
        constraints=tuple(constraints),
        objective=objective,
        offset=offset,
        decomposition={},
        network=None,
    )
