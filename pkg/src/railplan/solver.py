"""Reference solvers for the assignment model.

``solve_bb`` is a deterministic branch-and-bound over LP relaxations
(scipy's HiGHS simplex does the bounding), branching on the most fractional
variable with ties to the lowest variable index, depth-first with periodic
best-first restarts.  ``solve_enumeration`` is an independent oracle for
micro models: an exhaustive scan of the integer box with interval pruning,
used as ground truth in tests.  Feasibility and objective evaluation are
exact integer arithmetic so proven optima can be compared across models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from time import perf_counter

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .model import InfeasibleStartError, MilpModel, infer_gate_values

INT_TOL = 1e-6
FEAS_TOL = 1e-7


class EnumerationCapError(RuntimeError):
    """Raised when a model exceeds the enumeration oracle's variable cap."""


class MissingVariableError(KeyError):
    """Raised when an assignment does not cover every model variable."""


@dataclass(frozen=True)
class ConstraintViolation:
    tag: str
    slack: float
    message: str = ""

    def __str__(self) -> str:
        return f"{self.tag} (slack {self.slack:g}) {self.message}"


@dataclass(frozen=True)
class SolveBudget:
    max_seconds: float = 120.0
    max_nodes: int = 1_000_000
    rel_gap: float = 0.0

    def __post_init__(self):
        if self.max_seconds <= 0 or self.max_nodes <= 0 or self.rel_gap < 0:
            raise ValueError("budget fields must be positive (rel_gap >= 0)")


@dataclass
class Solution:
    status: str  # optimal | feasible | infeasible | budget_exceeded
    values: dict[str, int] | None
    objective: float | int | None
    bounds: tuple[float, float]
    node_count: int = 0
    wall_time: float = 0.0


# ---------------------------------------------------------------------------
# Exact evaluation


def evaluate_objective(m: MilpModel, values: dict[str, int]):
    """Objective value plus the four-term cost decomposition.

    Returns ``(total, breakdown)``; the deadhead bucket absorbs the constant
    offset so the buckets sum to the total.
    """
    for var in m.variables:
        if var.id not in values:
            raise MissingVariableError(var.id)
    total = m.offset
    for var_id, coef in m.objective.items():
        total += coef * values[var_id]
    breakdown: dict[str, float | int] = {}
    for category, coefs in m.decomposition.items():
        breakdown[category] = sum(coef * values[v] for v, coef in coefs.items())
    if breakdown:
        breakdown["deadhead"] = breakdown.get("deadhead", 0) + m.offset
    return total, breakdown


def check_feasibility(m: MilpModel, values: dict[str, int]) -> list[ConstraintViolation]:
    """Every bound, integrality and constraint check; empty list iff feasible."""
    out: list[ConstraintViolation] = []
    net = m.network
    for var in m.variables:
        if var.id not in values:
            raise MissingVariableError(var.id)
        v = values[var.id]
        if v != int(round(v)):
            out.append(ConstraintViolation(f"int:{var.id}", 0.0, f"value {v} not integral"))
            continue
        if not (var.lower <= v <= var.upper):
            if (
                var.family == "x"
                and net is not None
                and var.subject in net.arcs
                and net.arcs[var.subject].kind == "train"
            ):
                tag = f"cap:{var.subject}"
                msg = f"power window [{var.lower}, {var.upper}] violated by {v}"
            else:
                tag = f"bounds:{var.id}"
                msg = f"bounds [{var.lower}, {var.upper}] violated by {v}"
            out.append(ConstraintViolation(tag, min(v - var.lower, var.upper - v), msg))
    for con in m.constraints:
        lhs = sum(coef * values[var] for var, coef in con.terms)
        scale = max(1.0, abs(float(con.rhs)))
        if con.sense == "<=":
            slack = con.rhs - lhs
        elif con.sense == ">=":
            slack = lhs - con.rhs
        else:
            slack = -abs(lhs - con.rhs)
        if slack < -FEAS_TOL * scale:
            out.append(ConstraintViolation(con.tag, slack, f"lhs={lhs} {con.sense} {con.rhs}"))
    return out


# ---------------------------------------------------------------------------
# LP relaxation machinery


class _LpData:
    def __init__(self, m: MilpModel):
        self.n = len(m.variables)
        index = {v.id: i for i, v in enumerate(m.variables)}
        self.c = np.zeros(self.n)
        for var_id, coef in m.objective.items():
            self.c[index[var_id]] = coef

        eq_rows, eq_rhs, ub_rows, ub_rhs = [], [], [], []
        for con in m.constraints:
            cols = [(index[v], coef) for v, coef in con.terms]
            if con.sense == "=":
                eq_rows.append(cols)
                eq_rhs.append(con.rhs)
            elif con.sense == "<=":
                ub_rows.append(cols)
                ub_rhs.append(con.rhs)
            else:
                ub_rows.append([(j, -coef) for j, coef in cols])
                ub_rhs.append(-con.rhs)

        def pack(rows):
            data, ri, ci = [], [], []
            for r, cols in enumerate(rows):
                for j, coef in cols:
                    ri.append(r)
                    ci.append(j)
                    data.append(float(coef))
            return sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), self.n))

        self.A_eq = pack(eq_rows) if eq_rows else None
        self.b_eq = np.array(eq_rhs, dtype=float) if eq_rows else None
        self.A_ub = pack(ub_rows) if ub_rows else None
        self.b_ub = np.array(ub_rhs, dtype=float) if ub_rows else None
        self.lo = np.array([v.lower for v in m.variables], dtype=float)
        self.hi = np.array([v.upper for v in m.variables], dtype=float)

    def solve(self, lo: np.ndarray, hi: np.ndarray):
        if np.any(lo > hi):
            return None, None
        res = linprog(
            self.c,
            A_ub=self.A_ub,
            b_ub=self.b_ub,
            A_eq=self.A_eq,
            b_eq=self.b_eq,
            bounds=np.column_stack((lo, hi)),
            method="highs",
        )
        if res.status == 2:
            return None, None
        if res.status != 0:
            raise RuntimeError(f"LP relaxation failed with status {res.status}: {res.message}")
        return float(res.fun), res.x


@dataclass
class _Node:
    bound: float
    depth: int
    lo: np.ndarray = field(repr=False, default=None)
    hi: np.ndarray = field(repr=False, default=None)


def _try_repair(m: MilpModel, x: np.ndarray) -> dict[str, int] | None:
    """Complete near-integral flows into a feasible candidate.

    Given integral x values, activation binaries and light-train counts have
    cheapest feasible completions (y = 1 iff flow positive, u = ceil(x/rho),
    gates from event usage); the candidate is verified exactly before use.
    """
    net = m.network
    if net is None:
        return None
    rho = net.instance.costs.rho_u
    values: dict[str, int] = {}
    for i, var in enumerate(m.variables):
        if var.family != "x":
            continue
        v = x[i]
        if abs(v - round(v)) > INT_TOL:
            return None
        values[var.id] = int(round(v))
    for var in m.variables:
        if var.family in ("yso", "ypu"):
            values[var.id] = int(values.get(f"x:{var.subject}", 0) > 0)
        elif var.family == "u":
            values[var.id] = math.ceil(values.get(f"x:{var.subject}", 0) / rho)
    values.update(infer_gate_values(m, values))
    if len(values) != len(m.variables):
        return None
    if check_feasibility(m, values):
        return None
    return values


def solve_bb(m: MilpModel, budget: SolveBudget | None = None) -> Solution:
    """Branch and bound with LP bounding; proves optimality when budget allows.

    Deterministic for a fixed node budget: branching picks the most
    fractional variable (ties to the lowest index), children are explored
    floor side first, and every 256 nodes the open list is re-sorted so the
    best bound is explored next.
    """
    budget = budget or SolveBudget()
    t0 = perf_counter()
    lp = _LpData(m)
    n = lp.n

    incumbent: dict[str, int] | None = None
    incumbent_obj = math.inf
    if m.start is not None:
        viols = check_feasibility(m, m.start)
        if viols:
            raise InfeasibleStartError([v.tag for v in viols])
        incumbent = dict(m.start)
        incumbent_obj, _ = evaluate_objective(m, incumbent)

    stack = [_Node(bound=-math.inf, depth=0, lo=lp.lo.copy(), hi=lp.hi.copy())]
    node_count = 0
    stopped = None

    # With an all-integer objective, no subtree whose bound exceeds
    # incumbent - 1 can hold a strictly better solution.
    integral_objective = float(m.offset).is_integer() and all(
        float(c).is_integer() for c in m.objective.values()
    )

    def prune_eps() -> float:
        if incumbent is None:
            return 0.0
        if integral_objective:
            return 1.0 - 1e-9
        return 1e-6 * (1.0 + abs(incumbent_obj))

    while stack:
        if node_count >= budget.max_nodes:
            stopped = "nodes"
            break
        if perf_counter() - t0 > budget.max_seconds:
            stopped = "time"
            break
        if node_count and node_count % 256 == 0:
            stack.sort(key=lambda nd: (-nd.bound, nd.depth))
        node = stack.pop()
        if incumbent is not None and node.bound >= incumbent_obj - prune_eps():
            continue
        obj, x = lp.solve(node.lo, node.hi)
        node_count += 1
        if obj is None:
            continue
        bound = obj + float(m.offset)
        if incumbent is not None and bound >= incumbent_obj - prune_eps():
            continue

        frac = np.abs(x - np.round(x))
        fractional = np.where(frac > INT_TOL)[0]
        if fractional.size == 0:
            values = {var.id: int(round(x[i])) for i, var in enumerate(m.variables)}
            if not check_feasibility(m, values):
                exact, _ = evaluate_objective(m, values)
                if exact < incumbent_obj:
                    incumbent, incumbent_obj = values, exact
                continue
            # Numerically integral but exactly infeasible: split on the first
            # unfixed variable to make progress.
            unfixed = np.where(node.lo < node.hi)[0]
            if unfixed.size == 0:
                continue
            j = int(unfixed[0])
            split = math.floor(x[j])
            split = min(max(split, int(node.lo[j])), int(node.hi[j]) - 1)
        else:
            repaired = _try_repair(m, x)
            if repaired is not None:
                exact, _ = evaluate_objective(m, repaired)
                if exact < incumbent_obj:
                    incumbent, incumbent_obj = repaired, exact
                if bound >= incumbent_obj - prune_eps():
                    continue
            j = min(fractional, key=lambda i: (abs(frac[i] - 0.5), m.variables[i].id))
            j = int(j)
            split = math.floor(x[j])
            split = min(max(split, int(node.lo[j])), int(node.hi[j]) - 1)

        hi_lo = node.lo.copy()
        hi_lo[j] = split + 1
        hi_child = _Node(bound=bound, depth=node.depth + 1, lo=hi_lo, hi=node.hi)
        lo_hi = node.hi.copy()
        lo_hi[j] = split
        lo_child = _Node(bound=bound, depth=node.depth + 1, lo=node.lo, hi=lo_hi)
        stack.append(hi_child)
        stack.append(lo_child)

        if budget.rel_gap > 0 and incumbent is not None and stack:
            open_lb = min(nd.bound for nd in stack)
            if open_lb > -math.inf:
                gap = (incumbent_obj - open_lb) / max(1e-9, abs(incumbent_obj))
                if gap <= budget.rel_gap:
                    stopped = "gap"
                    break

    wall = perf_counter() - t0
    if stopped is None:
        if incumbent is None:
            return Solution("infeasible", None, None, (math.inf, math.inf), node_count, wall)
        return Solution("optimal", incumbent, incumbent_obj, (incumbent_obj, incumbent_obj), node_count, wall)

    open_bounds = [nd.bound for nd in stack]
    lower = min(open_bounds) if open_bounds else (incumbent_obj if incumbent is not None else -math.inf)
    lower = min(lower, incumbent_obj) if incumbent is not None else lower
    status = "feasible" if stopped == "gap" else "budget_exceeded"
    return Solution(
        status,
        incumbent,
        incumbent_obj if incumbent is not None else None,
        (lower, incumbent_obj if incumbent is not None else math.inf),
        node_count,
        wall,
    )


# ---------------------------------------------------------------------------
# Enumeration oracle


def solve_enumeration(m: MilpModel, cap: int = 24) -> Solution:
    """Exhaustive scan over the box of variable bounds.

    Interval propagation discards provably infeasible assignments early but
    never an optimal one, so the returned optimum is ground truth.  Intended
    for micro models only; refuses models beyond ``cap`` variables.
    """
    t0 = perf_counter()
    n = len(m.variables)
    if n > cap:
        raise EnumerationCapError(f"enumeration oracle capped at {cap} variables, model has {n}")
    for var in m.variables:
        if not (math.isfinite(var.lower) and math.isfinite(var.upper)):
            raise EnumerationCapError(f"variable {var.id} has unbounded range")

    index = {v.id: i for i, v in enumerate(m.variables)}
    cons = [
        ([(index[v], coef) for v, coef in c.terms], c.sense, c.rhs)
        for c in m.constraints
    ]
    obj = [(index[v], coef) for v, coef in m.objective.items()]

    best_vals: list[int] | None = None
    best_obj = math.inf
    visited = 0

    def propagate(lo: list, hi: list) -> bool:
        changed = True
        while changed:
            changed = False
            for terms, sense, rhs in cons:
                min_l = sum(c * (lo[j] if c > 0 else hi[j]) for j, c in terms)
                max_l = sum(c * (hi[j] if c > 0 else lo[j]) for j, c in terms)
                if sense in ("<=", "=") and min_l > rhs + 1e-9:
                    return False
                if sense in (">=", "=") and max_l < rhs - 1e-9:
                    return False
                for j, c in terms:
                    if c > 0:
                        rest_min = min_l - c * lo[j]
                        rest_max = max_l - c * hi[j]
                    else:
                        rest_min = min_l - c * hi[j]
                        rest_max = max_l - c * lo[j]
                    if sense in ("<=", "="):
                        limit = (rhs - rest_min) / c
                        if c > 0 and limit < hi[j] - 1e-9:
                            hi[j] = math.floor(limit + 1e-9)
                            changed = True
                        elif c < 0 and limit > lo[j] + 1e-9:
                            lo[j] = math.ceil(limit - 1e-9)
                            changed = True
                    if sense in (">=", "="):
                        limit = (rhs - rest_max) / c
                        if c > 0 and limit > lo[j] + 1e-9:
                            lo[j] = math.ceil(limit - 1e-9)
                            changed = True
                        elif c < 0 and limit < hi[j] - 1e-9:
                            hi[j] = math.floor(limit + 1e-9)
                            changed = True
                    if lo[j] > hi[j]:
                        return False
        min_obj = m.offset + sum(c * (lo[j] if c > 0 else hi[j]) for j, c in obj)
        if best_vals is not None and min_obj > best_obj + 1e-9:
            return False
        return True

    def dfs(lo: list, hi: list) -> None:
        nonlocal best_vals, best_obj, visited
        visited += 1
        if visited > 20_000_000:
            raise RuntimeError("enumeration oracle exceeded its expansion guard")
        if not propagate(lo, hi):
            return
        open_vars = [(hi[j] - lo[j], j) for j in range(n) if lo[j] < hi[j]]
        if not open_vars:
            value = m.offset + sum(c * lo[j] for j, c in obj)
            if value < best_obj:
                best_obj = value
                best_vals = list(lo)
            return
        _, j = min(open_vars)
        for v in range(lo[j], hi[j] + 1):
            nlo, nhi = list(lo), list(hi)
            nlo[j] = nhi[j] = v
            dfs(nlo, nhi)

    dfs([v.lower for v in m.variables], [v.upper for v in m.variables])
    wall = perf_counter() - t0
    if best_vals is None:
        return Solution("infeasible", None, None, (math.inf, math.inf), visited, wall)
    values = {v.id: best_vals[i] for i, v in enumerate(m.variables)}
    return Solution("optimal", values, best_obj, (best_obj, best_obj), visited, wall)


# ---------------------------------------------------------------------------
# Solution files


def solution_to_dict(sol: Solution, model: MilpModel | None = None) -> dict:
    decomposition = None
    if model is not None and sol.values is not None:
        _, decomposition = evaluate_objective(model, sol.values)
    return {
        "status": sol.status,
        "objective": sol.objective,
        "bounds": [None if math.isinf(b) else b for b in sol.bounds],
        "node_count": sol.node_count,
        "wall_time": sol.wall_time,
        "values": sol.values,
        "decomposition": decomposition,
    }


def save_solution(sol: Solution, path, model: MilpModel | None = None) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        json.dump(solution_to_dict(sol, model), fh, indent=2)
        fh.write("\n")


def load_solution(path) -> Solution:
    import json

    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    raw_bounds = data.get("bounds") or [None, None]
    lo = -math.inf if raw_bounds[0] is None else raw_bounds[0]
    hi = math.inf if raw_bounds[1] is None else raw_bounds[1]
    values = data.get("values")
    if values is not None:
        values = {k: int(v) for k, v in values.items()}
    return Solution(
        status=data["status"],
        values=values,
        objective=data.get("objective"),
        bounds=(lo, hi),
        node_count=data.get("node_count", 0),
        wall_time=data.get("wall_time", 0.0),
    )
