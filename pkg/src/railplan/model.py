"""Integer-programming model assembly.

The base model minimizes weekly ownership (flows crossing the horizon
boundary), deadheading, light travel (per-unit plus fixed crew charges), and
the railcar-alignment work-event penalty, subject to per-leg power windows,
flow conservation at every space-time node, fixed-charge activation of
pick-up/set-out/light arcs, and one mutual-exclusion row per intermediate
stop.  Extension configurations layer work-event restriction schemes on top:
capacity growth at baseline-active terminal-days, incremental activation of
new terminals or terminal-days, and clean-slate redesigns.

Constraint tags are stable strings (no whitespace) with grammar
``family:(n):subject`` for extension rows, where ``(n)`` is a fixed numeric
label per restriction row family, and ``family:subject`` for base rows,
e.g. ``flow:init:K0``, ``so:R:t1:1``, ``V3:(20):K2:4``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .instance import MINUTES_PER_DAY, BaselinePlan, CostParams
from .spacetime import SpaceTimeNetwork, with_light_arcs

VAR_FAMILIES = ("x", "yso", "ypu", "u", "z1", "z2", "w1", "w2")


class ConfigError(ValueError):
    """Raised when an extension configuration misses required parameters."""


class InfeasibleStartError(ValueError):
    """Raised when a warm-start assignment violates the target model."""

    def __init__(self, tags: list[str]):
        self.tags = tags
        super().__init__("warm start violates constraints: " + ", ".join(tags))


@dataclass(frozen=True)
class VarRef:
    id: str
    family: str
    subject: str
    lower: int
    upper: int
    binary: bool = False


def _canonical_terms(terms) -> tuple[tuple[str, float | int], ...]:
    merged: dict[str, float | int] = {}
    for var, coef in terms:
        merged[var] = merged.get(var, 0) + coef
    return tuple((v, c) for v, c in sorted(merged.items()) if c != 0)


@dataclass(frozen=True)
class LinearConstraint:
    terms: tuple[tuple[str, float | int], ...]
    sense: str  # "<=", "=", ">="
    rhs: float | int
    tag: str

    def __post_init__(self):
        if self.sense not in ("<=", "=", ">="):
            raise ValueError(f"bad sense {self.sense!r}")
        object.__setattr__(self, "terms", _canonical_terms(self.terms))


@dataclass(frozen=True)
class ExtensionConfig:
    version: str = "V0"
    lambda_: int = 0
    theta: float | int = 6
    alpha_c: int | None = None
    alpha_d: int | None = None
    alpha_e: int | None = None
    alpha_f: int | None = None
    baseline: BaselinePlan | None = None


@dataclass
class MilpModel:
    name: str
    variables: tuple[VarRef, ...]
    constraints: tuple[LinearConstraint, ...]
    objective: dict[str, float | int]
    offset: float | int
    decomposition: dict[str, dict[str, float | int]]
    network: SpaceTimeNetwork | None = None
    extension: ExtensionConfig | None = None
    start: dict[str, int] | None = None
    _index: dict[str, int] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {v.id: i for i, v in enumerate(self.variables)}
        declared = set(self._index)
        for c in self.constraints:
            for var, _ in c.terms:
                if var not in declared:
                    raise ValueError(f"constraint {c.tag} references undeclared {var}")
        for var in self.objective:
            if var not in declared:
                raise ValueError(f"objective references undeclared {var}")

    def var(self, var_id: str) -> VarRef:
        return self.variables[self._index[var_id]]

    def var_ids(self) -> list[str]:
        return [v.id for v in self.variables]

    def has_var(self, var_id: str) -> bool:
        return var_id in self._index

    def vars_of_family(self, family: str) -> list[VarRef]:
        return [v for v in self.variables if v.family == family]

    def extended(
        self,
        new_vars: list[VarRef],
        new_constraints: list[LinearConstraint],
        extension: ExtensionConfig,
        name_suffix: str = "",
    ) -> "MilpModel":
        return MilpModel(
            name=self.name + name_suffix,
            variables=self.variables + tuple(new_vars),
            constraints=self.constraints + tuple(new_constraints),
            objective=dict(self.objective),
            offset=self.offset,
            decomposition={k: dict(v) for k, v in self.decomposition.items()},
            network=self.network,
            extension=extension,
            start=None,
        )


# Variable-id helpers keep the naming convention in one place.


def x_id(arc_id: str) -> str:
    return f"x:{arc_id}"


def yso_id(arc_id: str) -> str:
    return f"yso:{arc_id}"


def ypu_id(arc_id: str) -> str:
    return f"ypu:{arc_id}"


def u_id(arc_id: str) -> str:
    return f"u:{arc_id}"


def rc_penalty_terms(net: SpaceTimeNetwork, costs: CostParams) -> list[tuple[str, float | int]]:
    """Work-event objective coefficients from railcar alignment.

    Per intermediate stop, the set-out and pick-up activation variables are
    priced by how the locomotive event aligns with the railcar event there:
    matched kinds cost c1, mismatched c2, stand-alone (no railcar event) c3,
    and a stop with both railcar kinds treats either locomotive event as
    aligned at c1.
    """
    coefs: dict[str, float | int] = {}
    c1, c2, c3 = costs.c1, costs.c2, costs.c3
    table = {
        "so": (c1, c2),
        "pu": (c2, c1),
        "no": (c3, c3),
        "both": (c1, c1),
    }
    for arc in net.arcs_in_order():
        if arc.kind != "transition":
            continue
        so_coef, pu_coef = table[arc.flags.category]
        so_var = yso_id(f"R:{arc.train_id}:{arc.seq}")
        pu_var = ypu_id(f"E:{arc.train_id}:{arc.seq + 1}")
        coefs[so_var] = coefs.get(so_var, 0) + so_coef
        coefs[pu_var] = coefs.get(pu_var, 0) + pu_coef
    return sorted(coefs.items())


def group_events_by_terminal_day(net: SpaceTimeNetwork) -> dict[tuple[str, int], list[tuple[str, str]]]:
    """Map (terminal, day) to the (y_so, y_pu) variable-id pairs of the
    transition stops happening there; the stop's day is taken from the train's
    arrival at the stop."""
    groups: dict[tuple[str, int], list[tuple[str, str]]] = {}
    for arc in net.arcs_in_order():
        if arc.kind != "transition":
            continue
        tail = net.nodes[arc.tail]
        key = (tail.terminal, tail.time // MINUTES_PER_DAY)
        groups.setdefault(key, []).append(
            (yso_id(f"R:{arc.train_id}:{arc.seq}"), ypu_id(f"E:{arc.train_id}:{arc.seq + 1}"))
        )
    return groups


def flow_upper_bound(net: SpaceTimeNetwork) -> int:
    """Box bound for flows outside train arcs.

    In some optimal solution every locomotive rides at least one scheduled
    leg (circulations that never touch a train can be removed at no extra
    cost), so the fleet and hence any single arc flow is at most f per leg.
    """
    f = net.instance.costs.f
    n_legs = sum(1 for a in net.arcs_in_order() if a.kind == "train")
    return max(f, f * n_legs, 1)


def build_base_model(
    net: SpaceTimeNetwork,
    light_arcs,
    costs: CostParams,
    mutual_exclusion: bool = True,
    name: str = "railplan",
) -> MilpModel:
    """Assemble the base assignment model over a network plus light arcs.

    ``light_arcs`` are merged into the network if not already present.  Light
    arc costs are recomputed here from ``costs`` and each arc's transit time,
    so sweeps can rescale rates without regenerating arcs.
    """
    if light_arcs and not any(a.kind == "light" for a in net.arcs.values()):
        net = with_light_arcs(net, light_arcs)

    variables: list[VarRef] = []
    constraints: list[LinearConstraint] = []
    objective: dict[str, float | int] = {}
    decomposition: dict[str, dict[str, float | int]] = {
        "ownership": {},
        "deadhead": {},
        "light_travel": {},
        "work_events": {},
    }
    offset: float | int = 0

    def add_obj(category: str, var: str, coef) -> None:
        if coef == 0:
            return
        objective[var] = objective.get(var, 0) + coef
        bucket = decomposition[category]
        bucket[var] = bucket.get(var, 0) + coef

    U = flow_upper_bound(net)
    u_cap = max(1, math.ceil(U / costs.rho_u))

    for arc in net.arcs_in_order():
        if arc.kind == "train":
            lower, upper = arc.b, costs.f
        else:
            lower, upper = 0, U
        xv = x_id(arc.id)
        variables.append(VarRef(id=xv, family="x", subject=arc.id, lower=lower, upper=upper))
        if arc.crossings > 0:
            add_obj("ownership", xv, costs.q * arc.crossings)
        if arc.kind == "train":
            g_l = costs.g_rate * arc.duration
            add_obj("deadhead", xv, g_l)
            offset -= g_l * arc.b
        elif arc.kind == "light":
            add_obj("light_travel", xv, costs.g_rate * arc.transit)

    for arc in net.arcs_in_order():
        if arc.kind == "arrival_ground" and arc.decision:
            variables.append(
                VarRef(id=yso_id(arc.id), family="yso", subject=arc.id, lower=0, upper=1, binary=True)
            )
        elif arc.kind == "ground_departure" and arc.decision:
            variables.append(
                VarRef(id=ypu_id(arc.id), family="ypu", subject=arc.id, lower=0, upper=1, binary=True)
            )
    for arc in net.arcs_in_order():
        if arc.kind == "light":
            uv = u_id(arc.id)
            variables.append(VarRef(id=uv, family="u", subject=arc.id, lower=0, upper=u_cap))
            add_obj("light_travel", uv, costs.e_rate * arc.transit)

    for var, coef in rc_penalty_terms(net, costs):
        add_obj("work_events", var, coef)

    for node_id in net.node_order:
        terms = [(x_id(a), 1) for a in net.in_arcs[node_id]] + [
            (x_id(a), -1) for a in net.out_arcs[node_id]
        ]
        constraints.append(LinearConstraint(terms=tuple(terms), sense="=", rhs=0, tag=f"flow:{node_id}"))

    for arc in net.arcs_in_order():
        if arc.kind == "arrival_ground" and arc.decision:
            constraints.append(
                LinearConstraint(
                    terms=((x_id(arc.id), 1), (yso_id(arc.id), -costs.f)),
                    sense="<=",
                    rhs=0,
                    tag=f"so:{arc.id}",
                )
            )
        elif arc.kind == "ground_departure" and arc.decision:
            constraints.append(
                LinearConstraint(
                    terms=((x_id(arc.id), 1), (ypu_id(arc.id), -costs.f)),
                    sense="<=",
                    rhs=0,
                    tag=f"pu:{arc.id}",
                )
            )
        elif arc.kind == "light":
            constraints.append(
                LinearConstraint(
                    terms=((x_id(arc.id), 1), (u_id(arc.id), -costs.rho_u)),
                    sense="<=",
                    rhs=0,
                    tag=f"lt:{arc.id}",
                )
            )

    if mutual_exclusion:
        # Stated stop semantics: locomotives are picked up only if none are
        # set out, so at most one of the two decision arcs per stop is used.
        for arc in net.arcs_in_order():
            if arc.kind != "transition":
                continue
            constraints.append(
                LinearConstraint(
                    terms=(
                        (yso_id(f"R:{arc.train_id}:{arc.seq}"), 1),
                        (ypu_id(f"E:{arc.train_id}:{arc.seq + 1}"), 1),
                    ),
                    sense="<=",
                    rhs=1,
                    tag=f"mutex:{arc.id}",
                )
            )

    return MilpModel(
        name=name,
        variables=tuple(variables),
        constraints=tuple(constraints),
        objective=objective,
        offset=offset,
        decomposition=decomposition,
        network=net,
    )


# ---------------------------------------------------------------------------
# Extensions


def _event_terms(pairs: list[tuple[str, str]]) -> list[tuple[str, int]]:
    terms = []
    for so_var, pu_var in pairs:
        terms.append((so_var, 1))
        terms.append((pu_var, 1))
    return terms


def _group_capacity(pairs: list[tuple[str, str]], theta: float | int) -> int:
    """Tight finite cap for one (terminal, day): at most one event per binary,
    further limited by theta when finite."""
    cap = 2 * len(pairs)
    if not math.isinf(theta):
        cap = min(cap, int(theta))
    return cap


def apply_extension(m: MilpModel, cfg: ExtensionConfig) -> MilpModel:
    """Return a new model with the work-event restriction scheme applied."""
    if cfg.version == "V0":
        return m.extended([], [], cfg)
    if m.network is None:
        raise ConfigError("extensions need the model's network for event grouping")

    inst = m.network.instance
    n_days = inst.costs.n_days
    terminals = sorted(inst.terminal_ids())
    groups = group_events_by_terminal_day(m.network)
    theta = cfg.theta

    baseline = cfg.baseline if cfg.baseline is not None else inst.baseline
    needs_baseline = cfg.version in ("V1", "V1prime", "V2", "V3")
    if needs_baseline and baseline is None:
        raise ConfigError(f"{cfg.version} requires a baseline work-event plan")

    new_vars: list[VarRef] = []
    rows: list[LinearConstraint] = []

    def active_pair_rows(tag_family: str, cap_of_h, row_a: str, row_b: str) -> None:
        for (k, d) in baseline.active_pairs():
            pairs = groups.get((k, d), [])
            if not pairs:
                continue
            terms = _event_terms(pairs)
            rows.append(
                LinearConstraint(terms, "<=", cap_of_h(baseline.count(k, d)), f"{tag_family}:({row_a}):{k}:{d}")
            )
            if not math.isinf(theta):
                rows.append(LinearConstraint(terms, "<=", theta, f"{tag_family}:({row_b}):{k}:{d}"))

    def zero_rows(pairs_kd: list[tuple[str, int]], tag: str) -> None:
        for (k, d) in pairs_kd:
            pairs = groups.get((k, d), [])
            if not pairs:
                continue
            rows.append(LinearConstraint(_event_terms(pairs), "=", 0, f"{tag}:{k}:{d}"))

    def gate_rows(pairs_kd: list[tuple[str, int]], gate_of, tag: str) -> None:
        for (k, d) in pairs_kd:
            pairs = groups.get((k, d), [])
            if not pairs:
                continue
            cap = _group_capacity(pairs, theta)
            terms = _event_terms(pairs) + [(gate_of(k, d), -cap)]
            rows.append(LinearConstraint(terms, "<=", 0, f"{tag}:{k}:{d}"))

    if cfg.version == "V1":
        if cfg.lambda_ < 0:
            raise ConfigError("V1 requires lambda >= 0")
        active_pair_rows("V1", lambda h: h + cfg.lambda_, "11", "12")
        zero_rows(baseline.inactive_pairs(terminals), "V1:(13)")

    elif cfg.version == "V1prime":
        active_pair_rows("V1p", lambda h: 2 * h, "14", "15")
        zero_rows(baseline.inactive_pairs(terminals), "V1p:inactive")

    elif cfg.version == "V2":
        if cfg.alpha_c is None:
            raise ConfigError("V2 requires alpha_c")
        active_pair_rows("V1p", lambda h: 2 * h, "14", "15")
        inactive_terms = set(baseline.inactive_terminals(terminals))
        zero_rows(
            [(k, d) for (k, d) in baseline.inactive_pairs(terminals) if k not in inactive_terms],
            "V1p:inactive",
        )
        for k in sorted(inactive_terms):
            new_vars.append(VarRef(id=f"z1:{k}", family="z1", subject=k, lower=0, upper=1, binary=True))
        rows.append(
            LinearConstraint(
                [(f"z1:{k}", 1) for k in sorted(inactive_terms)], "<=", cfg.alpha_c, "V2:(16)"
            )
        )
        gate_rows(
            [(k, d) for k in sorted(inactive_terms) for d in range(n_days)],
            lambda k, d: f"z1:{k}",
            "V2:(17)",
        )

    elif cfg.version == "V3":
        if cfg.alpha_d is None:
            raise ConfigError("V3 requires alpha_d")
        active_pair_rows("V1p", lambda h: 2 * h, "14", "15")
        inactive_pairs = baseline.inactive_pairs(terminals)
        for (k, d) in inactive_pairs:
            new_vars.append(
                VarRef(id=f"z2:{k}:{d}", family="z2", subject=f"{k}:{d}", lower=0, upper=1, binary=True)
            )
        rows.append(
            LinearConstraint(
                [(f"z2:{k}:{d}", 1) for (k, d) in inactive_pairs], "<=", cfg.alpha_d, "V3:(19)"
            )
        )
        gate_rows(inactive_pairs, lambda k, d: f"z2:{k}:{d}", "V3:(20)")

    elif cfg.version == "V4":
        if cfg.alpha_e is None:
            raise ConfigError("V4 requires alpha_e")
        for k in terminals:
            new_vars.append(VarRef(id=f"w1:{k}", family="w1", subject=k, lower=0, upper=1, binary=True))
        rows.append(LinearConstraint([(f"w1:{k}", 1) for k in terminals], "<=", cfg.alpha_e, "V4:(22)"))
        gate_rows(
            [(k, d) for k in terminals for d in range(n_days)],
            lambda k, d: f"w1:{k}",
            "V4:(23)",
        )

    elif cfg.version == "V5":
        if cfg.alpha_f is None:
            raise ConfigError("V5 requires alpha_f")
        all_pairs = [(k, d) for k in terminals for d in range(n_days)]
        for (k, d) in all_pairs:
            new_vars.append(
                VarRef(id=f"w2:{k}:{d}", family="w2", subject=f"{k}:{d}", lower=0, upper=1, binary=True)
            )
        rows.append(
            LinearConstraint([(f"w2:{k}:{d}", 1) for (k, d) in all_pairs], "<=", cfg.alpha_f, "V5:(25)")
        )
        gate_rows(all_pairs, lambda k, d: f"w2:{k}:{d}", "V5:(26)")

    else:
        raise ConfigError(f"unknown extension version {cfg.version!r}")

    return m.extended(new_vars, rows, cfg, name_suffix=f"+{cfg.version}")


def infer_gate_values(m: MilpModel, values: dict[str, int]) -> dict[str, int]:
    """Derive activation-variable values from event usage in ``values``."""
    if m.network is None:
        return {}
    groups = group_events_by_terminal_day(m.network)
    events_at: dict[tuple[str, int], int] = {
        key: sum(values.get(so, 0) + values.get(pu, 0) for so, pu in pairs)
        for key, pairs in groups.items()
    }
    out: dict[str, int] = {}
    for var in m.variables:
        if var.family in ("z1", "w1"):
            k = var.subject
            out[var.id] = int(any(v > 0 for (kk, _d), v in events_at.items() if kk == k))
        elif var.family in ("z2", "w2"):
            k, d = var.subject.rsplit(":", 1)
            out[var.id] = int(events_at.get((k, int(d)), 0) > 0)
    return out


def warm_start_from(m: MilpModel, sol) -> MilpModel:
    """Attach a prior solution as the solver's starting incumbent.

    Activation variables absent from the source solution are inferred from
    its event usage.  The start must be feasible for the (extended) model;
    otherwise the violated constraint tags are reported.
    """
    from .solver import check_feasibility

    if sol.values is None:
        raise ValueError("source solution carries no values")
    values: dict[str, int] = {}
    missing: list[str] = []
    inferred = infer_gate_values(m, sol.values)
    for var in m.variables:
        if var.id in sol.values:
            values[var.id] = int(round(sol.values[var.id]))
        elif var.id in inferred:
            values[var.id] = inferred[var.id]
        else:
            missing.append(var.id)
    if missing:
        raise InfeasibleStartError([f"missing:{v}" for v in missing])
    violations = check_feasibility(m, values)
    if violations:
        raise InfeasibleStartError([v.tag for v in violations])
    return replace(m, start=values)
