"""Constraint exchange between agents and assembly of the global plan.

Integration follows least commitment: a requested ``(action, level)`` is first
inserted directly into the owner's current plan; only when that is impossible
does the owner re-extract under all constraints it has accepted so far.

:func:`joint_extract` is the exhaustive fallback used by the engine when the
exchange cannot settle on a valid global plan at the current horizon.  It
searches one graph built from every agent's real actions, so it is complete
at each horizon and its failure memo supports the usual termination test.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

from .extraction import IndividualPlan, UnknownConstraint, extract, plan_states
from .interaction import PublicInterface, is_fictive
from .model import GlobalPlan, PlanningError, Proposition, apply_set, independent_set
from .parser import AgentSpec, Problem
from .plangraph import PlanningGraph


class CoordinationError(PlanningError):
    pass


class DependentUnion(CoordinationError):
    pass


class GoalUncovered(CoordinationError):
    pass


@dataclass
class AgentState:
    spec: AgentSpec
    interface: PublicInterface
    graph: PlanningGraph
    pool: tuple = ()
    goal: frozenset = frozenset()
    plan: Optional[IndividualPlan] = None
    accepted: set = field(default_factory=set)
    memo: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def necessary(self) -> bool:
        return bool(self.goal)


@dataclass(frozen=True)
class ConstraintRequest:
    sender: str
    receiver: str
    constraints: frozenset  # (GroundAction, level)


@dataclass
class RoundOutcome:
    status: str  # stable | changed | failed
    failed: Optional[str] = None
    rows: list = field(default_factory=list)  # (from, to, action, level, outcome)
    requests: list = field(default_factory=list)


def empty_plan(owner: str, horizon: int) -> IndividualPlan:
    return IndividualPlan(owner, tuple(frozenset() for _ in range(horizon)),
                          tuple(frozenset() for _ in range(horizon)))


def direct_integrate(agent: AgentState, c: tuple) -> bool:
    """Insert ``c = (action, level)`` into the current plan without replanning."""
    a, i = c
    plan, g = agent.plan, agent.graph
    if plan is None or not 0 <= i < plan.horizon:
        return False
    if a in plan.levels[i]:
        agent.accepted.add((a, i))
        return True
    if a not in g.action_levels[i]:
        return False
    present = set(plan.levels[i]) | {g.noop(p) for p in plan.supports[i]}
    if any(g.actions_mutex(a, b, i) for b in present):
        return False
    try:
        states = plan_states(plan, g)
    except PlanningError:
        return False
    if not g.link(a).pre <= states[i]:
        return False
    levels = list(plan.levels)
    levels[i] = levels[i] | {a}
    external = plan.external | ({(a, i)} if g.is_foreign(a) else set())
    agent.plan = replace(plan, levels=tuple(levels), external=frozenset(external))
    agent.accepted.add((a, i))
    return True


def replan_integrate(agent: AgentState, cs: Iterable) -> Optional[IndividualPlan]:
    """Re-extract the agent's plan under ``cs`` plus every constraint accepted before."""
    cs = set(cs)
    if not cs:
        return agent.plan
    horizon = agent.plan.horizon if agent.plan is not None else agent.graph.top
    constraints = sorted(agent.accepted | cs, key=lambda c: (c[1], c[0].sort_key()))
    try:
        plan = extract(agent.graph, agent.goal, horizon, constraints)
    except UnknownConstraint:
        return None
    if plan is None:
        return None
    agent.plan = plan
    agent.accepted |= cs
    return plan


def constraint_requests(agents: Mapping[str, AgentState]) -> list:
    out = []
    for name in sorted(agents):
        plan = agents[name].plan
        if plan is None:
            continue
        by_owner: dict = {}
        for a, i in plan.external:
            by_owner.setdefault(a.owner, set()).add((a, i))
        for owner in sorted(by_owner):
            out.append(ConstraintRequest(name, owner, frozenset(by_owner[owner])))
    return out


def integrate_requests(agent: AgentState, requests: Iterable[ConstraintRequest]) -> tuple:
    """Integrate every request addressed to ``agent``; returns (ok, rows)."""
    rows, rejected = [], []
    received = []
    for req in sorted(requests, key=lambda r: r.sender):
        for a, i in sorted(req.constraints, key=lambda c: (c[1], c[0].sort_key())):
            received.append((req.sender, a, i))
    for sender, a, i in received:
        if direct_integrate(agent, (a, i)):
            rows.append((sender, agent.name, a, i, "direct"))
        else:
            rejected.append((sender, a, i))
    if not rejected:
        return True, rows
    plan = replan_integrate(agent, {(a, i) for _, a, i in received})
    outcome = "replanned" if plan is not None else "rejected"
    rows.extend((s, agent.name, a, i, outcome) for s, a, i in rejected)
    return plan is not None, rows


def coordination_round(agents: Mapping[str, AgentState], runner=None) -> RoundOutcome:
    """One synchronous exchange: every agent sends its external constraints to their owners.

    ``runner(fn, items)`` maps ``fn`` over receivers (sequential by default).
    """
    requests = constraint_requests(agents)
    inbox: dict = {}
    for r in requests:
        inbox.setdefault(r.receiver, []).append(r)
    before = {n: agents[n].plan for n in agents}
    receivers = sorted(inbox)

    def work(name):
        return integrate_requests(agents[name], inbox[name])

    results = list((runner or map)(work, receivers))
    out = RoundOutcome("stable", requests=requests)
    for name, (ok, rows) in zip(receivers, results):
        out.rows.extend(rows)
        if not ok and out.failed is None:
            out.failed = name
    if out.failed is not None:
        out.status = "failed"
    elif any(agents[n].plan != before[n] for n in agents):
        out.status = "changed"
    return out


def constraints_honored(agents: Mapping[str, AgentState]) -> bool:
    for ag in agents.values():
        if ag.plan is None:
            continue
        for a, i in ag.plan.external:
            owner = agents.get(a.owner)
            if owner is None or owner.plan is None or a not in owner.plan.levels[i]:
                return False
    return True


def assemble_global(agents: Mapping[str, AgentState], initial: Optional[frozenset] = None,
                    goal: Iterable[Proposition] = ()) -> GlobalPlan:
    """Level-wise union of the owners' own actions; foreign copies collapse onto the owner."""
    plans = [ag.plan for ag in agents.values() if ag.plan is not None]
    horizon = max((p.horizon for p in plans), default=0)
    levels = [set() for _ in range(horizon)]
    for p in plans:
        for i, lv in enumerate(p.own_levels()):
            levels[i] |= lv
    if not constraints_honored(agents):
        raise CoordinationError("a committed foreign action is missing from its owner's plan")
    for i, lv in enumerate(levels):
        if not independent_set(lv):
            raise DependentUnion(f"level {i} of the joint plan is not independent")
    plan = GlobalPlan(tuple(levels))
    if initial is not None:
        verdict = simulate(plan, initial, goal)
        if not verdict.valid:
            raise GoalUncovered(verdict.reason)
    return plan


@dataclass(frozen=True)
class Validation:
    valid: bool
    reason: Optional[str] = None
    level: Optional[int] = None

    def __bool__(self) -> bool:
        return self.valid


def simulate(plan: GlobalPlan, initial: frozenset, goal: Iterable[Proposition]) -> Validation:
    s = frozenset(p for p in initial if not is_fictive(p))
    for i, lv in enumerate(plan.levels):
        if not independent_set(lv):
            return Validation(False, f"level {i}: actions are not independent", i)
        try:
            s = apply_set(lv, s)
        except PlanningError as exc:
            return Validation(False, f"level {i}: {exc}", i)
    missing = frozenset(goal) - s
    if missing:
        return Validation(False, "goal not reached: " + ", ".join(map(str, sorted(missing))),
                          plan.makespan)
    return Validation(True)


def validate_global(plan: GlobalPlan, problem: Problem) -> Validation:
    return simulate(plan, problem.initial_state, problem.goal)


# ---------------------------------------------------------------------------
# joint search


UNION_OWNER = "*"


def union_graph(agents: Mapping[str, AgentState]) -> PlanningGraph:
    """One graph over every agent's real actions and beliefs, with no relevance filter."""
    beliefs = frozenset().union(*(ag.spec.beliefs for ag in agents.values()))
    g = PlanningGraph(beliefs, UNION_OWNER)
    g.pool = tuple(sorted(a for ag in agents.values() for a in ag.pool))
    return g


def joint_extract(agents: Mapping[str, AgentState], horizon: int,
                  graph: Optional[PlanningGraph] = None,
                  memo: Optional[dict] = None) -> Optional[IndividualPlan]:
    """A plan for the whole goal on ``graph`` (see :func:`union_graph`) at ``horizon``, or None.

    The graph is expanded as needed; the search is complete for the horizon.
    """
    graph = union_graph(agents) if graph is None else graph
    while graph.top < horizon:
        graph.expand()
    goal = frozenset().union(*(ag.goal for ag in agents.values()))
    return extract(graph, goal, horizon, memo=memo)


def split_plan(plan: IndividualPlan, names: Iterable[str]) -> dict:
    """Per-agent plans holding each agent's own actions of ``plan``."""
    out = {}
    for name in names:
        levels = tuple(frozenset(a for a in lv if a.owner == name) for lv in plan.levels)
        out[name] = IndividualPlan(name, levels, tuple(frozenset() for _ in levels))
    return out
