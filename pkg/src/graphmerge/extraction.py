"""Individual plan extraction as a dynamic constraint satisfaction problem.

Every proposition ``p`` of level ``i`` is a variable whose values are the
actions of ``A_{i-1}`` producing it, plus the inactive value (``None`` here).
Only goal variables start active; assigning ``p := a`` activates the variables
for ``a``'s preconditions one level down.  Constraints:

* action mutex  ``(p1 = a1) => (p2 != a2)`` whenever a1, a2 are mutex;
* proposition mutex: two mutex variables are never active together;
* activation, as above.

The search is level by level, from the horizon down, so a failing set of
active variables at some level can be memoized (``memo[level]``) exactly like
Graphplan's no-good table.  Inside a level, variables are picked by minimum
remaining values, ties going to the most recently activated one; values are
tried no-op first, then by increasing difficulty (the level where their
hardest precondition first appears), local before foreign on ties.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

from .model import GroundAction, NotApplicable, PlanningError, Proposition, independent_set
from .plangraph import PlanningGraph, Reachability, goal_reachable, pair


class GoalNotInGraph(PlanningError):
    pass


class UnknownConstraint(PlanningError):
    """A constraint names an action absent from the graph at that level."""


CspVar = tuple  # (Proposition, level)


def _fmt_var(v: CspVar) -> str:
    return f"{v[0]}@{v[1]}"


@dataclass
class CspNetwork:
    graph: PlanningGraph
    goal: frozenset
    horizon: int
    domains: dict  # CspVar -> tuple of producing actions, value order
    initially_active: tuple
    pins: dict = field(default_factory=dict)  # CspVar -> GroundAction
    forced: dict = field(default_factory=dict)  # action level -> frozenset of actions

    def activation(self, a: GroundAction) -> frozenset:
        return self.graph.link(a).pre

    def mutex_actions(self, a: GroundAction, b: GroundAction, level: int) -> bool:
        return self.graph.actions_mutex(a, b, level)

    def mutex_props(self, p: Proposition, q: Proposition, level: int) -> bool:
        return self.graph.props_mutex(p, q, level)

    def constraint_count(self) -> int:
        n = 0
        for i in range(self.horizon):
            n += len(self.graph.action_mutex[i])
            n += len(self.graph.prop_mutex[i + 1])
        return n


def difficulty(g: PlanningGraph, a: GroundAction) -> int:
    """Latest level at which one of ``a``'s linked preconditions first appears."""
    return max((g.first_level(p) for p in g.link(a).pre), default=0)


def value_order(g: PlanningGraph, a: GroundAction) -> tuple:
    if a.is_noop:
        return (0, 0, 0, a.sort_key())
    return (1, difficulty(g, a), 1 if g.is_foreign(a) else 0, a.sort_key())


def encode(g: PlanningGraph, goal: Iterable[Proposition], horizon: Optional[int] = None) -> CspNetwork:
    horizon = g.top if horizon is None else horizon
    goal = frozenset(goal)
    if horizon > g.top or not goal <= g.prop_levels[horizon]:
        missing = sorted(goal - g.prop_levels[min(horizon, g.top)])
        raise GoalNotInGraph(f"goal not in P_{horizon} of {g.owner}: {', '.join(map(str, missing))}")
    domains = {}
    for i in range(1, horizon + 1):
        produced: dict = {}
        for a in g.action_levels[i - 1]:
            for p in g.link(a).add:
                produced.setdefault(p, []).append(a)
        for p in g.prop_levels[i]:
            domains[(p, i)] = tuple(sorted(produced.get(p, ()), key=lambda a: value_order(g, a)))
    for p in g.prop_levels[0]:
        domains[(p, 0)] = ()
    active = tuple((p, horizon) for p in sorted(goal))
    return CspNetwork(g, goal, horizon, domains, active)


def inject_constraints(net: CspNetwork, constraints: Iterable) -> CspNetwork:
    """Force each ``(action, level)`` into the solution, pinning one of its product variables."""
    constraints = list(constraints)
    if not constraints:
        return net
    g = net.graph
    forced = {k: set(v) for k, v in net.forced.items()}
    pins = dict(net.pins)
    for a, i in constraints:
        if not 0 <= i < net.horizon or a not in g.action_levels[i]:
            raise UnknownConstraint(f"{a.qualified} is not in A_{i} of {g.owner}")
        forced.setdefault(i, set()).add(a)
        adds = sorted(g.link(a).add)
        if adds:
            var = (adds[0], i + 1)
            if pins.get(var, a) != a:
                raise UnknownConstraint(f"{_fmt_var(var)} pinned twice")
            pins[var] = a
    return replace(net, pins=pins, forced={k: frozenset(v) for k, v in forced.items()})


Assignment = dict  # CspVar -> GroundAction


class _Search:
    def __init__(self, net: CspNetwork, memo: Optional[dict], trace: Optional[list]):
        self.net = net
        self.g = net.graph
        # no-goods are only reusable when nothing is forced
        self.memo = memo if (memo is not None and not net.forced) else {}
        self.trace = trace
        self.nodes = 0

    def log(self, line: str):
        if self.trace is not None:
            self.trace.append(line)

    def level(self, k: int, goals: tuple) -> Optional[Assignment]:
        if k == 0:
            for p in goals:
                if p not in self.g.prop_levels[0]:
                    return None
            return {}
        key = frozenset(goals)
        if key in self.memo.get(k, ()):
            return None
        for p in goals:
            self.log(f"ACT {_fmt_var((p, k))}")
        result = self._level(k, goals)
        if result is None:
            self.memo.setdefault(k, set()).add(key)
        return result

    def _level(self, k: int, goals: tuple) -> Optional[Assignment]:
        net, g = self.net, self.g
        gs = list(dict.fromkeys(goals))
        for p, q in itertools.combinations(gs, 2):
            if net.mutex_props(p, q, k):
                return None
        forced = sorted(net.forced.get(k - 1, ()))
        for a, b in itertools.combinations(forced, 2):
            if net.mutex_actions(a, b, k - 1):
                return None
        chosen: list = list(forced)
        assignment: dict = {}

        def candidates(p):
            pinned = net.pins.get((p, k))
            dom = (pinned,) if pinned is not None else net.domains.get((p, k), ())
            return [a for a in dom if not any(net.mutex_actions(a, c, k - 1) for c in chosen)]

        def rec(pending: list) -> Optional[Assignment]:
            self.nodes += 1
            if not pending:
                nxt: list = []
                for a in chosen:
                    nxt.extend(sorted(net.activation(a)))
                below = self.level(k - 1, tuple(dict.fromkeys(nxt)))
                if below is None:
                    return None
                below.update(assignment)
                return below
            # MRV, ties to the most recently activated
            best_i, best = None, None
            for i, p in enumerate(pending):
                c = candidates(p)
                if best is None or len(c) <= len(best[1]):
                    best_i, best = i, (p, c)
                if not c:
                    break
            p, cands = best
            rest = pending[:best_i] + pending[best_i + 1:]
            var = (p, k)
            for a in cands:
                self.log(f"SET {_fmt_var(var)} {a.qualified}")
                assignment[var] = a
                fresh = a not in chosen
                if fresh:
                    chosen.append(a)
                r = rec(rest)
                if r is not None:
                    return r
                if fresh:
                    chosen.pop()
                del assignment[var]
            self.log(f"BT {_fmt_var(var)}")
            return None

        return rec(gs)


def solve(net: CspNetwork, memo: Optional[dict] = None, trace: Optional[list] = None) -> Optional[Assignment]:
    search = _Search(net, memo, trace)
    return search.level(net.horizon, tuple(p for p, _ in net.initially_active))


@dataclass(frozen=True)
class IndividualPlan:
    owner: str
    levels: tuple  # frozenset of non-noop actions per action level
    supports: tuple = ()  # frozenset of propositions carried by no-ops per action level
    external: frozenset = frozenset()  # (action, level) pairs owned by peers

    @property
    def horizon(self) -> int:
        return len(self.levels)

    def own_levels(self) -> tuple:
        return tuple(frozenset(a for a in lv if a.owner == self.owner) for lv in self.levels)

    def is_empty(self) -> bool:
        return not any(self.levels)

    def describe(self) -> str:
        parts = []
        for lv in self.levels:
            acts = sorted(lv, key=lambda a: (a.owner, a.sort_key()))
            parts.append("{" + ", ".join(a.qualified for a in acts) + "}")
        return "<" + ", ".join(parts) + ">"


def decode_plan(assignment: Assignment, g: PlanningGraph, horizon: Optional[int] = None,
                extra: Iterable = ()) -> IndividualPlan:
    horizon = g.top if horizon is None else horizon
    levels = [set() for _ in range(horizon)]
    supports = [set() for _ in range(horizon)]
    for (p, i), a in assignment.items():
        if a is None or i == 0:
            continue
        if a.is_noop:
            supports[i - 1].add(p)
        else:
            levels[i - 1].add(a)
    for a, i in extra:
        levels[i].add(a)
    external = frozenset((a, i) for i, lv in enumerate(levels) for a in lv if g.is_foreign(a))
    return IndividualPlan(
        g.owner,
        tuple(frozenset(l) for l in levels),
        tuple(frozenset(s) for s in supports),
        external,
    )


def extract(g: PlanningGraph, goal: Iterable[Proposition], horizon: Optional[int] = None,
            constraints: Iterable = (), memo: Optional[dict] = None,
            trace: Optional[list] = None) -> Optional[IndividualPlan]:
    """encode + inject + solve + decode; ``None`` when no plan exists at this horizon."""
    horizon = g.top if horizon is None else horizon
    goal = frozenset(goal)
    if goal_reachable(g, goal, horizon) is not Reachability.REACHABLE:
        return None
    constraints = list(constraints)
    net = inject_constraints(encode(g, goal, horizon), constraints)
    assignment = solve(net, memo, trace)
    if assignment is None:
        return None
    return decode_plan(assignment, g, horizon, extra=constraints)


def plan_states(plan: IndividualPlan, g: PlanningGraph) -> list:
    """States visited when the plan is replayed through the graph's links.

    Foreign actions contribute only their linked effects, i.e. they are assumed
    executed by their owners at the committed level.
    """
    s = frozenset(g.prop_levels[0])
    states = [s]
    for lv in plan.levels:
        acts = sorted(lv)
        if not independent_set(acts):
            raise PlanningError("plan level is not independent")
        for a in acts:
            ln = g.link(a)
            if not ln.pre <= s:
                raise NotApplicable(f"{a.qualified} not applicable in replay of {plan.owner}")
        deleted = frozenset().union(*(g.link(a).delete for a in acts))
        added = frozenset().union(*(g.link(a).add for a in acts))
        s = (s - deleted) | added
        states.append(s)
    return states


def replay_individual(plan: IndividualPlan, g: PlanningGraph, goal: Iterable[Proposition]) -> bool:
    try:
        states = plan_states(plan, g)
    except PlanningError:
        return False
    return frozenset(goal) <= states[-1]
