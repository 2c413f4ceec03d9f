"""The distributed planning loop: decompose, expand, merge, extract, coordinate.

Agents only exchange immutable messages through a :class:`MessageBus`; the
engine runs each phase for every agent and waits for all of them before the
next phase starts.  In deterministic mode the phases run agent by agent in
name order; in concurrent mode each phase fans out over a thread pool.
"""

from __future__ import annotations

import os
import random
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .coordination import (
    AgentState,
    CoordinationError,
    assemble_global,
    coordination_round,
    empty_plan,
    joint_extract,
    split_plan,
    union_graph,
)
from .extraction import extract
from .interaction import (
    merge_external,
    outgoing_interactions,
    public_interface,
    shared_beliefs,
)
from .model import GlobalPlan, PlanningError, Proposition, codesignates_any, ground
from .plangraph import PlanningGraph, Reachability, at_fixpoint, goal_reachable

REASONS = ("uncoverable-goal", "unreachable-at-fixpoint", "exhausted", "level-cap")


class PlanningFailure(PlanningError):
    def __init__(self, reason: str, level: int = 0, detail: str = ""):
        self.reason = reason
        self.level = level
        self.detail = detail
        msg = f"{reason} at level {level}"
        super().__init__(msg + (f": {detail}" if detail else ""))


# ---------------------------------------------------------------------------
# goals


def decompose_goals(problem) -> dict:
    """Individual goal of every agent: the goal facts its operators can add.

    A goal fact no operator adds but some agent already believes is kept by
    the first such agent; a fact with neither is uncoverable.
    """
    out = {}
    for spec in problem.agents:
        adds = [q for op in spec.operators for q in op.add]
        out[spec.name] = frozenset(p for p in problem.goal if codesignates_any(p, adds, problem.objects))
    covered = frozenset().union(*out.values()) if out else frozenset()
    missing = []
    for p in sorted(problem.goal - covered):
        holder = next((s.name for s in sorted(problem.agents, key=lambda s: s.name) if p in s.beliefs), None)
        if holder is None:
            missing.append(p)
        else:
            out[holder] = out[holder] | {p}
    if missing:
        raise PlanningFailure("uncoverable-goal", 0, ", ".join(map(str, missing)))
    return out


def assign_goals(individual: dict, excluded: Optional[dict] = None) -> dict:
    """Give each goal fact to the first capable agent (by name) not excluded for it."""
    excluded = excluded or {}
    out = {name: set() for name in individual}
    goals = frozenset().union(*individual.values()) if individual else frozenset()
    for p in sorted(goals):
        for name in sorted(individual):
            if p in individual[name] and name not in excluded.get(p, ()):
                out[name].add(p)
                break
        else:
            return None
    return {name: frozenset(v) for name, v in out.items()}


def necessary_agents(assignment: dict) -> set:
    return {name for name, goals in assignment.items() if goals}


# ---------------------------------------------------------------------------
# messaging


@dataclass(frozen=True)
class Message:
    kind: str  # interface | interactions | constraints | plan-status | barrier
    sender: str
    receiver: str
    payload: Any = None


class MessageBus:
    """In-process exactly-once delivery, FIFO per (sender, receiver) pair."""

    def __init__(self):
        self._queues: dict = {}
        self.log: list = []

    def post(self, msg: Message) -> None:
        self._queues.setdefault((msg.sender, msg.receiver), deque()).append(msg)

    def deliver(self, receiver: str) -> list:
        out = []
        for key in sorted(k for k in self._queues if k[1] == receiver):
            q = self._queues[key]
            while q:
                out.append(q.popleft())
        return out

    def pending(self) -> int:
        return sum(len(q) for q in self._queues.values())


def _summary(msg: Message) -> str:
    p = msg.payload
    if msg.kind == "interactions":
        return f"{len(p)} records"
    if msg.kind == "constraints":
        return ", ".join(f"{a.qualified}@{i}" for a, i in sorted(p, key=lambda c: (c[1], c[0].sort_key())))
    return str(p)


# ---------------------------------------------------------------------------
# configuration


@dataclass
class EngineConfig:
    max_levels: int = 50
    max_rounds: Optional[int] = None  # default 2 * agents * horizon
    mode: str = "deterministic"  # deterministic | concurrent
    trace_dir: Optional[str] = None
    seed: Optional[int] = None
    csp_trace: bool = False

    def __post_init__(self):
        aliases = {"det": "deterministic", "conc": "concurrent"}
        self.mode = aliases.get(self.mode, self.mode)
        if self.mode not in ("deterministic", "concurrent"):
            raise ValueError(f"unknown mode {self.mode}")
        if self.max_levels < 0:
            raise ValueError("max_levels must be non-negative")


# ---------------------------------------------------------------------------
# engine


class Engine:
    def __init__(self, problem, config: Optional[EngineConfig] = None,
                 on_iteration: Optional[Callable] = None):
        self.problem = problem
        self.config = config or EngineConfig()
        self.on_iteration = on_iteration
        self.bus = MessageBus()
        self.agents: dict = {}
        self.individual: dict = {}
        self.excluded: dict = {}  # goal fact -> agents that failed it for good
        self.history: list = []  # (horizon, {agent: first extracted plan}, {agent: goal})
        self.joint_memo: dict = {}
        self.union: Optional[PlanningGraph] = None
        self.joint_plan = None  # set when the fallback produced the returned plan
        self.failures: dict = {}  # search key -> (horizon, memo snapshot)
        self.phase_log: list = []
        self.interaction_log: list = []
        self.coordination_log: list = []
        self.csp_log: list = []
        self.final_horizon: Optional[int] = None
        self._pool: Optional[ThreadPoolExecutor] = None
        self._phase = 0

    # -- phases ------------------------------------------------------------

    def _map(self, fn, items) -> list:
        items = list(items)
        if self._pool is None:
            return [fn(x) for x in items]
        order = list(range(len(items)))
        if self.config.seed is not None:
            random.Random(self.config.seed + self._phase).shuffle(order)
        futures = {i: self._pool.submit(fn, items[i]) for i in order}
        return [futures[i].result() for i in range(len(items))]

    def _barrier(self, name: str, level: int) -> None:
        self._phase += 1
        line = f"PHASE {self._phase} {name} level={level}"
        self.phase_log.append(line)
        self.bus.log.append(line)

    def _send(self, msg: Message) -> None:
        self.bus.post(msg)
        self.bus.log.append(f"MSG {msg.kind} {msg.sender}->{msg.receiver} {_summary(msg)}")

    @property
    def names(self) -> list:
        return sorted(self.agents)

    @property
    def top(self) -> int:
        return max((ag.graph.top for ag in self.agents.values()), default=0)

    def _setup(self) -> None:
        p = self.problem
        self.individual = decompose_goals(p)
        specs = sorted(p.agents, key=lambda s: s.name)
        interfaces = {s.name: public_interface(s) for s in specs}
        for s in specs:
            for peer in specs:
                if peer.name != s.name:
                    self._send(Message("interface", s.name, peer.name, interfaces[s.name].agent))
        for s in specs:
            received = {m.payload for m in self.bus.deliver(s.name)}
            peers = [q for q in specs if q.name in received]
            beliefs = s.beliefs | shared_beliefs(interfaces[s.name], peers, p.objects)
            pool = tuple(sorted(a for op in s.operators for a in ground(op, p.objects, s.name)))
            g = PlanningGraph(beliefs, s.name)
            g.pool = pool
            self.agents[s.name] = AgentState(s, interfaces[s.name], g, pool)
        self._assign(0)
        self._barrier("decompose", 0)

    def _assign(self, level: int) -> None:
        assignment = assign_goals(self.individual, self.excluded)
        if assignment is None:
            raise PlanningFailure(self._last_reason, level, self._last_detail)
        for name, ag in self.agents.items():
            ag.goal = assignment.get(name, frozenset())

    _last_reason = "exhausted"
    _last_detail = ""

    def _give_up(self, name: str, reason: str, level: int, goals=None) -> None:
        """Terminal failure of ``name`` on ``goals``: move them to the next capable agent."""
        goals = self.agents[name].goal if goals is None else goals
        for p in goals:
            self.excluded.setdefault(p, set()).add(name)
        self._last_reason = reason
        self._last_detail = f"{name}: " + ", ".join(map(str, sorted(goals)))
        self._assign(level)

    def _expand(self) -> None:
        k = self.top
        self._map(lambda n: self.agents[n].graph.expand(), self.names)
        self._barrier("expand", k)
        interfaces = [self.agents[n].interface for n in self.names]

        def broadcast(name):
            return outgoing_interactions(self.agents[name].graph, k, interfaces, self.problem.objects)

        for name, records in zip(self.names, self._map(broadcast, self.names)):
            for r in records:
                self.interaction_log.append(
                    f"{k}\t{r.action.qualified}\t{r.sender}\t{r.receiver}\t{r.polarity.value}")
            for peer in self.names:
                if peer != name:
                    self._send(Message("interactions", name, peer, tuple(r for r in records if r.receiver == peer)))
        self._barrier("broadcast", k)
        inbox = {n: [r for m in self.bus.deliver(n) for r in m.payload] for n in self.names}

        def merge(name):
            ag = self.agents[name]
            merge_external(ag.graph, inbox[name], k, ag.interface, self.problem.objects)

        self._map(merge, self.names)
        self._barrier("merge", k)

    def _all_fixpoint(self) -> bool:
        # evaluate every graph, so each records its own fixpoint level
        flags = [at_fixpoint(self.agents[n].graph) for n in self.names]
        return all(flags)

    # -- extraction and coordination ----------------------------------------

    def _rounds(self, horizon: int) -> int:
        if self.config.max_rounds is not None:
            return self.config.max_rounds
        return max(1, 2 * len(self.agents) * horizon)

    def _note_failure(self, key, horizon: int, memo: dict, fixpoint: Optional[int]) -> bool:
        """Record a failed search; True once it is proven to fail at every horizon."""
        if fixpoint is None or horizon <= fixpoint:
            self.failures.pop(key, None)
            return False
        snap = frozenset(memo.get(fixpoint, ()))
        prev = self.failures.get(key)
        self.failures[key] = (horizon, snap)
        return prev is not None and prev[0] == horizon - 1 and prev[1] == snap

    def _fixpoint_level(self) -> Optional[int]:
        if not self._all_fixpoint():
            return None
        return max(self.agents[n].graph.fixpoint_level for n in self.names)

    def _attempt(self, horizon: int) -> Optional[GlobalPlan]:
        """Extract, coordinate and assemble at ``horizon``; None when that fails."""
        fixpoint = self._fixpoint_level()
        for ag in self.agents.values():
            ag.accepted = set()
            ag.plan = None

        def solve(name):
            ag = self.agents[name]
            if not ag.necessary:
                return empty_plan(name, horizon), None
            trace = [] if self.config.csp_trace else None
            plan = extract(ag.graph, ag.goal, horizon, memo=ag.memo, trace=trace)
            return plan, trace

        results = self._map(solve, self.names)
        self._barrier("extract", horizon)
        for name, (plan, trace) in zip(self.names, results):
            self.agents[name].plan = plan
            if trace:
                self.csp_log.extend(f"{name}\t{horizon}\t{line}" for line in trace)
            status = "none" if plan is None else plan.describe()
            for peer in self.names:
                if peer != name:
                    self._send(Message("plan-status", name, peer, status))
        for n in self.names:
            self.bus.deliver(n)
        failed = [n for n in self.names if self.agents[n].plan is None]
        if failed:
            for name in failed:
                ag = self.agents[name]
                if self._note_failure(("ind", name, ag.goal), horizon, ag.memo, fixpoint):
                    self._give_up(name, "exhausted", horizon)
            # once nothing new can appear locally, only the joint search can still decide
            return self._fallback(horizon) if fixpoint is not None else None
        self.history.append((horizon, {n: self.agents[n].plan for n in self.names},
                             {n: self.agents[n].goal for n in self.names}))
        plan = self._coordinate(horizon)
        if plan is not None:
            return plan
        return self._fallback(horizon)

    def _fallback(self, horizon: int) -> Optional[GlobalPlan]:
        if self.union is None:
            self.union = union_graph(self.agents)
        found = joint_extract(self.agents, horizon, self.union, self.joint_memo)
        self._barrier("joint-extract", horizon)
        if found is None:
            u = self.union
            fixpoint = u.fixpoint_level if at_fixpoint(u) else None
            if fixpoint is not None and goal_reachable(u, self.problem.goal) is not Reachability.REACHABLE:
                raise PlanningFailure("unreachable-at-fixpoint", u.top, "goal out of reach of all agents together")
            if self._note_failure(("joint",), horizon, self.joint_memo, fixpoint):
                raise PlanningFailure("exhausted", horizon, "no joint plan at any horizon")
            return None
        for name, p in split_plan(found, self.names).items():
            self.agents[name].plan = p
            self.agents[name].accepted = set()
        self.joint_plan = found
        return assemble_global(self.agents, self.problem.initial_state, self.problem.goal)

    def _coordinate(self, horizon: int) -> Optional[GlobalPlan]:
        for r in range(1, self._rounds(horizon) + 1):
            outcome = coordination_round(self.agents, runner=self._map)
            for req in outcome.requests:
                self._send(Message("constraints", req.sender, req.receiver, req.constraints))
            for n in self.names:
                self.bus.deliver(n)
            for frm, to, a, i, how in outcome.rows:
                self.coordination_log.append(f"{horizon}\t{r}\t{frm}\t{to}\t{a.qualified}\t{i}\t{how}")
            self._barrier(f"coordinate-{r}", horizon)
            if outcome.status == "failed":
                return None
            if outcome.status == "stable":
                try:
                    return assemble_global(self.agents, self.problem.initial_state, self.problem.goal)
                except CoordinationError:
                    return None
        return None

    # -- main loop -----------------------------------------------------------

    def _check_goals(self, fixpoint: bool) -> bool:
        """True when every necessary agent sees its goal cleanly; may reassign or fail."""
        while True:
            blocked = []
            for n in self.names:
                ag = self.agents[n]
                if ag.necessary:
                    r = goal_reachable(ag.graph, ag.goal)
                    if r is not Reachability.REACHABLE:
                        blocked.append((n, r))
            if not blocked:
                return True
            if not fixpoint:
                return False
            name, _ = blocked[0]
            ag = self.agents[name]
            top = ag.graph.prop_levels[ag.graph.top]
            missing = frozenset(p for p in ag.goal if p not in top) or ag.goal
            self._give_up(name, "unreachable-at-fixpoint", self.top, missing)

    def run(self) -> GlobalPlan:
        if self.config.mode == "concurrent":
            with ThreadPoolExecutor(max_workers=max(1, len(self.problem.agents))) as pool:
                self._pool = pool
                try:
                    return self._run()
                finally:
                    self._pool = None
        return self._run()

    def _run(self) -> GlobalPlan:
        try:
            self._setup()
            while True:
                fixpoint = self.top > 0 and self._all_fixpoint()
                if self._check_goals(fixpoint):
                    plan = self._attempt(self.top)
                    if plan is not None:
                        self.final_horizon = self.top
                        return plan
                if self.top >= self.config.max_levels:
                    raise PlanningFailure("level-cap", self.top, f"no plan within {self.config.max_levels} levels")
                self._expand()
                if self.on_iteration is not None:
                    self.on_iteration(self, self.top)
        finally:
            self.write_traces()

    # -- traces --------------------------------------------------------------

    def write_traces(self) -> None:
        d = self.config.trace_dir
        if not d:
            return
        os.makedirs(d, exist_ok=True)
        files = {
            "interactions.tsv": ["level\taction\tsender\treceiver\tpolarity"] + self.interaction_log,
            "coordination.tsv": ["horizon\tround\tfrom\tto\taction\tlevel\toutcome"] + self.coordination_log,
            "messages.log": self.bus.log,
        }
        if self.config.csp_trace:
            files["csp.log"] = self.csp_log
        for fname, lines in files.items():
            with open(os.path.join(d, fname), "w", encoding="utf-8") as fh:
                fh.write("".join(line + "\n" for line in lines))


def run(problem, config: Optional[EngineConfig] = None) -> GlobalPlan:
    """Plan for ``problem``; raises :class:`PlanningFailure` with a reason and level."""
    return Engine(problem, config).run()
