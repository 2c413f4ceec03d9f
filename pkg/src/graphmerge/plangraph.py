"""Per-agent leveled planning graphs with mutex propagation.

A graph node is the real ground action; ``links`` holds the propositions the
action is wired to inside *this* graph.  For local actions and no-ops the links
are the action's own sets.  Foreign actions merged from a peer are wired to a
filtered subset (see :mod:`graphmerge.interaction`), but mutual exclusion by
dependence is always decided on the real action, since independence follows
from the operator descriptions alone.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Iterable, Optional

from .model import GroundAction, Proposition, independent, noop


@dataclass(frozen=True)
class Links:
    pre: frozenset
    add: frozenset
    delete: frozenset

    @classmethod
    def of(cls, a: GroundAction) -> "Links":
        return cls(a.preconds, a.add, a.delete)


def pair(x, y) -> frozenset:
    return frozenset((x, y))


class Reachability(enum.Enum):
    UNREACHABLE = "unreachable"
    MUTEX_BLOCKED = "mutex-blocked"
    REACHABLE = "reachable"


class PlanningGraph:
    def __init__(self, beliefs: Iterable[Proposition] = (), owner: str = ""):
        self.owner = owner
        self.prop_levels: list = [frozenset(beliefs)]
        self.action_levels: list = []
        self.prop_mutex: list = [frozenset()]
        self.action_mutex: list = []
        self.links: dict = {}
        self.pool: tuple = ()
        # foreign actions merged per action level
        self.foreign: list = []
        self.fixpoint_level: Optional[int] = None

    # -- queries -----------------------------------------------------------

    @property
    def top(self) -> int:
        return len(self.prop_levels) - 1

    def link(self, a: GroundAction) -> Links:
        ln = self.links.get(a)
        if ln is None:
            ln = self.links[a] = Links.of(a)
        return ln

    def is_foreign(self, a: GroundAction) -> bool:
        return not a.is_noop and a.owner != self.owner

    def noop(self, p: Proposition) -> GroundAction:
        return noop(p, self.owner)

    def props_mutex(self, p: Proposition, q: Proposition, level: int) -> bool:
        return p != q and pair(p, q) in self.prop_mutex[level]

    def actions_mutex(self, a: GroundAction, b: GroundAction, level: int) -> bool:
        return a != b and pair(a, b) in self.action_mutex[level]

    def first_level(self, p: Proposition) -> int:
        for i, props in enumerate(self.prop_levels):
            if p in props:
                return i
        return len(self.prop_levels)

    def producers(self, p: Proposition, level: int) -> list:
        """Actions of A_{level-1} wired to add ``p`` (producing it at ``level``)."""
        return [a for a in self.action_levels[level - 1] if p in self.link(a).add]

    # -- construction ------------------------------------------------------

    def _admissible(self, pre: frozenset, k: int) -> bool:
        props = self.prop_levels[k]
        if not pre <= props:
            return False
        mux = self.prop_mutex[k]
        return not any(pair(p, q) in mux for p, q in itertools.combinations(pre, 2))

    def _dependent_or_competing(self, a: GroundAction, b: GroundAction, k: int) -> bool:
        if not independent(a, b):
            return True
        mux = self.prop_mutex[k]
        pa, pb = self.link(a).pre, self.link(b).pre
        return any(pair(p, q) in mux for p in pa for q in pb if p != q)

    def build_level(self, k: int) -> None:
        """(Re)compute A_k, P_{k+1}, muA_k and muP_{k+1} from P_k and muP_k."""
        props = self.prop_levels[k]
        acts = {self.noop(p) for p in props}
        acts.update(a for a in self.pool if not a.inert and self._admissible(self.link(a).pre, k))
        acts.update(a for a in self.foreign[k] if self._admissible(self.link(a).pre, k))
        for a in acts:
            self.link(a)
        amux = set()
        ordered = sorted(acts)
        for a, b in itertools.combinations(ordered, 2):
            if self._dependent_or_competing(a, b, k):
                amux.add(pair(a, b))
        nxt: set = set()
        producers: dict = {}
        for a in ordered:
            for p in self.link(a).add:
                nxt.add(p)
                producers.setdefault(p, []).append(a)
        pmux = set()
        for p, q in itertools.combinations(sorted(nxt), 2):
            pp, pq = producers[p], producers[q]
            if set(pp) & set(pq):
                continue
            if all(pair(a, b) in amux for a in pp for b in pq):
                pmux.add(pair(p, q))
        acts_f, amux_f = frozenset(acts), frozenset(amux)
        nxt_f, pmux_f = frozenset(nxt), frozenset(pmux)
        if k < len(self.action_levels):
            self.action_levels[k] = acts_f
            self.action_mutex[k] = amux_f
            self.prop_levels[k + 1] = nxt_f
            self.prop_mutex[k + 1] = pmux_f
        else:
            self.action_levels.append(acts_f)
            self.action_mutex.append(amux_f)
            self.prop_levels.append(nxt_f)
            self.prop_mutex.append(pmux_f)

    def rebuild_from(self, k: int) -> None:
        for j in range(k, len(self.action_levels)):
            self.build_level(j)

    def expand(self, actions: Iterable[GroundAction] = None) -> "PlanningGraph":
        if actions is not None:
            self.pool = tuple(sorted(actions))
        k = self.top
        while len(self.foreign) <= k:
            self.foreign.append(set())
        self.build_level(k)
        return self

    def add_initial(self, props: Iterable[Proposition]) -> None:
        """Insert propositions into P_0 retroactively, carried up by no-ops.

        Only used for tokens no action deletes or requires, so existing mutex
        sets are unaffected.
        """
        props = frozenset(props) - self.prop_levels[0]
        if not props:
            return
        for j in range(len(self.prop_levels)):
            self.prop_levels[j] = self.prop_levels[j] | props
        for j in range(len(self.action_levels)):
            nops = {self.noop(p) for p in props}
            for a in nops:
                self.link(a)
            self.action_levels[j] = self.action_levels[j] | nops

    def snapshot(self, level: int) -> tuple:
        return (
            self.prop_levels[level],
            self.prop_mutex[level],
            self.action_levels[level - 1] if level >= 1 else None,
            self.action_mutex[level - 1] if level >= 1 else None,
        )


# ---------------------------------------------------------------------------
# functional surface


def init_graph(beliefs: Iterable[Proposition], owner: str = "") -> PlanningGraph:
    return PlanningGraph(beliefs, owner)


def expand_level(g: PlanningGraph, actions: Iterable[GroundAction]) -> PlanningGraph:
    """Add A_k, P_{k+1} and their mutex sets; ``actions`` is the local ground pool."""
    return g.expand(actions)


def action_mutex(a: GroundAction, b: GroundAction, g: PlanningGraph, level: int) -> bool:
    if a == b:
        return False
    return g._dependent_or_competing(a, b, level)


def prop_mutex(p: Proposition, q: Proposition, g: PlanningGraph, level: int) -> bool:
    """Mutex test for two propositions of P_level, from the producers in A_{level-1}."""
    if p == q:
        return False
    if level == 0:
        return False
    pp, pq = g.producers(p, level), g.producers(q, level)
    if set(pp) & set(pq):
        return False
    return all(action_mutex(a, b, g, level - 1) for a in pp for b in pq)


def at_fixpoint(g: PlanningGraph) -> bool:
    k = g.top
    if k < 1:
        return False
    same = g.prop_levels[k] == g.prop_levels[k - 1] and g.prop_mutex[k] == g.prop_mutex[k - 1]
    if same and k >= 2:
        same = (
            g.action_levels[k - 1] == g.action_levels[k - 2]
            and g.action_mutex[k - 1] == g.action_mutex[k - 2]
        )
    if same and g.fixpoint_level is None:
        g.fixpoint_level = k - 1
    return same


def goal_reachable(g: PlanningGraph, goal: Iterable[Proposition], level: Optional[int] = None) -> Reachability:
    level = g.top if level is None else level
    goal = frozenset(goal)
    if not goal <= g.prop_levels[level]:
        return Reachability.UNREACHABLE
    mux = g.prop_mutex[level]
    if any(pair(p, q) in mux for p, q in itertools.combinations(goal, 2)):
        return Reachability.MUTEX_BLOCKED
    return Reachability.REACHABLE
