"""Independent reference implementations used to check the planner.

Nothing here imports the planning graph, extraction or coordination code; it
works from the parsed problem and the STRIPS semantics alone.
"""

from __future__ import annotations

import itertools
import random
from collections import deque

from graphmerge.model import ground
from graphmerge.parser import parse_problem


def all_ground_actions(problem) -> list:
    out = []
    for spec in problem.agents:
        for op in spec.operators:
            out.extend(ground(op, problem.objects, spec.name))
    return out


def bfs_plan_length(problem, limit: int = 200_000):
    """Shortest sequential plan length over the union of all agents' actions, or None."""
    actions = [(a.preconds, a.add, a.delete) for a in all_ground_actions(problem)]
    start = problem.initial_state
    goal = problem.goal
    if goal <= start:
        return 0
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        s, d = frontier.popleft()
        for pre, add, dele in actions:
            if pre <= s:
                t = (s - dele) | add
                if t in seen:
                    continue
                if goal <= t:
                    return d + 1
                seen.add(t)
                if len(seen) > limit:
                    raise RuntimeError("state space too large for the oracle")
                frontier.append((t, d + 1))
    return None


def simulate(levels, initial, goal) -> bool:
    """Reference executor: each level must be pairwise independent and applicable."""
    s = frozenset(initial)
    for lv in levels:
        lv = list(lv)
        for a, b in itertools.combinations(lv, 2):
            if a.delete & (b.preconds | b.add) or b.delete & (a.preconds | a.add):
                return False
        if not all(a.preconds <= s for a in lv):
            return False
        dele = frozenset().union(*(a.delete for a in lv))
        add = frozenset().union(*(a.add for a in lv))
        s = (s - dele) | add
    return frozenset(goal) <= s


def shortest_parallel_makespan(problem, max_depth: int = 8):
    """Fewest levels of independent action sets reaching the goal (brute force), or None."""
    acts = all_ground_actions(problem)
    goal = problem.goal
    layer = {problem.initial_state}
    seen = set(layer)
    for depth in range(max_depth + 1):
        if any(goal <= s for s in layer):
            return depth
        nxt = set()
        for s in layer:
            app = [a for a in acts if a.preconds <= s]
            for r in range(1, len(app) + 1):
                for combo in itertools.combinations(app, r):
                    if not simulate([combo], s, ()):
                        continue
                    dele = frozenset().union(*(a.delete for a in combo))
                    add = frozenset().union(*(a.add for a in combo))
                    t = (s - dele) | add
                    if t not in seen:
                        seen.add(t)
                        nxt.add(t)
        if not nxt:
            return None
        layer = nxt
    return None


# ---------------------------------------------------------------------------
# random problems

PREDICATES = ("a", "b", "c", "d")


def random_problem_text(rng: random.Random) -> str:
    """A random problem with at most 3 agents, 3 objects and 12 ground propositions."""
    n_obj = rng.randint(1, 3)
    preds = PREDICATES[:rng.randint(2, min(4, 12 // n_obj))]
    objs = [f"o{i}" for i in range(n_obj)]
    universe = [(p, o) for p in preds for o in objs]

    def fmt(props):
        return " ".join(f"({p} {x})" for p, x in props)

    def ground_op(idx):
        pre = rng.sample(universe, rng.randint(0, min(2, len(universe) - 1)))
        rest = [u for u in universe if u not in pre]
        add = rng.sample(rest, rng.randint(1, min(2, len(rest))))
        dele = [u for u in pre if rng.random() < 0.6]
        text = f"(operator g{idx} (params) (pre {fmt(pre)}) (add {fmt(add)}) (del {fmt(dele)}))"
        return text, set(add)

    def lifted_op(idx):
        p_pre, p_add = rng.sample(preds, 2)
        extra = [u for u in universe if rng.random() < 0.15][:1]
        dele = f"({p_pre} ?x)" if rng.random() < 0.7 else ""
        text = (f"(operator m{idx} (params ?x - thing) (pre ({p_pre} ?x) {fmt(extra)}) "
                f"(add ({p_add} ?x)) (del {dele}))")
        return text, {(p_add, o) for o in objs}

    agents, addable = [], set()
    for k in range(rng.randint(1, 3)):
        beliefs = [u for u in universe if rng.random() < 0.25]
        ops = []
        for j in range(rng.randint(1, 3)):
            text, adds = lifted_op(j) if rng.random() < 0.4 else ground_op(j)
            ops.append(text)
            addable |= adds
        agents.append(f"  (agent ag{k + 1} (belief {fmt(beliefs)})\n    " + "\n    ".join(ops) + ")")
    # mostly goals some operator can add, so decomposition rarely fails outright
    pool = sorted(addable) if rng.random() < 0.9 else universe
    goal = rng.sample(pool, rng.randint(1, min(3, len(pool))))
    return (f"(problem rnd (types thing) (objects {' '.join(objs)} - thing)\n"
            f"  (goal {fmt(goal)})\n" + "\n".join(agents) + ")\n")


def random_problem(rng: random.Random):
    return parse_problem(random_problem_text(rng))


def graph_plan_exists(g, goal, horizon: int) -> bool:
    """Exhaustive forward enumeration of action subsets per graph level.

    A level's subset must use only propositions supplied by the previous
    subset (or P_0) and contain no mutex pair; the goal must be supplied at
    the horizon.  Independent of the regression search it checks.
    """
    goal = frozenset(goal)
    frontier = {frozenset(g.prop_levels[0])}
    for i in range(horizon):
        nxt = set()
        for avail in frontier:
            usable = [a for a in sorted(g.action_levels[i]) if g.link(a).pre <= avail]
            for r in range(len(usable) + 1):
                for combo in itertools.combinations(usable, r):
                    if any(g.actions_mutex(a, b, i) for a, b in itertools.combinations(combo, 2)):
                        continue
                    nxt.add(frozenset().union(*(g.link(a).add for a in combo)))
        frontier = {s for s in nxt if goal <= s} if i == horizon - 1 else nxt
    return any(goal <= s for s in frontier)
