import itertools
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from graphmerge import data_path, parse_problem  # noqa: E402
from graphmerge.extraction import replay_individual  # noqa: E402
from graphmerge.plangraph import pair  # noqa: E402


def load(name):
    with open(data_path(name), encoding="utf-8") as fh:
        return parse_problem(fh.read())


@pytest.fixture
def dockers():
    return load("dockers.map")


@pytest.fixture
def dockers_no_ag3():
    return load("dockers-no-ag3.map")


def graph_violations(g) -> list:
    """Structural invariants every planning graph must satisfy."""
    bad = []
    for i in range(g.top):
        if not g.prop_levels[i] <= g.prop_levels[i + 1]:
            bad.append(f"{g.owner}: P{i} not within P{i + 1}")
        for p in g.prop_levels[i]:
            if g.noop(p) not in g.action_levels[i]:
                bad.append(f"{g.owner}: missing noop({p}) at A{i}")
    for i in range(1, g.top):
        shared = g.prop_levels[i]
        for m in g.prop_mutex[i + 1]:
            if m <= shared and m not in g.prop_mutex[i]:
                bad.append(f"{g.owner}: prop mutex {set(map(str, m))} reappears at P{i + 1}")
    for i, level in enumerate(g.prop_mutex):
        for m in level:
            if len(m) != 2:
                bad.append(f"{g.owner}: reflexive prop mutex at P{i}")
            elif not m <= g.prop_levels[i]:
                bad.append(f"{g.owner}: prop mutex over absent propositions at P{i}")
    for i, level in enumerate(g.action_mutex):
        for m in level:
            if len(m) != 2:
                bad.append(f"{g.owner}: reflexive action mutex at A{i}")
            elif not m <= g.action_levels[i]:
                bad.append(f"{g.owner}: action mutex over absent actions at A{i}")
        for a in g.action_levels[i]:
            pre = g.link(a).pre
            if not pre <= g.prop_levels[i]:
                bad.append(f"{g.owner}: {a.qualified} at A{i} lacks preconditions")
            for p, q in itertools.combinations(pre, 2):
                if pair(p, q) in g.prop_mutex[i]:
                    bad.append(f"{g.owner}: {a.qualified} at A{i} has mutex preconditions")
    return bad


def fixpoint_stable(g, extra: int = 2) -> bool:
    """Once a graph is at fixpoint, further expansion with the same pool changes nothing."""
    from graphmerge.plangraph import at_fixpoint

    if not at_fixpoint(g):
        return True
    k = g.top
    for _ in range(extra):
        g.expand()
    return all(
        g.prop_levels[j] == g.prop_levels[k] and g.prop_mutex[j] == g.prop_mutex[k]
        for j in range(k, g.top + 1)
    )


def plan_violations(engine) -> list:
    """Every plan extracted during a run must replay from its agent's graph to its goal."""
    bad = []
    checks = [(h, plans, goals) for h, plans, goals in engine.history]
    if engine.joint_plan is not None:
        goal = frozenset().union(*(ag.goal for ag in engine.agents.values()))
        if not replay_individual(engine.joint_plan, engine.union, goal):
            bad.append(f"joint@{engine.final_horizon}: {engine.joint_plan.describe()}")
    elif engine.final_horizon is not None:
        final = {n: ag.plan for n, ag in engine.agents.items()}
        checks.append((engine.final_horizon, final, {n: ag.goal for n, ag in engine.agents.items()}))
    for horizon, plans, goals in checks:
        for name, plan in plans.items():
            if not replay_individual(plan, engine.agents[name].graph, goals[name]):
                bad.append(f"{name}@{horizon}: {plan.describe()}")
    return bad


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
