import itertools

from conftest import fixpoint_stable, graph_violations

from graphmerge.engine import Engine
from graphmerge.model import ground, independent, instantiate, prop
from graphmerge.plangraph import (
    PlanningGraph,
    Reachability,
    action_mutex,
    at_fixpoint,
    expand_level,
    goal_reachable,
    init_graph,
    prop_mutex,
)


def pool_of(problem, name):
    spec = problem.agent(name)
    return tuple(a for op in spec.operators for a in ground(op, problem.objects, name))


def local_graph(problem, name, levels):
    g = init_graph(problem.agent(name).beliefs, name)
    for _ in range(levels):
        expand_level(g, pool_of(problem, name))
    return g


def move(problem, *args):
    op = problem.agent("ag3").operators[0]
    return instantiate(op, args, "ag3")


def test_initial_levels(dockers):
    assert init_graph(dockers.agent("ag1").beliefs).prop_levels[0] == {prop("at(c1,l1)"), prop("at(t1,l1)")}
    assert init_graph(dockers.agent("ag3").beliefs).prop_levels[0] == {prop("at(t1,l1)"), prop("at(t2,l2)")}
    assert init_graph(()).prop_levels[0] == frozenset()


def test_ag3_first_expansion(dockers):
    g = local_graph(dockers, "ag3", 1)
    assert {move(dockers, "t1", "l1", "l2"), move(dockers, "t2", "l2", "l1")} <= g.action_levels[0]
    assert {prop("at(t1,l2)"), prop("at(t2,l1)")} <= g.prop_levels[1]
    # self-moves change nothing and are left out of the graph
    assert move(dockers, "t1", "l1", "l1") not in g.action_levels[0]


def test_ag1_first_expansion(dockers):
    g = local_graph(dockers, "ag1", 1)
    assert any(a.name == "load-l1" and a.args == ("c1", "t1") for a in g.action_levels[0])
    assert prop("in(t1,c1)") in g.prop_levels[1]


def test_no_applicable_actions():
    g = init_graph([prop("p()")], "x")
    expand_level(g, ())
    assert all(a.is_noop for a in g.action_levels[0])
    assert g.prop_levels[1] == g.prop_levels[0]
    assert at_fixpoint(g)


def test_action_mutex_examples(dockers):
    g = local_graph(dockers, "ag3", 2)
    m1, m2 = move(dockers, "t1", "l1", "l2"), move(dockers, "t2", "l2", "l1")
    for level in range(2):
        assert action_mutex(g.noop(prop("at(t1,l1)")), m1, g, level)
        assert g.actions_mutex(g.noop(prop("at(t1,l1)")), m1, level)
    assert not action_mutex(m1, m1, g, 0)
    assert not action_mutex(m1, m2, g, 0)


def test_prop_mutex_examples(dockers):
    g = local_graph(dockers, "ag3", 1)
    assert prop_mutex(prop("at(t1,l1)"), prop("at(t1,l2)"), g, 1)
    assert g.props_mutex(prop("at(t1,l1)"), prop("at(t1,l2)"), 1)
    assert not prop_mutex(prop("at(t1,l2)"), prop("at(t2,l1)"), g, 1)
    p = prop("at(t1,l2)")
    assert not prop_mutex(p, p, g, 1)


def test_goal_reachability(dockers):
    g3 = local_graph(dockers, "ag3", 1)
    assert goal_reachable(g3, {prop("at(t1,l2)"), prop("at(t2,l1)")}, 1) is Reachability.REACHABLE
    assert goal_reachable(g3, (), 1) is Reachability.REACHABLE
    assert goal_reachable(g3, {prop("at(t1,l1)"), prop("at(t1,l2)")}, 1) is Reachability.MUTEX_BLOCKED
    g1 = local_graph(dockers, "ag1", 1)
    assert goal_reachable(g1, {prop("at(c2,l1)")}, 1) is Reachability.UNREACHABLE


def test_fixpoint_detection(dockers):
    g = local_graph(dockers, "ag3", 1)
    assert not at_fixpoint(g)
    while not at_fixpoint(g):
        g.expand()
        assert g.top < 10
    assert fixpoint_stable(g)


def test_fixpoint_false_when_props_grow():
    g = init_graph([prop("a()")], "x")
    from graphmerge.model import OperatorSchema

    op = OperatorSchema("f", (), frozenset([prop("a()")]), frozenset([prop("b()")]), frozenset())
    expand_level(g, ground(op, {}, "x"))
    assert not at_fixpoint(g)


def brute_force_prop_mutex(g, level):
    """All pairs of P_level whose producer pairs are all mutex (and share none)."""
    out = set()
    props = sorted(g.prop_levels[level])
    producers = {p: [a for a in g.action_levels[level - 1] if p in g.link(a).add] for p in props}
    for p, q in itertools.combinations(props, 2):
        pp, pq = producers[p], producers[q]
        if set(pp) & set(pq):
            continue
        ok = True
        for a, b in itertools.product(pp, pq):
            dependent = not independent(a, b)
            competing = any(g.props_mutex(x, y, level - 1)
                            for x in g.link(a).pre for y in g.link(b).pre)
            if not (dependent or competing):
                ok = False
                break
        if ok:
            out.add(frozenset((p, q)))
    return out


def test_prop_mutex_matches_brute_force_on_dockers(dockers):
    engine = Engine(dockers)
    engine.run()
    for ag in engine.agents.values():
        g = ag.graph
        for level in range(1, g.top + 1):
            assert set(g.prop_mutex[level]) == brute_force_prop_mutex(g, level)


def test_structural_invariants_on_dockers(dockers):
    engine = Engine(dockers)
    engine.run()
    for ag in engine.agents.values():
        assert graph_violations(ag.graph) == []
    for name in ("ag1", "ag2", "ag3"):
        g = local_graph(dockers, name, 5)
        assert graph_violations(g) == []
        for i in range(g.top - 1):
            assert g.action_levels[i] <= g.action_levels[i + 1]


def test_add_initial_carries_tokens_up(dockers):
    g = local_graph(dockers, "ag1", 2)
    tok = prop("tok()")
    g.add_initial([tok])
    assert all(tok in level for level in g.prop_levels)
    assert all(g.noop(tok) in level for level in g.action_levels)
    assert graph_violations(g) == []


def test_snapshot(dockers):
    g = local_graph(dockers, "ag3", 1)
    p1, mp1, a0, ma0 = g.snapshot(1)
    assert p1 == g.prop_levels[1] and a0 == g.action_levels[0]
    assert g.snapshot(0)[2] is None
    assert isinstance(g, PlanningGraph)
