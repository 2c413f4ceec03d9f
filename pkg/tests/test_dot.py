import re

from graphmerge.dot import graph_to_dot
from graphmerge.engine import Engine
from graphmerge.model import prop
from graphmerge.plangraph import init_graph


def first_iteration(problem):
    seen = {}

    def grab(engine, iteration):
        if iteration == 1:
            seen.update({n: graph_to_dot(engine.agents[n].graph, problem.goal) for n in engine.names})

    Engine(problem, on_iteration=grab).run()
    return seen


def clusters(text):
    return re.findall(r'subgraph "cluster_(\w+)"', text)


def test_ag3_first_iteration_has_both_moves(dockers):
    text = first_iteration(dockers)["ag3"]
    assert clusters(text) == ["P0", "A0", "P1"]
    assert '"A0:ag3.move(t1,l1,l2)" [label="ag3.move(t1,l1,l2)", shape=rectangle]' in text
    assert '"A0:ag3.move(t2,l2,l1)"' in text
    assert '"P0:at(t1,l1)" -> "A0:ag3.move(t1,l1,l2)";' in text
    assert '"A0:ag3.move(t1,l1,l2)" -> "P1:at(t1,l1)" [style=dashed];' in text
    assert '"P1:at(t1,l2)" [label="at(t1,l2)", shape=box, style=bold, penwidth=2]' in text


def test_foreign_actions_are_filled(dockers):
    text = first_iteration(dockers)["ag1"]
    assert re.search(r'"A0:ag3\.move\(t2,l2,l1\)" \[[^]]*style=filled', text)
    assert not re.search(r'"A0:ag1\.[^"]*" \[[^]]*style=filled', text)


def test_empty_beliefs():
    g = init_graph([], "nobody")
    g.expand(())
    text = graph_to_dot(g)
    assert text.startswith('digraph "nobody" {') and text.rstrip().endswith("}")
    assert clusters(text) == ["P0", "A0", "P1"]
    assert "->" not in text


def test_level_window(dockers):
    engine = Engine(dockers)
    engine.run()
    g = engine.agents["ag2"].graph
    text = graph_to_dot(g, dockers.goal, (0, 1))
    assert clusters(text) == ["P0", "A0", "P1"]
    assert "P2:" not in text
    assert clusters(graph_to_dot(g, (), (2, 99))) == [c for c in clusters(graph_to_dot(g)) if
                                                      int(c[1:]) >= 2]


def test_quotes_are_escaped():
    g = init_graph([prop("p(a)")], 'we"ird')
    assert 'digraph "we\\"ird"' in graph_to_dot(g)
