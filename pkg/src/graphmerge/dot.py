"""Graphviz rendering of a planning graph, one cluster per level.

Propositions are boxes (goal propositions bold), actions are plain
rectangles, foreign actions are filled.  Precondition and add edges are
solid, delete edges dashed.
"""

from __future__ import annotations

from typing import Iterable, Optional

from .plangraph import PlanningGraph


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _pid(p, i: int) -> str:
    return _q(f"P{i}:{p}")


def _aid(a, i: int) -> str:
    return _q(f"A{i}:{a.qualified}")


def graph_to_dot(g: PlanningGraph, goal: Iterable = (), levels: Optional[tuple] = None,
                 title: Optional[str] = None) -> str:
    """DOT text for proposition levels ``lo..hi`` of ``g`` and the action levels between them."""
    goal = frozenset(goal)
    lo, hi = levels if levels is not None else (0, g.top)
    lo, hi = max(0, lo), min(hi, g.top)
    out = [f"digraph {_q(title or g.owner or 'graph')} {{", "  rankdir=LR;", "  node [fontsize=10];"]
    for i in range(lo, hi + 1):
        out.append(f"  subgraph {_q(f'cluster_P{i}')} {{")
        out.append(f"    label={_q(f'P{i}')};")
        for p in sorted(g.prop_levels[i]):
            style = ', style=bold, penwidth=2' if p in goal else ""
            out.append(f"    {_pid(p, i)} [label={_q(str(p))}, shape=box{style}];")
        out.append("  }")
        if i == hi:
            break
        out.append(f"  subgraph {_q(f'cluster_A{i}')} {{")
        out.append(f"    label={_q(f'A{i}')};")
        for a in sorted(g.action_levels[i]):
            if a.is_noop:
                out.append(f"    {_aid(a, i)} [label=\"\", shape=point];")
                continue
            fill = ", style=filled, fillcolor=lightgrey" if g.is_foreign(a) else ""
            out.append(f"    {_aid(a, i)} [label={_q(a.qualified)}, shape=rectangle{fill}];")
        out.append("  }")
        for a in sorted(g.action_levels[i]):
            ln = g.link(a)
            for p in sorted(ln.pre):
                out.append(f"  {_pid(p, i)} -> {_aid(a, i)};")
            for p in sorted(ln.add):
                out.append(f"  {_aid(a, i)} -> {_pid(p, i + 1)};")
            for p in sorted(ln.delete):
                if p in g.prop_levels[i + 1]:
                    out.append(f"  {_aid(a, i)} -> {_pid(p, i + 1)} [style=dashed];")
    out.append("}")
    return "\n".join(out) + "\n"
