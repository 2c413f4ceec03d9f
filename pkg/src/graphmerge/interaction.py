"""Public interfaces, interaction classification and merging of foreign actions."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .model import GroundAction, Proposition, codesignate, codesignates_any
from .parser import AgentSpec
from .plangraph import Links, PlanningGraph


class Polarity(enum.Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"


@dataclass(frozen=True)
class PublicInterface:
    agent: str
    preconds: frozenset = frozenset()
    add: frozenset = frozenset()
    delete: frozenset = frozenset()

    @property
    def vocabulary(self) -> frozenset:
        """Propositions whose truth the agent cares about (its preconditions and products)."""
        return self.preconds | self.add


@dataclass(frozen=True)
class InteractionRecord:
    action: GroundAction
    sender: str
    receiver: str
    polarity: Polarity
    witnesses: frozenset  # of (ground proposition, interface proposition)
    level: int = 0


def public_interface(agent: AgentSpec) -> PublicInterface:
    pre, add, dele = set(), set(), set()
    for op in agent.operators:
        pre |= op.preconds
        add |= op.add
        dele |= op.delete
    return PublicInterface(agent.name, frozenset(pre), frozenset(add), frozenset(dele))


def _witnesses(props: Iterable[Proposition], pool: Iterable[Proposition], objects) -> frozenset:
    pool = sorted(pool)
    return frozenset(
        (p, q) for p in props for q in pool if codesignate(p, q, objects) is not None
    )


def interaction_witnesses(
    a: GroundAction, target: PublicInterface, objects: Optional[Mapping[str, str]] = None
) -> dict:
    out = {}
    neg = _witnesses(a.delete, target.vocabulary, objects)
    if neg:
        out[Polarity.NEGATIVE] = neg
    pos = _witnesses(a.add, target.vocabulary, objects)
    if pos:
        out[Polarity.POSITIVE] = pos
    return out


def classify_interaction(
    a: GroundAction, target: PublicInterface, objects: Optional[Mapping[str, str]] = None
) -> frozenset:
    return frozenset(interaction_witnesses(a, target, objects))


def outgoing_interactions(
    g: PlanningGraph,
    level: int,
    peers: Iterable[PublicInterface],
    objects: Optional[Mapping[str, str]] = None,
) -> list:
    """Records for every locally owned, effective action of A_level against each peer."""
    peers = sorted((p for p in peers if p.agent != g.owner), key=lambda p: p.agent)
    out = []
    for a in sorted(g.action_levels[level]):
        if a.is_noop or a.inert or g.is_foreign(a):
            continue
        for peer in peers:
            found = interaction_witnesses(a, peer, objects)
            for pol in (Polarity.NEGATIVE, Polarity.POSITIVE):
                if pol in found:
                    out.append(InteractionRecord(a, g.owner, peer.agent, pol, found[pol], level))
    return out


def relevant(p: Proposition, interface: PublicInterface, objects=None) -> bool:
    return codesignates_any(p, interface.vocabulary, objects)


def filtered_links(a: GroundAction, interface: PublicInterface, objects=None) -> Links:
    keep = lambda props: frozenset(p for p in props if relevant(p, interface, objects))
    return Links(keep(a.preconds), keep(a.add), keep(a.delete))


def fictive_token(a: GroundAction) -> Proposition:
    return Proposition("__ext", (a.owner, str(a)))


def is_fictive(p: Proposition) -> bool:
    return p.predicate == "__ext"


def shared_beliefs(
    own: PublicInterface, peers: Iterable, objects: Optional[Mapping[str, str]] = None
) -> frozenset:
    """Facts believed by peers that fall inside ``own``'s vocabulary."""
    out = set()
    for spec in peers:
        if spec.name == own.agent:
            continue
        out.update(p for p in spec.beliefs if relevant(p, own, objects))
    return frozenset(out)


def merge_external(
    g: PlanningGraph,
    records: Iterable[InteractionRecord],
    level: int,
    interface: PublicInterface,
    objects: Optional[Mapping[str, str]] = None,
) -> PlanningGraph:
    """Wire foreign actions into A_level of the receiver's graph.

    Each action is linked only through propositions of the receiver's
    vocabulary.  An action left without any linked precondition gets a fictive
    one held from P_0, so extraction still finds a path to it.
    """
    if not 0 <= level < len(g.action_levels):
        raise IndexError(f"unknown level {level} in graph of {g.owner}")
    while len(g.foreign) <= level:
        g.foreign.append(set())
    changed = False
    seen = set()
    for rec in records:
        a = rec.action
        if a in seen or a.owner == g.owner:
            continue
        seen.add(a)
        if a in g.foreign[level]:
            continue
        ln = filtered_links(a, interface, objects)
        if not ln.add and not ln.delete:
            continue
        if not ln.pre:
            token = fictive_token(a)
            g.add_initial([token])
            ln = Links(frozenset([token]), ln.add, ln.delete)
        prior = g.links.get(a)
        if prior is not None and prior != ln:
            raise ValueError(f"conflicting links for {a.qualified}")
        g.links[a] = ln
        g.foreign[level].add(a)
        changed = True
    if changed:
        g.rebuild_from(level)
    return g
