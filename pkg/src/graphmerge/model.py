"""Ground STRIPS semantics shared by every other module.

Propositions are immutable values.  Lifted propositions carry :class:`Var`
arguments, ground ones carry plain object names.  A state is a frozenset of
positive ground propositions (closed world).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import total_ordering
from typing import Iterable, Mapping, Optional, Union

ROOT_TYPE = "object"


class PlanningError(Exception):
    """Base class for semantic errors raised by the planner."""


class NotApplicable(PlanningError):
    pass


class DependentSet(PlanningError):
    pass


@total_ordering
@dataclass(frozen=True)
class Var:
    """A typed schema variable such as ``?t - truck``."""

    name: str
    type: str = ROOT_TYPE

    def __post_init__(self):
        if not self.name.startswith("?") or len(self.name) < 2:
            raise ValueError(f"variable names start with '?': {self.name!r}")

    def __str__(self) -> str:
        return self.name

    def __lt__(self, other):
        if not isinstance(other, Var):
            return NotImplemented
        return (self.name, self.type) < (other.name, other.type)


Term = Union[str, Var]


def _term_key(t: Term) -> str:
    return t.name if isinstance(t, Var) else t


@total_ordering
@dataclass(frozen=True)
class Proposition:
    predicate: str
    args: tuple = ()
    positive: bool = True

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def is_ground(self) -> bool:
        return not any(isinstance(a, Var) for a in self.args)

    @property
    def arity(self) -> int:
        return len(self.args)

    def sort_key(self):
        return (self.predicate, tuple(_term_key(a) for a in self.args), not self.positive)

    def __lt__(self, other):
        if not isinstance(other, Proposition):
            return NotImplemented
        return self.sort_key() < other.sort_key()

    def substitute(self, binding: Mapping[Var, Term]) -> "Proposition":
        args = tuple(binding.get(a, a) if isinstance(a, Var) else a for a in self.args)
        return Proposition(self.predicate, args, self.positive)

    def negate(self) -> "Proposition":
        return Proposition(self.predicate, self.args, not self.positive)

    def __str__(self) -> str:
        body = f"{self.predicate}({','.join(_term_key(a) for a in self.args)})"
        return body if self.positive else "not " + body

    def __repr__(self) -> str:
        return f"<{self}>"


def prop(text: str) -> Proposition:
    """Build a ground proposition from ``"at(c1,l1)"`` shorthand (tests, REPL)."""
    text = text.strip()
    positive = True
    if text.startswith("not "):
        positive, text = False, text[4:].strip()
    name, _, rest = text.partition("(")
    args = tuple(a.strip() for a in rest.rstrip(")").split(",") if a.strip())
    return Proposition(name.strip(), args, positive)


State = frozenset  # frozenset[Proposition], positive facts only


# ---------------------------------------------------------------------------
# co-designation


def _type_of(term: Term, objects: Optional[Mapping[str, str]]) -> Optional[str]:
    if isinstance(term, Var):
        return term.type
    if objects is None:
        return None
    return objects.get(term)


def _compatible(t1: Optional[str], t2: Optional[str]) -> bool:
    return t1 is None or t2 is None or t1 == t2 or ROOT_TYPE in (t1, t2)


def _narrower(t1: str, t2: str) -> str:
    return t2 if t1 == ROOT_TYPE else t1


def codesignate(
    p: Proposition, q: Proposition, objects: Optional[Mapping[str, str]] = None
) -> Optional[dict]:
    """Most general typed unifier of two propositions, or ``None``.

    ``objects`` maps constants to their declared type; when omitted constants
    are untyped and unify with any variable.  The returned binding maps
    variables to constants or to other variables.
    """
    if p.predicate != q.predicate or p.positive != q.positive or p.arity != q.arity:
        return None
    binding: dict = {}

    def walk(t: Term) -> Term:
        while isinstance(t, Var) and t in binding:
            t = binding[t]
        return t

    for a, b in zip(p.args, q.args):
        a, b = walk(a), walk(b)
        if a == b:
            continue
        if isinstance(a, Var) and isinstance(b, Var):
            if not _compatible(a.type, b.type):
                return None
            # bind the more general variable to the narrower one
            if a.type == ROOT_TYPE and b.type != ROOT_TYPE:
                binding[a] = b
            else:
                binding[b] = a
        elif isinstance(a, Var):
            if not _compatible(a.type, _type_of(b, objects)):
                return None
            binding[a] = b
        elif isinstance(b, Var):
            if not _compatible(b.type, _type_of(a, objects)):
                return None
            binding[b] = a
        else:
            return None
    return {v: walk(t) for v, t in binding.items()}


def codesignates_any(
    p: Proposition, pool: Iterable[Proposition], objects: Optional[Mapping[str, str]] = None
) -> bool:
    return any(codesignate(p, q, objects) is not None for q in pool)


# ---------------------------------------------------------------------------
# operators and actions


@dataclass(frozen=True)
class OperatorSchema:
    name: str
    params: tuple = ()  # tuple[Var, ...]
    preconds: frozenset = frozenset()
    add: frozenset = frozenset()
    delete: frozenset = frozenset()

    def __post_init__(self):
        for fname in ("params",):
            object.__setattr__(self, fname, tuple(getattr(self, fname)))
        for fname in ("preconds", "add", "delete"):
            object.__setattr__(self, fname, frozenset(getattr(self, fname)))
        params = set(self.params)
        if len(params) != len(self.params):
            raise ValueError(f"{self.name}: duplicate parameter")
        for p in self.preconds | self.add | self.delete:
            if not p.positive:
                raise ValueError(f"{self.name}: only positive literals allowed, got {p}")
            for a in p.args:
                if isinstance(a, Var) and a not in params:
                    raise ValueError(f"{self.name}: variable {a} not among parameters")
        if self.add & self.delete:
            raise ValueError(f"{self.name}: add and delete lists overlap")


@dataclass(frozen=True, eq=False)
class GroundAction:
    """A ground operator instance owned by one agent.

    Identity is (owner, kind, name, args); two agents owning the same schema
    instance yield two distinct actions.
    """

    name: str
    args: tuple
    preconds: frozenset
    add: frozenset
    delete: frozenset
    owner: str = ""
    kind: str = "regular"  # regular | noop
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        for fname in ("preconds", "add", "delete"):
            object.__setattr__(self, fname, frozenset(getattr(self, fname)))
        object.__setattr__(self, "_hash", hash(self.key))

    @property
    def key(self) -> tuple:
        return (self.owner, self.kind != "noop", self.name, self.args)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroundAction):
            return NotImplemented
        return self._hash == other._hash and self.key == other.key

    def __lt__(self, other: "GroundAction") -> bool:
        return self.sort_key() < other.sort_key()

    def sort_key(self) -> tuple:
        return (self.kind != "noop", self.name, tuple(map(str, self.args)), self.owner)

    @property
    def is_noop(self) -> bool:
        return self.kind == "noop"

    @property
    def inert(self) -> bool:
        """True when applying the action can never change a state."""
        return self.add <= self.preconds and self.delete <= self.add

    def __str__(self) -> str:
        if self.is_noop:
            return f"noop({self.args[0]})"
        return f"{self.name}({','.join(map(str, self.args))})"

    @property
    def qualified(self) -> str:
        return f"{self.owner}.{self}"

    def __repr__(self) -> str:
        return f"<{self.qualified}>"


def noop(p: Proposition, owner: str = "") -> GroundAction:
    return GroundAction("noop", (p,), {p}, {p}, (), owner=owner, kind="noop")


def objects_of_type(objects: Mapping[str, str], type_name: str) -> list:
    if type_name == ROOT_TYPE:
        return sorted(objects)
    return sorted(o for o, t in objects.items() if t == type_name)


def instantiate(schema: OperatorSchema, args: tuple, owner: str = "") -> GroundAction:
    if len(args) != len(schema.params):
        raise ValueError(f"{schema.name} expects {len(schema.params)} arguments")
    binding = dict(zip(schema.params, args))
    return GroundAction(
        schema.name,
        tuple(args),
        {p.substitute(binding) for p in schema.preconds},
        {p.substitute(binding) for p in schema.add},
        {p.substitute(binding) for p in schema.delete},
        owner=owner,
    )


def ground(schema: OperatorSchema, objects: Mapping[str, str], owner: str = "") -> list:
    """Every type-respecting instantiation, ordered lexicographically by arguments."""
    pools = [objects_of_type(objects, v.type) for v in schema.params]
    return [instantiate(schema, combo, owner) for combo in itertools.product(*pools)]


# ---------------------------------------------------------------------------
# application semantics


def applicable(a: GroundAction, s: frozenset) -> bool:
    return a.preconds <= s


def apply(a: GroundAction, s: frozenset) -> frozenset:
    if not applicable(a, s):
        missing = ", ".join(map(str, sorted(a.preconds - s)))
        raise NotApplicable(f"{a.qualified} not applicable: missing {missing}")
    return (frozenset(s) - a.delete) | a.add


def independent(a: GroundAction, b: GroundAction) -> bool:
    return not (a.delete & (b.preconds | b.add)) and not (b.delete & (a.preconds | a.add))


def independent_set(actions: Iterable[GroundAction]) -> bool:
    actions = list(actions)
    return all(independent(a, b) for a, b in itertools.combinations(actions, 2))


def apply_set(actions: Iterable[GroundAction], s: frozenset) -> frozenset:
    actions = sorted(actions)
    if not independent_set(actions):
        raise DependentSet("action set is not independent: " + ", ".join(a.qualified for a in actions))
    s = frozenset(s)
    for a in actions:
        if not applicable(a, s):
            apply(a, s)  # raises with a useful message
    deleted = frozenset().union(*(a.delete for a in actions))
    added = frozenset().union(*(a.add for a in actions))
    return (s - deleted) | added


@dataclass(frozen=True)
class GlobalPlan:
    """Level-synchronous joint plan; every action carries its executing owner."""

    levels: tuple = ()  # tuple[frozenset[GroundAction], ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(frozenset(l) for l in self.levels))

    @property
    def makespan(self) -> int:
        return len(self.levels)

    def actions(self):
        for i, level in enumerate(self.levels):
            for a in sorted(level, key=lambda a: (a.owner, a.sort_key())):
                yield i, a
