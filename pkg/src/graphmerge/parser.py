"""S-expression reader for multi-agent problem files, and the plan text format.

Problem syntax::

    (problem dockers
      (types truck container location)
      (objects t1 t2 - truck c1 c2 - container l1 l2 - location)
      (goal (at c1 l2) (at c2 l1))
      (agent ag1
        (belief (at c1 l1) (at t1 l1))
        (operator load-l1 (params ?c - container ?t - truck)
          (pre (at ?t l1) (at ?c l1)) (add (in ?t ?c)) (del (at ?c l1)))))

Plan syntax is one line per level: ``i: agent.action(args) | agent.action(args)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from .model import (
    ROOT_TYPE,
    GlobalPlan,
    GroundAction,
    OperatorSchema,
    Proposition,
    Var,
    instantiate,
)

NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_-]*\Z")
VAR_RE = re.compile(r"\?[A-Za-z0-9_-]+\Z")


class ParseError(Exception):
    """Structured input error; ``kind`` is one of the documented error kinds."""

    def __init__(self, kind: str, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{line}:{column}: {kind}: {message}")
        self.kind = kind
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class AgentSpec:
    name: str
    beliefs: frozenset = frozenset()
    operators: tuple = ()  # tuple[OperatorSchema, ...]


@dataclass(frozen=True)
class Problem:
    name: str
    types: frozenset
    objects: Mapping[str, str]
    goal: frozenset
    agents: tuple  # tuple[AgentSpec, ...]

    def agent(self, name: str) -> AgentSpec:
        for a in self.agents:
            if a.name == name:
                return a
        raise KeyError(name)

    @property
    def initial_state(self) -> frozenset:
        return frozenset().union(*(a.beliefs for a in self.agents))


# ---------------------------------------------------------------------------
# tokenizer


@dataclass
class Atom:
    text: str
    line: int
    column: int


@dataclass
class SList:
    items: list
    line: int
    column: int


def _tokens(text: str):
    line, col = 1, 0
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line, col = line + 1, 0
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c in "()":
            yield c, line, col + 1
            i += 1
            col += 1
            continue
        start, scol = i, col + 1
        while i < n and not text[i].isspace() and text[i] not in "();":
            i += 1
            col += 1
        yield text[start:i], line, scol


def read_sexprs(text: str) -> list:
    stack: list = [SList([], 0, 0)]
    for tok, line, col in _tokens(text):
        if tok == "(":
            stack.append(SList([], line, col))
        elif tok == ")":
            if len(stack) == 1:
                raise ParseError("syntax-error", "unbalanced ')'", line, col)
            done = stack.pop()
            stack[-1].items.append(done)
        else:
            stack[-1].items.append(Atom(tok, line, col))
    if len(stack) != 1:
        top = stack[-1]
        raise ParseError("syntax-error", "unclosed '('", top.line, top.column)
    return stack[0].items


# ---------------------------------------------------------------------------
# problem interpretation


def _err(kind: str, node, message: str) -> ParseError:
    return ParseError(kind, message, node.line, node.column)


def _atom(node, what: str, pattern=NAME_RE) -> str:
    if not isinstance(node, Atom) or not pattern.match(node.text):
        raise _err("syntax-error", node, f"expected {what}")
    return node.text


def _head(node, keyword: str) -> bool:
    return (
        isinstance(node, SList)
        and node.items
        and isinstance(node.items[0], Atom)
        and node.items[0].text == keyword
    )


def _section(node, keyword: str) -> list:
    if not _head(node, keyword):
        raise _err("syntax-error", node, f"expected ({keyword} ...)")
    return node.items[1:]


class _Builder:
    def __init__(self):
        self.types: set = {ROOT_TYPE}
        self.declared_types = False
        self.objects: dict = {}
        self.arity: dict = {}

    def check_arity(self, node, predicate: str, n: int):
        known = self.arity.setdefault(predicate, n)
        if known != n:
            raise _err("arity-mismatch", node, f"{predicate} used with {n} and {known} arguments")

    def ground_prop(self, node) -> Proposition:
        if not isinstance(node, SList) or not node.items:
            raise _err("syntax-error", node, "expected a proposition")
        pred = _atom(node.items[0], "predicate name")
        args = []
        for a in node.items[1:]:
            name = _atom(a, "object name")
            if name not in self.objects:
                raise _err("unknown-object", a, f"undeclared object {name}")
            args.append(name)
        self.check_arity(node, pred, len(args))
        return Proposition(pred, tuple(args))

    def lifted_prop(self, node, params: Mapping[str, Var]) -> Proposition:
        if not isinstance(node, SList) or not node.items:
            raise _err("syntax-error", node, "expected a proposition")
        pred = _atom(node.items[0], "predicate name")
        args: list = []
        for a in node.items[1:]:
            if isinstance(a, Atom) and a.text.startswith("?"):
                if a.text not in params:
                    raise _err("syntax-error", a, f"unbound variable {a.text}")
                args.append(params[a.text])
            else:
                name = _atom(a, "object name or variable")
                if name not in self.objects:
                    raise _err("unknown-object", a, f"undeclared object {name}")
                args.append(name)
        self.check_arity(node, pred, len(args))
        return Proposition(pred, tuple(args))

    def typed_list(self, items: list, pattern, what: str) -> list:
        """``a b - t c - u d`` -> [(a, t), (b, t), (c, u), (d, object)]."""
        out, pending = [], []
        i = 0
        while i < len(items):
            node = items[i]
            if isinstance(node, Atom) and node.text == "-":
                if not pending or i + 1 >= len(items):
                    raise _err("syntax-error", node, "misplaced '-'")
                tnode = items[i + 1]
                tname = _atom(tnode, "type name")
                if tname not in self.types:
                    raise _err("unknown-type", tnode, f"undeclared type {tname}")
                out.extend((n, tname, at) for n, at in pending)
                pending = []
                i += 2
                continue
            pending.append((_atom(node, what, pattern), node))
            i += 1
        out.extend((n, ROOT_TYPE, at) for n, at in pending)
        return out

    def operator(self, node) -> OperatorSchema:
        items = _section(node, "operator")
        if len(items) != 5:
            raise _err("syntax-error", node, "operator needs name, params, pre, add, del")
        name = _atom(items[0], "operator name")
        params: dict = {}
        ordered = []
        for vname, tname, at in self.typed_list(_section(items[1], "params"), VAR_RE, "variable"):
            if vname in params:
                raise _err("syntax-error", at, f"duplicate parameter {vname}")
            params[vname] = Var(vname, tname)
            ordered.append(params[vname])
        pre = {self.lifted_prop(p, params) for p in _section(items[2], "pre")}
        add = {self.lifted_prop(p, params) for p in _section(items[3], "add")}
        dele = {self.lifted_prop(p, params) for p in _section(items[4], "del")}
        try:
            return OperatorSchema(name, tuple(ordered), pre, add, dele)
        except ValueError as exc:
            raise _err("syntax-error", node, str(exc)) from None

    def agent(self, node) -> AgentSpec:
        items = _section(node, "agent")
        if len(items) < 2:
            raise _err("syntax-error", node, "agent needs a name and a belief section")
        name = _atom(items[0], "agent name")
        beliefs = frozenset(self.ground_prop(p) for p in _section(items[1], "belief"))
        ops = tuple(self.operator(o) for o in items[2:])
        seen = set()
        for o, onode in zip(ops, items[2:]):
            if o.name in seen:
                raise _err("syntax-error", onode, f"duplicate operator {o.name} in agent {name}")
            seen.add(o.name)
        return AgentSpec(name, beliefs, ops)


def parse_problem(text: Union[str, bytes]) -> Problem:
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("syntax-error", f"invalid UTF-8 at byte {exc.start}", 1, 0) from None
    forms = read_sexprs(text)
    if len(forms) != 1 or not _head(forms[0], "problem"):
        node = forms[0] if forms else Atom("", 1, 0)
        raise _err("syntax-error", node, "expected a single (problem ...) form")
    root = forms[0]
    items = root.items[1:]
    if not items:
        raise _err("syntax-error", root, "missing problem name")
    name = _atom(items[0], "problem name")
    b = _Builder()
    i = 1
    if i < len(items) and _head(items[i], "types"):
        for t in items[i].items[1:]:
            b.types.add(_atom(t, "type name"))
        b.declared_types = True
        i += 1
    if i >= len(items) or not _head(items[i], "objects"):
        raise _err("syntax-error", items[i] if i < len(items) else root, "expected (objects ...)")
    for oname, tname, at in b.typed_list(items[i].items[1:], NAME_RE, "object name"):
        if oname in b.objects:
            raise _err("syntax-error", at, f"duplicate object {oname}")
        b.objects[oname] = tname
    i += 1
    if i >= len(items) or not _head(items[i], "goal"):
        raise _err("syntax-error", items[i] if i < len(items) else root, "expected (goal ...)")
    goal_items = items[i].items[1:]
    if not goal_items:
        raise _err("empty-goal", items[i], "goal section is empty")
    goal = frozenset(b.ground_prop(p) for p in goal_items)
    i += 1
    agents = []
    names = set()
    for node in items[i:]:
        spec = b.agent(node)
        if spec.name in names:
            raise _err("duplicate-agent", node, f"agent {spec.name} declared twice")
        names.add(spec.name)
        agents.append(spec)
    if not agents:
        raise _err("syntax-error", root, "a problem needs at least one agent")
    return Problem(name, frozenset(b.types), dict(b.objects), goal, tuple(agents))


# ---------------------------------------------------------------------------
# canonical printer


def _fmt_prop(p: Proposition) -> str:
    return "(" + " ".join([p.predicate, *map(str, p.args)]) + ")"


def _fmt_props(props: Iterable[Proposition]) -> str:
    return " ".join(_fmt_prop(p) for p in sorted(props))


def format_problem(problem: Problem) -> str:
    lines = [f"(problem {problem.name}"]
    types = sorted(problem.types - {ROOT_TYPE})
    if types:
        lines.append(f"  (types {' '.join(types)})")
    objs = " ".join(f"{o} - {t}" for o, t in sorted(problem.objects.items()))
    lines.append(f"  (objects {objs})")
    lines.append(f"  (goal {_fmt_props(problem.goal)})")
    for ag in problem.agents:
        lines.append(f"  (agent {ag.name}")
        lines.append(f"    (belief {_fmt_props(ag.beliefs)})")
        for op in ag.operators:
            params = " ".join(f"{v.name} - {v.type}" for v in op.params)
            lines.append(f"    (operator {op.name} (params {params})")
            lines.append(
                f"      (pre {_fmt_props(op.preconds)}) (add {_fmt_props(op.add)})"
                f" (del {_fmt_props(op.delete)}))"
            )
        lines[-1] += ")"
    lines[-1] += ")"
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# plan text format


def render_plan(plan: GlobalPlan) -> str:
    out = []
    for i, level in enumerate(plan.levels):
        acts = sorted(level, key=lambda a: (a.owner, a.name, tuple(map(str, a.args))))
        body = " | ".join(a.qualified for a in acts)
        out.append(f"{i}: {body}".rstrip())
    return "".join(line + "\n" for line in out)


_ACTION_RE = re.compile(r"([A-Za-z][A-Za-z0-9_-]*)\.([A-Za-z][A-Za-z0-9_-]*)\(([^()]*)\)\Z")


def parse_plan(text: str, problem: Problem) -> GlobalPlan:
    """Read the plan format back, re-instantiating each action from its owner's schema."""
    schemas = {(a.name, o.name): o for a in problem.agents for o in a.operators}
    levels: list = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        idx, sep, body = line.partition(":")
        if not sep or not idx.strip().isdigit():
            raise ParseError("syntax-error", "expected '<level>: ...'", lineno, 1)
        if int(idx) != len(levels):
            raise ParseError("syntax-error", f"level {idx} out of sequence", lineno, 1)
        acts = set()
        for chunk in filter(None, (c.strip() for c in body.split("|"))):
            m = _ACTION_RE.match(chunk)
            if not m:
                raise ParseError("syntax-error", f"malformed action {chunk!r}", lineno, 1)
            owner, oname, argtext = m.groups()
            schema = schemas.get((owner, oname))
            if schema is None:
                raise ParseError("unknown-object", f"no operator {oname} for agent {owner}", lineno, 1)
            args = tuple(a.strip() for a in argtext.split(",") if a.strip())
            if len(args) != len(schema.params):
                raise ParseError("arity-mismatch", f"{oname} takes {len(schema.params)} arguments", lineno, 1)
            for a, v in zip(args, schema.params):
                if a not in problem.objects:
                    raise ParseError("unknown-object", f"undeclared object {a}", lineno, 1)
                if v.type != ROOT_TYPE and problem.objects[a] != v.type:
                    raise ParseError("unknown-type", f"{a} is not a {v.type}", lineno, 1)
            acts.add(instantiate(schema, args, owner))
        levels.append(frozenset(acts))
    return GlobalPlan(tuple(levels))
