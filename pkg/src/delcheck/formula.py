"""AST, parser and renderer for the epistemic update language.

The core language has five constructors: atoms, negation, conjunction,
knowledge modalities, and update boxes carrying an embedded pointed event
model.  Every derived connective (truth constants, disjunction,
implication, the dual knowledge operator, diamond updates) is desugared
into the core at construction or parse time, so downstream code only ever
sees the five node kinds.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Iterator, Mapping

if TYPE_CHECKING:
    from .kripke import PointedEventModel


class FormulaError(ValueError):
    """Malformed formula input or an unrenderable AST."""


class FormulaSyntaxError(FormulaError):
    """Parse failure, with the offset of the offending token."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


#: Reserved proposition used to anchor parsed `top`/`bot`.  `bot` is sugar
#: for a contradiction on some atom; the parser has no vocabulary to pick
#: from, so it uses this reserved name.  Generators that must stay inside a
#: fixed vocabulary pass their own anchor to :func:`falsum` / :func:`verum`.
FALSUM_ANCHOR = "_p0"


@dataclass(frozen=True, slots=True)
class Atom:
    prop: str


@dataclass(frozen=True, slots=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True, slots=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True, slots=True)
class Know:
    agent: str
    sub: "Formula"


@dataclass(frozen=True, slots=True)
class UpdateBox:
    update: "PointedEventModel"
    sub: "Formula"


Formula = Atom | Not | And | Know | UpdateBox


@dataclass(frozen=True, slots=True, order=True)
class Literal:
    """A proposition or its negation, used in event postconditions."""

    prop: str
    negated: bool = False

    def __str__(self) -> str:
        return ("~" if self.negated else "") + self.prop


# ---------------------------------------------------------------------------
# Derived connectives (desugared on construction)
# ---------------------------------------------------------------------------

def khat(agent: str, f: Formula) -> Formula:
    """Dual knowledge operator: ``Khat a f`` is ``~K a ~f``."""
    return Not(Know(agent, Not(f)))


def lor(left: Formula, right: Formula) -> Formula:
    """Disjunction, desugared to ``~(~l & ~r)``."""
    return Not(And(Not(left), Not(right)))


def implies(left: Formula, right: Formula) -> Formula:
    """Implication, desugared via ``~l | r``."""
    return lor(Not(left), right)


def falsum(anchor: str = FALSUM_ANCHOR) -> Formula:
    """The always-false formula ``(p & ~p)`` on the given anchor atom."""
    return And(Atom(anchor), Not(Atom(anchor)))


def verum(anchor: str = FALSUM_ANCHOR) -> Formula:
    """The always-true formula, negation of :func:`falsum`."""
    return Not(falsum(anchor))


def diamond(update: "PointedEventModel", f: Formula) -> Formula:
    """Diamond update: ``<E> f`` is ``~[E] ~f``."""
    return Not(UpdateBox(update, Not(f)))


def conj(parts: Iterable[Formula]) -> Formula:
    """Left-folded conjunction of a nonempty sequence."""
    parts = list(parts)
    if not parts:
        raise FormulaError("conj() needs at least one conjunct")
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def parse_literal(text: str) -> Literal:
    text = text.strip()
    negated = text.startswith("~") or text.startswith("!")
    if negated:
        text = text[1:].strip()
    if not _IDENT_RE.fullmatch(text):
        raise FormulaError(f"bad literal {text!r}")
    return Literal(text, negated)


# ---------------------------------------------------------------------------
# Walking
# ---------------------------------------------------------------------------

def iter_subformulas(f: Formula, into_updates: bool = True) -> Iterator[Formula]:
    """Yield every node of the desugared AST, preorder.

    With ``into_updates`` the walk also descends into the precondition
    formulas of embedded event models (postconditions are literal sets, not
    formulas, and are not yielded).
    """
    stack = [f]
    while stack:
        node = stack.pop()
        yield node
        t = type(node)
        if t is Not:
            stack.append(node.sub)
        elif t is And:
            stack.append(node.right)
            stack.append(node.left)
        elif t is Know:
            stack.append(node.sub)
        elif t is UpdateBox:
            stack.append(node.sub)
            if into_updates:
                model = node.update.model
                for e in sorted(model.pre):
                    stack.append(model.pre[e])


@dataclass(frozen=True)
class FormulaStats:
    node_count: int
    update_count: int
    max_update_nesting: int
    props_used: frozenset[str]
    agents_used: frozenset[str]


def formula_stats(f: Formula) -> FormulaStats:
    """Exact counts over the desugared AST, including nodes inside embedded
    event-model preconditions.  Postcondition literals contribute their
    proposition to ``props_used``."""
    nodes = 0
    updates = 0
    props: set[str] = set()
    agents: set[str] = set()
    for node in iter_subformulas(f):
        nodes += 1
        t = type(node)
        if t is Atom:
            props.add(node.prop)
        elif t is Know:
            agents.add(node.agent)
        elif t is UpdateBox:
            updates += 1
            model = node.update.model
            for agent, rel in model.relations.items():
                if rel:
                    agents.add(agent)
            for lits in model.post.values():
                for lit in lits:
                    props.add(lit.prop)

    depth_memo: dict[int, int] = {}

    def depth(node: Formula) -> int:
        key = id(node)
        if key in depth_memo:
            return depth_memo[key]
        t = type(node)
        if t is Atom:
            d = 0
        elif t is Not or t is Know:
            d = depth(node.sub)
        elif t is And:
            d = max(depth(node.left), depth(node.right))
        else:
            inner = max(
                (depth(p) for p in node.update.model.pre.values()), default=0
            )
            d = max(1 + inner, depth(node.sub))
        depth_memo[key] = d
        return d

    return FormulaStats(nodes, updates, depth(f), frozenset(props), frozenset(agents))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_KEYWORDS = {"K", "Khat", "top", "bot"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<box>\[\s*upd:\s*(?P<boxname>[A-Za-z_][A-Za-z0-9_]*)\s*\])
  | (?P<dia><\s*upd:\s*(?P<dianame>[A-Za-z_][A-Za-z0-9_]*)\s*>)
  | (?P<implies>->)
  | (?P<and>&)
  | (?P<or>\|)
  | (?P<not>~)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind == "box":
            tokens.append(("box", m.group("boxname"), pos))
        elif kind == "dia":
            tokens.append(("dia", m.group("dianame"), pos))
        elif kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(
        self,
        text: str,
        events: Mapping[str, "PointedEventModel"] | None,
        agents: Iterable[str] | None,
    ):
        self.tokens = _tokenize(text)
        self.i = 0
        self.events = events or {}
        self.agents = frozenset(agents) if agents is not None else None

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str):
        tok = self.advance()
        if tok[0] != kind:
            raise FormulaSyntaxError(f"expected {kind}, found {tok[1]!r}", tok[2])
        return tok

    def parse(self) -> Formula:
        f = self.implication()
        tok = self.peek()
        if tok[0] != "eof":
            raise FormulaSyntaxError(f"unexpected trailing input {tok[1]!r}", tok[2])
        return f

    def implication(self) -> Formula:
        left = self.disjunction()
        if self.peek()[0] == "implies":
            self.advance()
            right = self.implication()
            return implies(left, right)
        return left

    def disjunction(self) -> Formula:
        out = self.conjunction()
        while self.peek()[0] == "or":
            self.advance()
            out = lor(out, self.conjunction())
        return out

    def conjunction(self) -> Formula:
        out = self.unary()
        while self.peek()[0] == "and":
            self.advance()
            out = And(out, self.unary())
        return out

    def agent_name(self) -> str:
        tok = self.advance()
        if tok[0] != "ident" or tok[1] in _KEYWORDS:
            raise FormulaSyntaxError(f"expected agent name, found {tok[1]!r}", tok[2])
        if self.agents is not None and tok[1] not in self.agents:
            raise FormulaSyntaxError(f"unknown agent {tok[1]!r}", tok[2])
        return tok[1]

    def update_model(self, name: str, pos: int) -> "PointedEventModel":
        try:
            return self.events[name]
        except KeyError:
            raise FormulaSyntaxError(f"unknown event model {name!r}", pos) from None

    def unary(self) -> Formula:
        kind, value, pos = self.advance()
        if kind == "not":
            return Not(self.unary())
        if kind == "box":
            return UpdateBox(self.update_model(value, pos), self.unary())
        if kind == "dia":
            return diamond(self.update_model(value, pos), self.unary())
        if kind == "lparen":
            f = self.implication()
            self.expect("rparen")
            return f
        if kind == "ident":
            if value == "K":
                return Know(self.agent_name(), self.unary())
            if value == "Khat":
                return khat(self.agent_name(), self.unary())
            if value == "top":
                return verum()
            if value == "bot":
                return falsum()
            return Atom(value)
        raise FormulaSyntaxError(f"unexpected token {value!r}", pos)


def parse_formula(
    text: str,
    events: Mapping[str, "PointedEventModel"] | None = None,
    agents: Iterable[str] | None = None,
) -> Formula:
    """Parse the ASCII formula language into a desugared AST.

    ``events`` maps names to pointed event models; every ``[upd:NAME]`` /
    ``<upd:NAME>`` in the text must resolve through it.  When ``agents`` is
    given, `K`/`Khat` operators are checked against that roster.
    """
    return _Parser(text, events, agents).parse()


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _assign_event_names(f: Formula) -> dict[int, str]:
    """Map id(pointed event model) -> name, generating stable names for
    anonymous models and rejecting name collisions between distinct ones."""
    by_id: dict[int, str] = {}
    taken: dict[str, int] = {}
    counter = 0
    for node in iter_subformulas(f):
        if type(node) is not UpdateBox:
            continue
        pem = node.update
        if id(pem) in by_id:
            continue
        name = pem.name
        if name is None:
            while True:
                name = f"_u{counter}"
                counter += 1
                if name not in taken:
                    break
        elif name in taken and taken[name] != id(pem):
            raise FormulaError(
                f"two distinct event models share the name {name!r}"
            )
        by_id[id(pem)] = name
        taken[name] = id(pem)
    return by_id


def formula_event_table(f: Formula) -> dict[str, "PointedEventModel"]:
    """The named event-model table needed to reparse ``render_formula(f)``."""
    names = _assign_event_names(f)
    table: dict[str, "PointedEventModel"] = {}
    for node in iter_subformulas(f):
        if type(node) is UpdateBox:
            table[names[id(node.update)]] = node.update
    return table


def render_formula(f: Formula) -> str:
    """Render to concrete syntax; ``parse_formula(render_formula(f))`` with
    the table from :func:`formula_event_table` reproduces ``f`` exactly."""
    names = _assign_event_names(f)

    def rec(node: Formula) -> str:
        t = type(node)
        if t is Atom:
            return node.prop
        if t is Not:
            return "~" + rec(node.sub)
        if t is And:
            return f"({rec(node.left)} & {rec(node.right)})"
        if t is Know:
            return f"K {node.agent} {rec(node.sub)}"
        return f"[upd:{names[id(node.update)]}] {rec(node.sub)}"

    return rec(f)
