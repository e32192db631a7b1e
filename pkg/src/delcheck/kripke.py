"""Epistemic models, event models, S5 validation/closure, and instance files.

Worlds and events are opaque strings.  Relations are stored as explicit
pair sets (reflexive loops included), valuations as true-sets per world.
Models are immutable after construction and compare by identity.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .formula import (
    Formula,
    FormulaError,
    Literal,
    formula_event_table,
    parse_formula,
    parse_literal,
    render_formula,
    verum,
)

Relations = Mapping[str, Iterable[tuple[str, str]]]


class ModelError(ValueError):
    """Structurally invalid model or event model."""


class S5Error(ModelError):
    """A relation claimed to be S5 is not an equivalence relation."""


# ---------------------------------------------------------------------------
# S5 validation and closure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class S5Violation:
    agent: str
    pair: tuple[str, str]
    kind: str  # "reflexive" | "symmetric" | "transitive"


@dataclass(frozen=True)
class S5Report:
    ok: bool
    violations: tuple[S5Violation, ...]


def _check_endpoints(relations: Relations, carrier: Iterable[str]) -> None:
    carrier = set(carrier)
    for agent, pairs in relations.items():
        for (u, v) in pairs:
            if u not in carrier or v not in carrier:
                raise ModelError(
                    f"relation for agent {agent!r} mentions {(u, v)!r} "
                    f"outside the carrier"
                )


def validate_s5(relations: Relations, carrier: Iterable[str]) -> S5Report:
    """Check that each agent relation is an equivalence relation on the
    carrier.  Violations list every missing pair, tagged with the axiom it
    breaks.  Endpoints outside the carrier raise :class:`ModelError`."""
    carrier = set(carrier)
    _check_endpoints(relations, carrier)
    violations: list[S5Violation] = []
    for agent in sorted(relations):
        rel = set(relations[agent])
        for w in sorted(carrier):
            if (w, w) not in rel:
                violations.append(S5Violation(agent, (w, w), "reflexive"))
        for (u, v) in sorted(rel):
            if (v, u) not in rel:
                violations.append(S5Violation(agent, (v, u), "symmetric"))
        succ: dict[str, set[str]] = {}
        for (u, v) in rel:
            succ.setdefault(u, set()).add(v)
        for (u, v) in sorted(rel):
            for x in sorted(succ.get(v, ())):
                if (u, x) not in rel:
                    violations.append(S5Violation(agent, (u, x), "transitive"))
    return S5Report(not violations, tuple(violations))


def s5_closure(
    relations: Relations, carrier: Iterable[str]
) -> dict[str, frozenset[tuple[str, str]]]:
    """Least equivalence relation per agent containing the input pairs.

    Computed as connected components of the symmetrised pair graph; every
    carrier element forms its own singleton class when untouched.
    """
    carrier = list(dict.fromkeys(carrier))
    _check_endpoints(relations, carrier)
    out: dict[str, frozenset[tuple[str, str]]] = {}
    for agent, pairs in relations.items():
        parent = {w: w for w in carrier}

        def find(x: str) -> str:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for (u, v) in pairs:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
        classes: dict[str, list[str]] = {}
        for w in carrier:
            classes.setdefault(find(w), []).append(w)
        closed = set()
        for members in classes.values():
            for u in members:
                for v in members:
                    closed.add((u, v))
        out[agent] = frozenset(closed)
    return out


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

class EpistemicModel:
    """Worlds, per-agent relations, and a true-set valuation.

    ``s5=True`` asserts (and checks) that every relation is an equivalence
    relation.  A zero-world model is only constructible through
    :meth:`empty` and acts as the sentinel result of a product update whose
    preconditions filtered everything out.
    """

    __slots__ = ("worlds", "relations", "valuation", "s5", "_neighbors")

    def __init__(
        self,
        worlds: Iterable[str],
        relations: Relations,
        valuation: Mapping[str, Iterable[str]],
        s5: bool = False,
        _allow_empty: bool = False,
    ):
        self.worlds = frozenset(worlds)
        if not self.worlds and not _allow_empty:
            raise ModelError("a model needs at least one world")
        self.relations = {
            a: frozenset(tuple(p) for p in pairs) for a, pairs in relations.items()
        }
        _check_endpoints(self.relations, self.worlds)
        for w in valuation:
            if w not in self.worlds:
                raise ModelError(f"valuation mentions unknown world {w!r}")
        val = {w: frozenset() for w in self.worlds}
        val.update({w: frozenset(ps) for w, ps in valuation.items()})
        self.valuation = val
        self.s5 = bool(s5)
        if self.s5:
            report = validate_s5(self.relations, self.worlds)
            if not report.ok:
                first = report.violations[0]
                raise S5Error(
                    f"relation for agent {first.agent!r} is not an equivalence "
                    f"relation: missing {first.kind} pair {first.pair!r}"
                )
        neigh: dict[str, dict[str, tuple[str, ...]]] = {}
        for agent, pairs in self.relations.items():
            per: dict[str, list[str]] = {w: [] for w in self.worlds}
            for (u, v) in pairs:
                per[u].append(v)
            neigh[agent] = {w: tuple(sorted(vs)) for w, vs in per.items()}
        self._neighbors = neigh

    @classmethod
    def empty(cls, agents: Iterable[str] = ()) -> "EpistemicModel":
        return cls((), {a: () for a in agents}, {}, _allow_empty=True)

    @property
    def is_empty(self) -> bool:
        return not self.worlds

    def agents(self) -> frozenset[str]:
        return frozenset(self.relations)

    def neighbors(self, agent: str, world: str) -> tuple[str, ...]:
        return self._neighbors.get(agent, {}).get(world, ())

    def props_at(self, world: str) -> frozenset[str]:
        return self.valuation[world]

    def induced(self, keep: Iterable[str]) -> "EpistemicModel":
        """Submodel on the given world subset, original identifiers kept."""
        keep = frozenset(keep)
        extra = keep - self.worlds
        if extra:
            raise ModelError(f"worlds {sorted(extra)} not in the model")
        return EpistemicModel(
            keep,
            {
                a: (p for p in pairs if p[0] in keep and p[1] in keep)
                for a, pairs in self.relations.items()
            },
            {w: self.valuation[w] for w in keep},
            _allow_empty=not keep,
        )

    def __repr__(self) -> str:
        return f"<EpistemicModel {len(self.worlds)} worlds, agents {sorted(self.relations)}>"


@dataclass(frozen=True)
class PointedModel:
    model: EpistemicModel
    designated: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "designated", frozenset(self.designated))
        if not self.designated:
            raise ModelError("a pointed model needs at least one designated world")
        missing = self.designated - self.model.worlds
        if missing:
            raise ModelError(f"designated worlds {sorted(missing)} not in the model")

    @property
    def pointedness(self) -> str:
        return "single" if len(self.designated) == 1 else "multi"

    @property
    def point(self) -> str:
        if self.pointedness != "single":
            raise ModelError("not a single-pointed model")
        return next(iter(self.designated))


class EventModel:
    """Events with per-agent relations, precondition formulas, and
    postcondition literal sets (no complementary pairs allowed)."""

    __slots__ = ("events", "relations", "pre", "post", "s5", "_neighbors")

    def __init__(
        self,
        events: Iterable[str],
        relations: Relations,
        pre: Mapping[str, Formula],
        post: Mapping[str, Iterable[Literal]] | None = None,
        s5: bool = False,
    ):
        self.events = frozenset(events)
        if not self.events:
            raise ModelError("an event model needs at least one event")
        self.relations = {
            a: frozenset(tuple(p) for p in pairs) for a, pairs in relations.items()
        }
        _check_endpoints(self.relations, self.events)
        if set(pre) - self.events:
            raise ModelError("precondition for unknown event")
        self.pre = {e: pre.get(e, verum()) for e in self.events}
        post = post or {}
        if set(post) - self.events:
            raise ModelError("postcondition for unknown event")
        cooked: dict[str, frozenset[Literal]] = {}
        for e in self.events:
            lits = frozenset(post.get(e, ()))
            by_prop: dict[str, set[bool]] = {}
            for lit in lits:
                by_prop.setdefault(lit.prop, set()).add(lit.negated)
            for prop, signs in by_prop.items():
                if len(signs) > 1:
                    raise ModelError(
                        f"postcondition of event {e!r} contains the "
                        f"complementary pair on {prop!r}"
                    )
            cooked[e] = lits
        self.post = cooked
        self.s5 = bool(s5)
        if self.s5:
            report = validate_s5(self.relations, self.events)
            if not report.ok:
                first = report.violations[0]
                raise S5Error(
                    f"event relation for agent {first.agent!r} misses "
                    f"{first.kind} pair {first.pair!r}"
                )
        neigh: dict[str, dict[str, tuple[str, ...]]] = {}
        for agent, pairs in self.relations.items():
            per: dict[str, list[str]] = {e: [] for e in self.events}
            for (u, v) in pairs:
                per[u].append(v)
            neigh[agent] = {e: tuple(sorted(vs)) for e, vs in per.items()}
        self._neighbors = neigh

    def agents(self) -> frozenset[str]:
        return frozenset(self.relations)

    def neighbors(self, agent: str, event: str) -> tuple[str, ...]:
        return self._neighbors.get(agent, {}).get(event, ())

    def has_postconditions(self) -> bool:
        return any(self.post[e] for e in self.events)

    def __repr__(self) -> str:
        return f"<EventModel {len(self.events)} events, agents {sorted(self.relations)}>"


class PointedEventModel:
    """An event model with designated event(s) and an optional name used by
    the formula renderer and the instance file format."""

    __slots__ = ("model", "designated", "name")

    def __init__(
        self, model: EventModel, designated: Iterable[str], name: str | None = None
    ):
        self.model = model
        self.designated = frozenset(designated)
        if not self.designated:
            raise ModelError("a pointed event model needs a designated event")
        missing = self.designated - model.events
        if missing:
            raise ModelError(f"designated events {sorted(missing)} not in the model")
        self.name = name

    @property
    def pointedness(self) -> str:
        return "single" if len(self.designated) == 1 else "multi"

    def designated_sorted(self) -> tuple[str, ...]:
        return tuple(sorted(self.designated))

    def __repr__(self) -> str:
        tag = self.name or "anonymous"
        return f"<PointedEventModel {tag} designated={sorted(self.designated)}>"


# ---------------------------------------------------------------------------
# Semi-private announcements
# ---------------------------------------------------------------------------

def make_semi_private(
    phi1: Formula,
    phi2: Formula,
    informed: Iterable[str],
    roster: Iterable[str],
    name: str | None = None,
) -> PointedEventModel:
    """Two-event announcement: agents in ``informed`` learn which of the two
    formulas was announced (identity relation), everyone else only learns
    that one of them was (full relation over both events).  No
    postconditions; the first event is designated."""
    informed = frozenset(informed)
    roster = frozenset(roster)
    if not informed <= roster:
        raise ModelError("informed agents must be a subset of the roster")
    events = ("e1", "e2")
    identity = frozenset((e, e) for e in events)
    full = frozenset((x, y) for x in events for y in events)
    relations = {a: (identity if a in informed else full) for a in sorted(roster)}
    model = EventModel(events, relations, {"e1": phi1, "e2": phi2}, {}, s5=True)
    return PointedEventModel(model, ("e1",), name=name)


def semi_private_shape(pem: PointedEventModel, roster: Iterable[str]) -> frozenset[str] | None:
    """If the pointed event model is structurally a semi-private
    announcement over ``roster`` (two events, empty postconditions, each
    agent relation either identity or full, single designated event),
    return the informed set; otherwise ``None``."""
    roster = frozenset(roster)
    model = pem.model
    if len(model.events) != 2 or pem.pointedness != "single":
        return None
    if model.has_postconditions():
        return None
    if frozenset(model.relations) != roster:
        return None
    events = sorted(model.events)
    identity = frozenset((e, e) for e in events)
    full = frozenset((x, y) for x in events for y in events)
    informed = set()
    for agent, rel in model.relations.items():
        if rel == identity:
            informed.add(agent)
        elif rel != full:
            return None
    return frozenset(informed)


# ---------------------------------------------------------------------------
# Instance files (JSON)
# ---------------------------------------------------------------------------

@dataclass
class InstanceFile:
    """In-memory form of the on-disk instance format."""

    agents: tuple[str, ...] = ()
    props: tuple[str, ...] = ()
    models: dict[str, PointedModel] = field(default_factory=dict)
    events: dict[str, PointedEventModel] = field(default_factory=dict)
    formula: Formula | None = None
    expected: bool | None = None
    provenance: dict[str, Any] | None = None

    def sole_model(self) -> PointedModel:
        if len(self.models) != 1:
            raise ModelError(
                f"expected exactly one model in the instance, found "
                f"{sorted(self.models) or 'none'}"
            )
        return next(iter(self.models.values()))

    def sole_event(self) -> PointedEventModel:
        if len(self.events) != 1:
            raise ModelError(
                f"expected exactly one event model in the instance, found "
                f"{sorted(self.events) or 'none'}"
            )
        return next(iter(self.events.values()))


def _pairs_from_json(raw: Any) -> list[tuple[str, str]]:
    pairs = []
    for item in raw:
        if not isinstance(item, (list, tuple)) or len(item) != 2:
            raise ModelError(f"relation entry {item!r} is not a pair")
        pairs.append((str(item[0]), str(item[1])))
    return pairs


def _load_model(spec: Mapping[str, Any], agents: Sequence[str]) -> PointedModel:
    worlds = [str(w) for w in spec["worlds"]]
    relations: dict[str, Any] = {
        a: _pairs_from_json(spec.get("relations", {}).get(a, [])) for a in agents
    }
    if spec.get("s5", False):
        relations = s5_closure(relations, worlds)
    valuation = {str(w): [str(p) for p in ps] for w, ps in spec.get("valuation", {}).items()}
    model = EpistemicModel(worlds, relations, valuation, s5=bool(spec.get("s5", False)))
    designated = spec.get("designated")
    if isinstance(designated, str):
        designated = [designated]
    return PointedModel(model, frozenset(str(w) for w in designated))


def _load_event(
    name: str,
    spec: Mapping[str, Any],
    agents: Sequence[str],
    context: Mapping[str, PointedEventModel],
) -> PointedEventModel:
    events = [str(e) for e in spec["events"]]
    relations: dict[str, Any] = {
        a: _pairs_from_json(spec.get("relations", {}).get(a, [])) for a in agents
    }
    if spec.get("s5", False):
        relations = s5_closure(relations, events)
    pre = {
        str(e): parse_formula(text, events=context, agents=agents)
        for e, text in spec.get("pre", {}).items()
    }
    post = {
        str(e): [parse_literal(t) for t in lits]
        for e, lits in spec.get("post", {}).items()
    }
    model = EventModel(events, relations, pre, post, s5=bool(spec.get("s5", False)))
    designated = spec.get("designated")
    if isinstance(designated, str):
        designated = [designated]
    return PointedEventModel(model, frozenset(str(e) for e in designated), name=name)


def load_instance_text(text: str) -> InstanceFile:
    """Parse the JSON instance format.

    Event models may reference previously defined event models inside their
    precondition formulas; definitions are processed in file order.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"instance file is not valid JSON: {exc}") from exc
    agents = tuple(str(a) for a in raw.get("agents", []))
    props = tuple(str(p) for p in raw.get("props", []))
    events: dict[str, PointedEventModel] = {}
    for name, spec in raw.get("events", {}).items():
        events[name] = _load_event(name, spec, agents, events)
    models = {
        name: _load_model(spec, agents) for name, spec in raw.get("models", {}).items()
    }
    formula = None
    if raw.get("formula") is not None:
        formula = parse_formula(raw["formula"], events=events, agents=agents)
    expected = raw.get("expected")
    if expected is not None:
        expected = bool(expected)
    return InstanceFile(
        agents=agents,
        props=props,
        models=models,
        events=events,
        formula=formula,
        expected=expected,
        provenance=raw.get("provenance"),
    )


def load_instance(path: str) -> InstanceFile:
    with open(path, "r", encoding="utf-8") as fh:
        return load_instance_text(fh.read())


def _model_to_json(pm: PointedModel) -> dict[str, Any]:
    m = pm.model
    return {
        "s5": m.s5,
        "worlds": sorted(m.worlds),
        "relations": {
            a: [list(p) for p in sorted(pairs)] for a, pairs in sorted(m.relations.items())
        },
        "valuation": {w: sorted(m.valuation[w]) for w in sorted(m.worlds) if m.valuation[w]},
        "designated": sorted(pm.designated),
    }


def _event_to_json(pem: PointedEventModel, names: Mapping[int, str]) -> dict[str, Any]:
    m = pem.model

    def render_pre(f: Formula) -> str:
        return _render_with_names(f, names)

    return {
        "s5": m.s5,
        "events": sorted(m.events),
        "relations": {
            a: [list(p) for p in sorted(pairs)] for a, pairs in sorted(m.relations.items())
        },
        "pre": {e: render_pre(m.pre[e]) for e in sorted(m.events)},
        "post": {
            e: [str(lit) for lit in sorted(m.post[e])]
            for e in sorted(m.events)
            if m.post[e]
        },
        "designated": sorted(pem.designated),
    }


def _render_with_names(f: Formula, names: Mapping[int, str]) -> str:
    from .formula import And, Atom, Know, Not, UpdateBox

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


def instance_to_json(
    pm: PointedModel | None,
    formula: Formula | None,
    agents: Iterable[str],
    props: Iterable[str],
    expected: bool | None = None,
    provenance: Mapping[str, Any] | None = None,
    model_name: str = "m",
) -> dict[str, Any]:
    """Assemble the serialisable instance structure.  Event models embedded
    in the formula (transitively, through preconditions) are written as a
    named table in dependency order."""
    doc: dict[str, Any] = {
        "agents": sorted(set(agents)),
        "props": sorted(set(props)),
    }
    events_json: dict[str, Any] = {}
    if formula is not None:
        table = formula_event_table(formula)
        names = {id(pem): name for name, pem in table.items()}
        order: list[str] = []
        seen: set[str] = set()

        def visit(name: str, pem: PointedEventModel) -> None:
            if name in seen:
                return
            seen.add(name)
            for pre in pem.model.pre.values():
                for sub in _iter_update_nodes(pre):
                    inner = names[id(sub.update)]
                    visit(inner, sub.update)
            order.append(name)

        for name, pem in table.items():
            visit(name, pem)
        for name in order:
            events_json[name] = _event_to_json(table[name], names)
        doc["events"] = events_json
        doc["formula"] = _render_with_names(formula, names)
    if pm is not None:
        doc["models"] = {model_name: _model_to_json(pm)}
    doc["expected"] = expected
    if provenance is not None:
        doc["provenance"] = dict(provenance)
    return doc


def _iter_update_nodes(f: Formula):
    from .formula import UpdateBox, iter_subformulas

    for node in iter_subformulas(f):
        if type(node) is UpdateBox:
            yield node


def save_instance_text(doc: Mapping[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def save_instance(path: str, doc: Mapping[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(save_instance_text(doc))
