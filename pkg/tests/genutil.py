"""Seeded random generators and small enumerations shared across tests."""
from __future__ import annotations

import itertools
import random

from delcheck.formula import And, Atom, Formula, Know, Not, UpdateBox, falsum, lor
from delcheck.kripke import EpistemicModel, EventModel, PointedEventModel
from delcheck.oracle import Qbf


def random_partition(rng: random.Random, items: list[str]) -> list[list[str]]:
    """Random partition into nonempty blocks."""
    blocks: list[list[str]] = []
    for item in items:
        if blocks and rng.random() < 0.6:
            rng.choice(blocks).append(item)
        else:
            blocks.append([item])
    return blocks


def equivalence_from_partition(blocks: list[list[str]]) -> set[tuple[str, str]]:
    pairs = set()
    for block in blocks:
        for u in block:
            for v in block:
                pairs.add((u, v))
    return pairs


def random_s5_model(
    rng: random.Random,
    max_worlds: int = 8,
    agents: tuple[str, ...] = ("a",),
    props: tuple[str, ...] = ("p", "q"),
) -> EpistemicModel:
    n = rng.randint(1, max_worlds)
    worlds = [f"w{i}" for i in range(n)]
    relations = {
        agent: equivalence_from_partition(random_partition(rng, worlds[:]))
        for agent in agents
    }
    valuation = {
        w: frozenset(p for p in props if rng.random() < 0.5) for w in worlds
    }
    return EpistemicModel(worlds, relations, valuation, s5=True)


def random_s5_event_model(
    rng: random.Random,
    max_events: int = 3,
    agents: tuple[str, ...] = ("a",),
    props: tuple[str, ...] = ("p", "q"),
    allow_posts: bool = False,
    pre_depth: int = 2,
) -> EventModel:
    n = rng.randint(1, max_events)
    events = [f"e{i}" for i in range(n)]
    relations = {
        agent: equivalence_from_partition(random_partition(rng, events[:]))
        for agent in agents
    }
    pre = {
        e: random_modal_formula(rng, pre_depth, props, agents) for e in events
    }
    post = {}
    if allow_posts:
        from delcheck.formula import Literal

        for e in events:
            lits = []
            for p in props:
                r = rng.random()
                if r < 0.2:
                    lits.append(Literal(p))
                elif r < 0.4:
                    lits.append(Literal(p, negated=True))
            post[e] = lits
    return EventModel(events, relations, pre, post, s5=True)


def random_modal_formula(
    rng: random.Random,
    depth: int,
    props: tuple[str, ...] = ("p", "q"),
    agents: tuple[str, ...] = ("a",),
) -> Formula:
    """Random update-free formula."""
    if depth == 0 or rng.random() < 0.25:
        return Atom(rng.choice(props))
    r = rng.random()
    if r < 0.3:
        return Not(random_modal_formula(rng, depth - 1, props, agents))
    if r < 0.65:
        return And(
            random_modal_formula(rng, depth - 1, props, agents),
            random_modal_formula(rng, depth - 1, props, agents),
        )
    return Know(rng.choice(agents), random_modal_formula(rng, depth - 1, props, agents))


def random_fragment_formula(
    rng: random.Random,
    depth: int = 4,
    updates_left: int = 3,
    props: tuple[str, ...] = ("p", "q"),
) -> Formula:
    """Random single-agent formula, possibly with nested single-pointed
    postcondition-free updates (fragment friendly)."""
    if depth == 0:
        return Atom(rng.choice(props))
    r = rng.random()
    if r < 0.2:
        return Atom(rng.choice(props))
    if r < 0.4:
        return Not(random_fragment_formula(rng, depth - 1, updates_left, props))
    if r < 0.6:
        return And(
            random_fragment_formula(rng, depth - 1, updates_left, props),
            random_fragment_formula(rng, depth - 1, updates_left, props),
        )
    if r < 0.8 or updates_left == 0:
        return Know("a", random_fragment_formula(rng, depth - 1, updates_left, props))
    events = [f"e{i}" for i in range(rng.randint(1, 3))]
    relations = {"a": equivalence_from_partition(random_partition(rng, events[:]))}
    pre = {
        e: random_fragment_formula(rng, depth - 1, updates_left - 1, props)
        for e in events
    }
    model = EventModel(events, relations, pre, {}, s5=True)
    pem = PointedEventModel(model, (rng.choice(events),))
    return UpdateBox(pem, random_fragment_formula(rng, depth - 1, updates_left - 1, props))


def random_propositional(
    rng: random.Random, variables: list[str], depth: int
) -> Formula:
    if depth == 0 or rng.random() < 0.3:
        return Atom(rng.choice(variables))
    r = rng.random()
    if r < 0.4:
        return Not(random_propositional(rng, variables, depth - 1))
    if r < 0.7:
        return And(
            random_propositional(rng, variables, depth - 1),
            random_propositional(rng, variables, depth - 1),
        )
    return lor(
        random_propositional(rng, variables, depth - 1),
        random_propositional(rng, variables, depth - 1),
    )


def random_qbf(rng: random.Random, max_vars: int = 5, depth: int = 3) -> Qbf:
    n = rng.randint(1, max_vars)
    variables = [f"x{i+1}" for i in range(n)]
    prefix = tuple((rng.choice("ea"), x) for x in variables)
    return Qbf(prefix, random_propositional(rng, variables, depth))


def alternating_qbf(rng: random.Random, n: int, depth: int = 4) -> Qbf:
    variables = [f"x{i+1}" for i in range(n)]
    prefix = tuple(
        ("e" if i % 2 == 0 else "a", x) for i, x in enumerate(variables)
    )
    return Qbf(prefix, random_propositional(rng, variables, depth))


def chain_group(step_counts) -> EpistemicModel:
    """A central world (both markers true) plus one alternating chain per
    requested step count: first world marked z1, last z0, edges starting
    with agent b, first worlds fully a-linked with the central world."""
    from delcheck.kripke import s5_closure

    worlds = ["c"]
    valuation: dict[str, set[str]] = {"c": {"z1", "z2"}}
    edges: dict[str, list[tuple[str, str]]] = {"a": [], "b": []}
    firsts = []
    for steps in step_counts:
        names = [f"n{steps}w{k}" for k in range(steps + 1)]
        worlds += names
        valuation[names[0]] = {"z1"}
        valuation[names[-1]] = {"z0"}
        agent = "b"
        for k in range(steps):
            edges[agent].append((names[k], names[k + 1]))
            agent = "a" if agent == "b" else "b"
        firsts.append(names[0])
    clique = ["c"] + firsts
    for i, u in enumerate(clique):
        for v in clique[i + 1:]:
            edges["a"].append((u, v))
    relations = s5_closure(edges, worlds)
    return EpistemicModel(worlds, relations, valuation, s5=True)


def minterm(bits: tuple[bool, bool]) -> Formula:
    x1, x2 = Atom("x1"), Atom("x2")
    return And(x1 if bits[0] else Not(x1), x2 if bits[1] else Not(x2))


def two_var_templates() -> list[tuple[int, Formula]]:
    """All sixteen boolean functions of (x1, x2) in minterm normal form.
    Mask bit ``i`` covers the i-th row of (True,True), (True,False),
    (False,True), (False,False)."""
    rows = list(itertools.product([True, False], repeat=2))
    out = []
    for mask in range(16):
        selected = [bits for i, bits in enumerate(rows) if mask & (1 << i)]
        if not selected:
            formula: Formula = falsum("x1")
        else:
            formula = minterm(selected[0])
            for bits in selected[1:]:
                formula = lor(formula, minterm(bits))
        out.append((mask, formula))
    return out
