"""Generators turning QBF/propositional inputs into model-checking instances.

Four constructions are provided, named by their tags:

* ``delta2``       - one agent, postconditions, updates that steer every
                     world toward the lexicographically maximal satisfying
                     assignment of a propositional formula.
* ``multi1``       - one agent, multi-pointed two-event updates encoding the
                     quantifiers of a prenex QBF.
* ``single2``      - two agents, single-pointed five-event updates over a
                     chain-gadget model using only three propositions.
* ``semiprivate``  - the ``single2`` scheme decomposed into two-event
                     semi-private announcements.

Every generator computes its expected verdict through the brute-force
oracle at generation time; the generated instance and the oracle never
share code paths.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

from .formula import (
    And,
    Atom,
    Formula,
    Know,
    Literal,
    Not,
    UpdateBox,
    conj,
    diamond,
    formula_stats,
    implies,
    khat,
    lor,
    render_formula,
    verum,
)
from .kripke import (
    EpistemicModel,
    EventModel,
    PointedEventModel,
    PointedModel,
    instance_to_json,
    make_semi_private,
    s5_closure,
)
from .oracle import Qbf, lexmax_sat, qbf_eval, render_qbf_text

Z0, Z1, Z2 = "z0", "z1", "z2"
CONSTRUCTIONS = ("delta2", "multi1", "single2", "semiprivate")


class ReductionError(ValueError):
    """Input outside a generator's domain."""


class UnsatInputError(ReductionError):
    """The lexicographic-maximum construction needs a satisfiable formula."""


@dataclass(frozen=True)
class Instance:
    pointed_model: PointedModel
    formula: Formula
    tag: str
    provenance: Mapping[str, Any]
    expected: bool | None

    def document(self) -> dict[str, Any]:
        stats = formula_stats(self.formula)
        agents = sorted(
            set(self.pointed_model.model.relations) | set(stats.agents_used)
        )
        props = sorted(
            {p for ps in self.pointed_model.model.valuation.values() for p in ps}
            | set(stats.props_used)
        )
        return instance_to_json(
            self.pointed_model,
            self.formula,
            agents,
            props,
            expected=self.expected,
            provenance=self.provenance,
        )


# ---------------------------------------------------------------------------
# Chain-detector formulas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChiSet:
    """Detector formulas for alternating chains of an exact step count."""

    chi_a: Formula
    chi_b: Formula
    chi: Formula | None
    chi_prime: Formula | None


def _chi_tables(max_j: int) -> tuple[list[Formula], list[Formula], list[Formula | None], list[Formula | None]]:
    """Detector families up to index ``max_j``, sharing structure across
    levels so repeated occurrences are the same AST nodes."""
    z0, z1, z2 = Atom(Z0), Atom(Z1), Atom(Z2)
    chi_a: list[Formula] = [z0]
    chi_b: list[Formula] = [z0]
    chi: list[Formula | None] = [None]
    chi_prime: list[Formula | None] = [None]
    for j in range(1, max_j + 1):
        chi_b.append(khat("b", conj([Not(z1), Not(z2), chi_a[j - 1]])))
        chi_a.append(khat("a", conj([Not(z1), Not(z2), chi_b[j - 1]])))
        chi.append(conj([z1, Not(z2), chi_b[j], Not(chi_b[j - 1])]))
        chi_prime.append(conj([Not(z1), z2, chi_a[j], Not(chi_a[j - 1])]))
    return chi_a, chi_b, chi, chi_prime


def chi_formulas(j: int) -> ChiSet:
    """The chain detectors at index ``j``.

    ``chi_a``/``chi_b`` hold where an alternating path (first step by agent
    a resp. b, interior worlds carrying none of the three propositions)
    reaches a ``z0`` world in exactly ``j`` steps; ``chi``/``chi_prime``
    sharpen them to the first world of a chain of exactly ``j`` steps that
    starts with ``z1`` (resp. ``z2``).  The latter two need ``j >= 1``.
    """
    if j < 0:
        raise ReductionError("chain index must be nonnegative")
    chi_a, chi_b, chi, chi_prime = _chi_tables(j)
    return ChiSet(chi_a[j], chi_b[j], chi[j], chi_prime[j])


# ---------------------------------------------------------------------------
# Shared model gadgets
# ---------------------------------------------------------------------------

def _chain(prefix: str, steps: int, first_agent: str, first_prop: str):
    """Worlds, labelled edges and valuation of one alternating chain."""
    worlds = [f"{prefix}w{k}" for k in range(steps + 1)]
    edges = []
    agent = first_agent
    for k in range(steps):
        edges.append((agent, worlds[k], worlds[k + 1]))
        agent = "b" if agent == "a" else "a"
    valuation = {worlds[0]: {first_prop}, worlds[-1]: {Z0}}
    if steps == 0:
        valuation = {worlds[0]: {first_prop, Z0}}
    return worlds, edges, valuation


def _chain_model(n: int, z2_steps: Iterable[int]) -> PointedModel:
    """The two-agent gadget model: a central world satisfying both markers,
    one ``z1`` chain per variable index hanging off an ``a``-clique, and
    ``z2`` chains of the requested step counts hanging off a ``b``-clique."""
    worlds = ["c"]
    valuation: dict[str, set[str]] = {"c": {Z1, Z2}}
    edges: list[tuple[str, str, str]] = []
    a_clique = ["c"]
    b_clique = ["c"]
    for j in range(1, n + 1):
        ws, es, vals = _chain(f"z1c{j}", j, "b", Z1)
        worlds += ws
        edges += es
        valuation.update(vals)
        a_clique.append(ws[0])
    for j in z2_steps:
        ws, es, vals = _chain(f"z2c{j}", j, "a", Z2)
        worlds += ws
        edges += es
        valuation.update(vals)
        b_clique.append(ws[0])
    for i, u in enumerate(a_clique):
        for v in a_clique[i + 1:]:
            edges.append(("a", u, v))
    for i, u in enumerate(b_clique):
        for v in b_clique[i + 1:]:
            edges.append(("b", u, v))
    per_agent: dict[str, list[tuple[str, str]]] = {"a": [], "b": []}
    for agent, u, v in edges:
        per_agent[agent].append((u, v))
    relations = s5_closure(per_agent, worlds)
    model = EpistemicModel(worlds, relations, valuation, s5=True)
    return PointedModel(model, frozenset(["c"]))


def _require_alternating(q: Qbf) -> None:
    if not q.is_alternating():
        raise ReductionError(
            "the QBF prefix must strictly alternate starting with an "
            "existential and have even length; run normalize_alternating first"
        )


def _substitute_atoms(f: Formula, table: Mapping[str, Formula]) -> Formula:
    t = type(f)
    if t is Atom:
        return table.get(f.prop, f)
    if t is Not:
        return Not(_substitute_atoms(f.sub, table))
    if t is And:
        return And(
            _substitute_atoms(f.left, table), _substitute_atoms(f.right, table)
        )
    raise ReductionError("matrix must be propositional")


def _qbf_provenance(tag: str, q: Qbf) -> dict[str, Any]:
    return {
        "construction": tag,
        "source": render_qbf_text(q).strip(),
        "variables": list(q.variables()),
        "dummies": sorted(q.dummies),
    }


# ---------------------------------------------------------------------------
# delta2: lexicographic maximum via postconditions
# ---------------------------------------------------------------------------

def reduce_delta2(
    matrix: Formula, variables: Sequence[str], compute_expected: bool = True
) -> Instance:
    """Single-agent instance whose verdict is the last-variable bit of the
    lexicographically maximal satisfying assignment of ``matrix``.

    Two phases of updates: the first generates one world per assignment,
    the second repeatedly keeps a variable true exactly when some still
    viable satisfying assignment does, converging every non-marker world to
    the maximal assignment.  The final question asks whether the last
    variable is reachably true.
    """
    variables = list(variables)
    if not variables:
        raise ReductionError("need at least one variable")
    if len(set(variables)) != len(variables):
        raise ReductionError("duplicate variables")
    if "z" in variables:
        raise ReductionError("the variable name 'z' is reserved by this construction")
    stats = formula_stats(matrix)
    if stats.update_count or stats.agents_used:
        raise ReductionError("the input formula must be propositional")
    if not stats.props_used <= set(variables):
        raise ReductionError(
            f"formula uses variables outside the ordering: "
            f"{sorted(stats.props_used - set(variables))}"
        )

    expected = None
    if compute_expected:
        best = lexmax_sat(matrix, variables)
        if best is None:
            raise UnsatInputError("the input formula is unsatisfiable")
        expected = best[variables[-1]]

    z = Atom("z")
    model = EpistemicModel(
        ("w0", "w1"),
        {"a": [(u, v) for u in ("w0", "w1") for v in ("w0", "w1")]},
        {"w0": {"z"}},
        s5=True,
    )
    pointed = PointedModel(model, frozenset(["w0"]))

    full3 = [(u, v) for u in ("g1", "g2", "g3") for v in ("g1", "g2", "g3")]

    def triangle(name: str, pre2: Formula, post2, pre3: Formula, post3) -> PointedEventModel:
        event = EventModel(
            ("g1", "g2", "g3"),
            {"a": full3},
            {"g1": z, "g2": pre2, "g3": pre3},
            {"g2": post2, "g3": post3},
            s5=True,
        )
        return PointedEventModel(event, ("g1",), name=name)

    spawn = [
        triangle(f"E{i+1}", Not(z), [Literal(x)], Not(z), [])
        for i, x in enumerate(variables)
    ]
    fix = [
        triangle(
            f"Ep{i+1}",
            And(Not(z), khat("a", And(Atom(x), matrix))),
            [Literal(x)],
            And(Not(z), Not(khat("a", And(Atom(x), matrix)))),
            [Literal(x, negated=True)],
        )
        for i, x in enumerate(variables)
    ]
    body: Formula = khat("a", Atom(variables[-1]))
    for pem in reversed(spawn + fix):
        body = UpdateBox(pem, body)

    provenance = {
        "construction": "delta2",
        "source": render_formula(matrix),
        "variables": variables,
    }
    return Instance(pointed, body, "delta2", provenance, expected)


# ---------------------------------------------------------------------------
# multi1: quantifiers as multi-pointed updates
# ---------------------------------------------------------------------------

def reduce_multi1(q: Qbf, compute_expected: bool = True) -> Instance:
    """Single-agent instance over one clique of assignment worlds; each
    variable gets a two-event multi-pointed update (keep everything / drop
    that variable's world), and the quantifier alternation becomes an
    alternation of diamond and box updates."""
    _require_alternating(q)
    variables = list(q.variables())
    worlds = ["w0"] + [f"w{i+1}" for i in range(len(variables))]
    valuation = {f"w{i+1}": {x} for i, x in enumerate(variables)}
    model = EpistemicModel(
        worlds,
        {"a": [(u, v) for u in worlds for v in worlds]},
        valuation,
        s5=True,
    )
    pointed = PointedModel(model, frozenset(["w0"]))

    updates = []
    for i, x in enumerate(variables):
        event = EventModel(
            ("d1", "d2"),
            {"a": [("d1", "d1"), ("d2", "d2")]},
            {"d1": verum(x), "d2": Not(Atom(x))},
            {},
            s5=True,
        )
        updates.append(PointedEventModel(event, ("d1", "d2"), name=f"E{i+1}"))

    body = _substitute_atoms(
        q.matrix, {x: khat("a", Atom(x)) for x in variables}
    )
    for i in range(len(variables) - 1, -1, -1):
        if q.prefix[i][0] == "e":
            body = diamond(updates[i], body)
        else:
            body = UpdateBox(updates[i], body)

    expected = qbf_eval(q) if compute_expected else None
    return Instance(pointed, body, "multi1", _qbf_provenance("multi1", q), expected)


# ---------------------------------------------------------------------------
# single2: two agents, three propositions
# ---------------------------------------------------------------------------

def _xi_formula(
    n: int,
    matrix: Formula,
    variables: Sequence[str],
    chi_prime: list[Formula | None],
) -> Formula:
    """The quantifier-simulation formula evaluated after the update phase.

    Level ``i`` navigates one b-step and one a-step to a central world whose
    counter state records exactly the first ``i`` counter chains as removed,
    then recurses; odd levels choose a witness, even levels quantify over
    all.  The innermost level reads the matrix with each variable replaced
    by the marker-chain probe ``Khat b chi'_{i+n}``: the marker chain with
    ``n + i`` steps survives exactly in the copies where variable ``i`` was
    set true.  The probe quantifies along the agent whose event relations
    are the identity in every pruning event, so it cannot slip into sibling
    copies the way an a-step can.
    """
    z1, z2 = Atom(Z1), Atom(Z2)
    guard_pos = [None] + [khat("b", chi_prime[j]) for j in range(1, n + 1)]
    guard_neg = [None] + [Not(guard_pos[j]) for j in range(1, n + 1)]
    reading = {
        x: khat("b", chi_prime[n + i + 1]) for i, x in enumerate(variables)
    }
    body = _substitute_atoms(matrix, reading)
    for i in range(n, 0, -1):
        counters = [guard_neg[j] for j in range(1, i + 1)] + [
            guard_pos[j] for j in range(i + 1, n + 1)
        ]
        if i % 2 == 1:
            core = conj([z1, z2] + counters + [body])
            body = khat("b", khat("a", core))
        else:
            antecedent = conj([z1, z2] + counters)
            body = Know("b", Know("a", implies(antecedent, body)))
    return body


def reduce_single2(q: Qbf, compute_expected: bool = True) -> Instance:
    """Two-agent, three-proposition instance.

    The model consists of a central world, one ``z1`` chain per variable
    (steps 1..n), and ``z2`` chains with steps 1..2n.  The short ``z2``
    chains are counters recording how many quantifiers the follow-up
    formula has processed; the long ones are per-variable markers carrying
    the chosen assignment.  Each variable's update makes five copies of the
    model: three fully live ones linked for agent b, plus two pruned copies
    reachable by an a-step in which the variable's counter chain is gone
    and the marker chain (and the variable's ``z1`` chain) either survives
    (assignment true, event ``f4``) or is gone as well (assignment false,
    event ``f5``).  The follow-up formula alternates existential and
    universal two-step hops over the copy structure and finally reads each
    variable by probing its marker chain through agent b, for whom the
    pruned copies are isolated.
    """
    _require_alternating(q)
    variables = list(q.variables())
    n = len(variables)
    pointed = _chain_model(n, range(1, 2 * n + 1))
    chi_a, chi_b, chi, chi_prime = _chi_tables(2 * n)

    top = verum(Z0)
    updates = []
    for i in range(1, n + 1):
        relations = {
            "b": [("f1", "f2"), ("f1", "f3"), ("f2", "f3")],
            "a": [("f2", "f4"), ("f3", "f5")],
        }
        event = EventModel(
            ("f1", "f2", "f3", "f4", "f5"),
            s5_closure(relations, ("f1", "f2", "f3", "f4", "f5")),
            {
                "f1": top,
                "f2": top,
                "f3": top,
                "f4": Not(chi_prime[i]),
                "f5": conj(
                    [Not(chi_prime[i]), Not(chi[i]), Not(chi_prime[i + n])]
                ),
            },
            {},
            s5=True,
        )
        updates.append(PointedEventModel(event, ("f1",), name=f"E{i}"))

    body = _xi_formula(n, q.matrix, variables, chi_prime)
    for pem in reversed(updates):
        body = UpdateBox(pem, body)

    expected = qbf_eval(q) if compute_expected else None
    return Instance(pointed, body, "single2", _qbf_provenance("single2", q), expected)


# ---------------------------------------------------------------------------
# semiprivate: the single2 scheme via semi-private announcements
# ---------------------------------------------------------------------------

def reduce_semiprivate(q: Qbf, compute_expected: bool = True) -> Instance:
    """The two-agent scheme with every update a semi-private announcement.

    Each variable ``i`` owns a pair of chains: its ``z1`` chain (probed via
    agent a) and its ``z2`` chain (probed via agent b), and a pair of
    announcements: one informing a and offering to drop the ``z1`` chain's
    first world, one informing b and offering to drop the ``z2`` chain's.
    A processed variable has exactly one chain of its pair dropped - which
    one is the assignment.  Because the a-probed drop sits on a coordinate
    only b-steps can move and vice versa, a single b-then-a hop can never
    turn one consistent assignment into another: any attempt strands an
    inconsistent pair state at one of the two guard checkpoints (after the
    b-step, and at the target).  Odd levels pick a hop witness, even levels
    quantify over all hops.
    """
    _require_alternating(q)
    variables = list(q.variables())
    n = len(variables)
    roster = ("a", "b")
    pointed = _chain_model(n, range(1, n + 1))
    chi_a, chi_b, chi, chi_prime = _chi_tables(n)

    top = verum(Z0)
    updates: list[PointedEventModel] = []
    for i in range(1, n + 1):
        drop_z1 = make_semi_private(
            top,
            Not(chi[i]),
            informed=("a",),
            roster=roster,
            name=f"E1_{i}",
        )
        drop_z2 = make_semi_private(
            top,
            Not(chi_prime[i]),
            informed=("b",),
            roster=roster,
            name=f"E2_{i}",
        )
        updates += [drop_z1, drop_z2]

    z1, z2 = Atom(Z1), Atom(Z2)
    t_alive = [None] + [khat("a", chi[j]) for j in range(1, n + 1)]
    f_alive = [None] + [khat("b", chi_prime[j]) for j in range(1, n + 1)]
    settled = [None] + [
        lor(
            And(t_alive[j], Not(f_alive[j])),
            And(Not(t_alive[j]), f_alive[j]),
        )
        for j in range(1, n + 1)
    ]
    # variable j reads true when its z2 chain survived (so the z1 one fell)
    body = _substitute_atoms(q.matrix, {x: f_alive[i + 1] for i, x in enumerate(variables)})
    for i in range(n, 0, -1):
        hop_parts = [settled[j] for j in range(1, i)] + [
            t_alive[j] for j in range(i + 1, n + 1)
        ]
        hop_guard = conj(hop_parts) if hop_parts else verum(Z0)
        target_guard = conj(
            [z1, z2]
            + [settled[j] for j in range(1, i + 1)]
            + [And(t_alive[j], f_alive[j]) for j in range(i + 1, n + 1)]
        )
        if i % 2 == 1:
            body = khat("b", And(hop_guard, khat("a", And(target_guard, body))))
        else:
            body = Know(
                "b", implies(hop_guard, Know("a", implies(target_guard, body)))
            )

    for pem in reversed(updates):
        body = UpdateBox(pem, body)

    expected = qbf_eval(q) if compute_expected else None
    return Instance(
        pointed, body, "semiprivate", _qbf_provenance("semiprivate", q), expected
    )


# ---------------------------------------------------------------------------
# Size estimation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SizeEstimate:
    initial_worlds: int
    max_product_worlds: int
    formula_nodes: int


def _update_spine_counts(f: Formula) -> list[int]:
    counts = []
    node = f
    while True:
        if type(node) is UpdateBox:
            counts.append(len(node.update.model.events))
            node = node.sub
        elif (
            type(node) is Not
            and type(node.sub) is UpdateBox
            and type(node.sub.sub) is Not
        ):
            counts.append(len(node.sub.update.model.events))
            node = node.sub.sub.sub
        else:
            return counts


def generate(tag: str, source, compute_expected: bool = True) -> Instance:
    """Dispatch to a construction by tag.  ``source`` is a propositional
    (matrix, variables) pair for ``delta2`` and a :class:`Qbf` otherwise."""
    if tag == "delta2":
        matrix, variables = source
        return reduce_delta2(matrix, variables, compute_expected)
    if tag == "multi1":
        return reduce_multi1(source, compute_expected)
    if tag == "single2":
        return reduce_single2(source, compute_expected)
    if tag == "semiprivate":
        return reduce_semiprivate(source, compute_expected)
    raise ReductionError(f"unknown construction {tag!r}")


def instance_size_estimate(tag: str, source) -> SizeEstimate:
    """Exact initial model size, an upper bound on any product built while
    checking (initial size times the product of event counts along the
    update spine), and the node count of the generated formula."""
    inst = generate(tag, source, compute_expected=False)
    initial = len(inst.pointed_model.model.worlds)
    bound = initial
    for c in _update_spine_counts(inst.formula):
        bound *= c
    nodes = formula_stats(inst.formula).node_count
    return SizeEstimate(initial, bound, nodes)
