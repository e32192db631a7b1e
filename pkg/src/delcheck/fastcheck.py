"""Polynomial checker for the single-agent, single-pointed, postcondition-free
fragment.

Instead of materialising product models, an update is applied by shrinking
the current model to a connected, precondition-satisfying submodel of the
original model, which is bisimilar to the product at the evaluation point.
All recursive verdicts are memoized per (world subset, world, subformula
node), which caps the work at polynomially many table entries even when the
plain recursion tree is exponential.
"""
from __future__ import annotations

from dataclasses import dataclass

from .formula import And, Atom, Formula, Know, Not, UpdateBox
from .kripke import (
    EpistemicModel,
    EventModel,
    PointedEventModel,
    validate_s5,
)
from . import semantics


class FragmentError(ValueError):
    """Instance outside the supported fragment, or a guard failure."""


@dataclass(frozen=True)
class FragmentInstance:
    model: EpistemicModel
    world: str
    formula: Formula


@dataclass(frozen=True)
class FragmentDecision:
    accepted: bool
    reason: str | None = None


@dataclass(frozen=True)
class FragmentProbe:
    verdict: bool
    recursive_calls: int
    memo_entries: int


def _embedded_updates(f: Formula):
    from .formula import iter_subformulas

    for node in iter_subformulas(f):
        if type(node) is UpdateBox:
            yield node.update


def accepts_fragment(instance: FragmentInstance) -> FragmentDecision:
    """Check the fragment invariants: exactly one agent anywhere, S5 model
    and event models, single-pointed event models, empty postconditions."""
    m = instance.model
    agents = set(a for a, rel in m.relations.items() if rel) or set(m.relations)
    for node_agents in _formula_agents(instance.formula):
        agents.add(node_agents)
    if len(agents) > 1:
        return FragmentDecision(False, f"{_count_word(len(agents))} agents")
    if instance.world not in m.worlds:
        return FragmentDecision(False, f"world {instance.world!r} not in the model")
    if not validate_s5(m.relations, m.worlds).ok:
        return FragmentDecision(False, "model is not S5")
    for pem in _embedded_updates(instance.formula):
        if pem.pointedness != "single":
            return FragmentDecision(False, "multi-pointed event model")
        if pem.model.has_postconditions():
            return FragmentDecision(False, "postcondition present")
        if not validate_s5(pem.model.relations, pem.model.events).ok:
            return FragmentDecision(False, "event model is not S5")
    return FragmentDecision(True, None)


def _formula_agents(f: Formula):
    from .formula import iter_subformulas

    for node in iter_subformulas(f):
        if type(node) is Know:
            yield node.agent
        elif type(node) is UpdateBox:
            for agent, rel in node.update.model.relations.items():
                if rel:
                    yield agent


def _count_word(n: int) -> str:
    return {2: "two", 3: "three"}.get(n, str(n))


def _reachable(neigh, start: str) -> frozenset[str]:
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in neigh(x):
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return frozenset(seen)


def contract_update(
    m: EpistemicModel, w0: str, ev: EventModel, e0: str
) -> EpistemicModel:
    """Submodel of ``m`` standing in for the product with ``ev`` at ``w0``.

    Keeps the worlds reachable from ``w0`` (single agent) that satisfy the
    precondition of at least one event reachable from ``e0``; the result is
    bisimilar to the product update pointed at (w0, e0).  The caller must
    have established that pre(e0) holds at w0, matching the guard in the
    box-update truth clause.
    """
    agent = _sole_agent(m, ev)
    if not semantics.evaluate(m, w0, ev.pre[e0]):
        raise FragmentError(f"precondition of {e0!r} fails at {w0!r}")
    world_span = _reachable(lambda x: m.neighbors(agent, x), w0)
    event_span = _reachable(lambda x: ev.neighbors(agent, x), e0)
    keep = {
        w
        for w in world_span
        if any(semantics.evaluate(m, w, ev.pre[e]) for e in sorted(event_span))
    }
    return m.induced(keep)


def _sole_agent(m: EpistemicModel, ev: EventModel | None = None) -> str:
    agents = {a for a, rel in m.relations.items() if rel}
    if ev is not None:
        agents |= {a for a, rel in ev.relations.items() if rel}
    if not agents:
        agents = set(m.relations) or ({*ev.relations} if ev else set())
    if len(agents) != 1:
        raise FragmentError(f"expected a single agent, found {sorted(agents)}")
    return next(iter(agents))


class _Session:
    """One fragment check: owns the memo table and instrumentation."""

    def __init__(self, base: EpistemicModel, memo: bool):
        self.base = base
        self.use_memo = memo
        self.table: dict[tuple[frozenset[str], str, int], bool] = {}
        self.calls = 0
        self.submodels: dict[frozenset[str], EpistemicModel] = {
            base.worlds: base
        }

    def submodel(self, keep: frozenset[str]) -> EpistemicModel:
        got = self.submodels.get(keep)
        if got is None:
            got = self.base.induced(keep)
            self.submodels[keep] = got
        return got

    def check(self, m: EpistemicModel, w: str, f: Formula) -> bool:
        self.calls += 1
        key = (m.worlds, w, id(f))
        if self.use_memo:
            got = self.table.get(key)
            if got is not None:
                return got
        result = self._compute(m, w, f)
        if self.use_memo:
            self.table[key] = result
        return result

    def _compute(self, m: EpistemicModel, w: str, f: Formula) -> bool:
        t = type(f)
        if t is Atom:
            return f.prop in m.valuation[w]
        if t is Not:
            return not self.check(m, w, f.sub)
        if t is And:
            return self.check(m, w, f.left) and self.check(m, w, f.right)
        if t is Know:
            return all(
                self.check(m, v, f.sub) for v in m.neighbors(f.agent, w)
            )
        pem: PointedEventModel = f.update
        ev = pem.model
        (e0,) = pem.designated_sorted()
        if not self.check(m, w, ev.pre[e0]):
            return True
        contracted = self._contract(m, w, ev, e0)
        return self.check(contracted, w, f.sub)

    def _contract(
        self, m: EpistemicModel, w0: str, ev: EventModel, e0: str
    ) -> EpistemicModel:
        agent = _sole_agent(m, ev)
        world_span = _reachable(lambda x: m.neighbors(agent, x), w0)
        event_span = _reachable(lambda x: ev.neighbors(agent, x), e0)
        keep = frozenset(
            w
            for w in world_span
            if any(self.check(m, w, ev.pre[e]) for e in sorted(event_span))
        )
        return self.submodel(keep)


def fragment_check(instance: FragmentInstance, memo: bool = True) -> bool:
    """Decide the instance; agrees with the reference evaluator on every
    accepted instance.  ``memo=False`` disables the lookup table (useful
    only on small inputs)."""
    return fragment_check_probe(instance, memo=memo).verdict


def fragment_check_probe(
    instance: FragmentInstance, memo: bool = True
) -> FragmentProbe:
    decision = accepts_fragment(instance)
    if not decision.accepted:
        raise FragmentError(f"instance outside the fragment: {decision.reason}")
    session = _Session(instance.model, memo)
    verdict = session.check(instance.model, instance.world, instance.formula)
    return FragmentProbe(verdict, session.calls, len(session.table))


# ---------------------------------------------------------------------------
# The nested-update stress family
# ---------------------------------------------------------------------------

def nested_update_family(k: int) -> FragmentInstance:
    """Deterministic fragment instances whose plain recursive evaluation
    blows up exponentially in ``k`` while the memoized check stays linear.

    The model is a fixed two-world clique for one agent with ``p`` true at
    exactly one world.  The formula tower starts at ``p`` and each level
    wraps the previous one in a single-event update whose precondition
    conjoins two occurrences of the level below: every update evaluation
    re-enters the precondition at both worlds, doubling the recursion tree
    per level, while the memo table only ever sees linearly many distinct
    (submodel, world, node) triples.
    """
    if k < 0:
        raise FragmentError("k must be nonnegative")
    worlds = ("w0", "w1")
    model = EpistemicModel(
        worlds,
        {"a": [(u, v) for u in worlds for v in worlds]},
        {"w0": ("p",)},
        s5=True,
    )
    formula: Formula = Atom("p")
    for level in range(k):
        pre = And(formula, formula)
        event = EventModel(
            ("f",),
            {"a": (("f", "f"),)},
            {"f": pre},
            {},
            s5=True,
        )
        pem = PointedEventModel(event, ("f",), name=f"F{level}")
        formula = UpdateBox(pem, Atom("p"))
    return FragmentInstance(model, "w0", formula)
