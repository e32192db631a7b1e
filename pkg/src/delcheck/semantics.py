"""Product update and the explicit-state truth evaluator.

The evaluator implements the truth clauses directly by recursion: atoms via
the valuation, boolean connectives classically, knowledge by quantifying
over accessible worlds, and update boxes by materialising the whole product
model and descending into it.  Products are always built eagerly and in
full; nothing is shared between separate top-level evaluations.

Within one evaluation session, results for update-free subformulas that
contain a knowledge operator are remembered per (model, world, node).
Recursion through update operators is never short-circuited this way, so
formulas whose blow-up lives in nested preconditions still exhibit their
full recursion tree (see the call-count probe).  The session cache exists
because iterated products multiply bisimilar copies of worlds and the
chain-detector formulas used by the generators would otherwise be
re-evaluated on each copy.
"""
from __future__ import annotations

from dataclasses import dataclass

from .formula import And, Atom, Formula, Know, Not, UpdateBox
from .kripke import EpistemicModel, EventModel, ModelError, PointedModel


class CallBudgetExceeded(RuntimeError):
    """Raised when an evaluation exceeds its recursive-call budget."""

    def __init__(self, calls: int):
        super().__init__(f"call budget exceeded after {calls} evaluator calls")
        self.calls = calls


def compose_world(world: str, event: str) -> str:
    """Identifier of the product world built from ``world`` and ``event``."""
    return f"{world}|{event}"


class EvalContext:
    """Per-evaluation instrumentation and session cache."""

    __slots__ = ("calls", "max_calls", "product_worlds", "_flags", "_caches")

    def __init__(self, max_calls: int | None = None):
        self.calls = 0
        self.max_calls = max_calls
        self.product_worlds = 0
        self._flags: dict[int, tuple[bool, bool]] = {}  # id(node) -> (has_update, has_know)
        self._caches: dict[EpistemicModel, dict[tuple[str, int], bool]] = {}

    def flags(self, f: Formula) -> tuple[bool, bool]:
        got = self._flags.get(id(f))
        if got is not None:
            return got
        t = type(f)
        if t is Atom:
            out = (False, False)
        elif t is Not:
            out = self.flags(f.sub)
        elif t is And:
            lu, lk = self.flags(f.left)
            ru, rk = self.flags(f.right)
            out = (lu or ru, lk or rk)
        elif t is Know:
            out = (self.flags(f.sub)[0], True)
        else:
            out = (True, self.flags(f.sub)[1])
        self._flags[id(f)] = out
        return out

    def cacheable(self, f: Formula) -> bool:
        has_update, has_know = self.flags(f)
        return has_know and not has_update

    def cache_for(self, model: EpistemicModel) -> dict[tuple[str, int], bool]:
        got = self._caches.get(model)
        if got is None:
            got = self._caches[model] = {}
        return got


def product_update(
    m: EpistemicModel,
    e: EventModel,
    ctx: EvalContext | None = None,
    _known: dict[tuple[str, str], bool] | None = None,
) -> EpistemicModel:
    """The product of an epistemic model with an event model.

    Product worlds are the (world, event) pairs whose world satisfies the
    event's precondition; each agent relates two pairs when it relates both
    components; the valuation applies the event's postcondition literals on
    top of the source world's truths.  An empty result is returned as a
    zero-world sentinel model rather than an error.

    ``_known`` lets the box-update clause of the evaluator pass down
    precondition verdicts it has already computed at specific pairs.
    """
    if ctx is None:
        ctx = EvalContext()
    alive: set[tuple[str, str]] = set()
    worlds: list[str] = []
    for ev in sorted(e.events):
        pre = e.pre[ev]
        for w in sorted(m.worlds):
            if _known is not None and (w, ev) in _known:
                holds = _known[(w, ev)]
            else:
                holds = _eval(m, w, pre, ctx)
            if holds:
                alive.add((w, ev))
                worlds.append(compose_world(w, ev))
    ctx.product_worlds += len(worlds)
    if not worlds:
        return EpistemicModel.empty(sorted(set(m.relations) | set(e.relations)))
    relations: dict[str, list[tuple[str, str]]] = {}
    for agent in sorted(set(m.relations) | set(e.relations)):
        pairs: list[tuple[str, str]] = []
        for (w, w2) in m.relations.get(agent, ()):
            for (ev, ev2) in e.relations.get(agent, ()):
                if (w, ev) in alive and (w2, ev2) in alive:
                    pairs.append((compose_world(w, ev), compose_world(w2, ev2)))
        relations[agent] = pairs
    valuation = {}
    for (w, ev) in alive:
        base = m.valuation[w]
        post = e.post[ev]
        removed = {lit.prop for lit in post if lit.negated}
        added = {lit.prop for lit in post if not lit.negated}
        valuation[compose_world(w, ev)] = (base - removed) | added
    return EpistemicModel(worlds, relations, valuation)


def _eval(m: EpistemicModel, w: str, f: Formula, ctx: EvalContext) -> bool:
    ctx.calls += 1
    if ctx.max_calls is not None and ctx.calls > ctx.max_calls:
        raise CallBudgetExceeded(ctx.calls)
    t = type(f)
    if t is Atom:
        return f.prop in m.valuation[w]
    if t is And:
        return _eval(m, w, f.left, ctx) and _eval(m, w, f.right, ctx)
    if t is Not:
        sub = f.sub
        if ctx.cacheable(f):
            cache = ctx.cache_for(m)
            key = (w, id(f))
            got = cache.get(key)
            if got is None:
                got = not _eval(m, w, sub, ctx)
                cache[key] = got
            return got
        return not _eval(m, w, sub, ctx)
    if t is Know:
        if ctx.cacheable(f):
            cache = ctx.cache_for(m)
            key = (w, id(f))
            got = cache.get(key)
            if got is not None:
                return got
            result = True
            sub = f.sub
            for v in m.neighbors(f.agent, w):
                if not _eval(m, v, sub, ctx):
                    result = False
                    break
            cache[key] = result
            return result
        sub = f.sub
        for v in m.neighbors(f.agent, w):
            if not _eval(m, v, sub, ctx):
                return False
        return True
    # UpdateBox: true iff for every designated event whose precondition
    # holds here, the continuation holds at the corresponding product world.
    pem = f.update
    event_model = pem.model
    verdicts = {
        ev: _eval(m, w, event_model.pre[ev], ctx) for ev in pem.designated_sorted()
    }
    if not any(verdicts.values()):
        return True
    known = {(w, ev): held for ev, held in verdicts.items()}
    prod = product_update(m, event_model, ctx, _known=known)
    for ev in pem.designated_sorted():
        if verdicts[ev] and not _eval(prod, compose_world(w, ev), f.sub, ctx):
            return False
    return True


def evaluate(
    m: EpistemicModel,
    w: str,
    f: Formula,
    ctx: EvalContext | None = None,
) -> bool:
    """Truth of ``f`` at world ``w`` of ``m``."""
    if w not in m.worlds:
        raise ModelError(f"world {w!r} is not in the model")
    if ctx is None:
        ctx = EvalContext()
    return _eval(m, w, f, ctx)


def evaluate_pointed(pm: PointedModel, f: Formula, ctx: EvalContext | None = None) -> bool:
    """Truth at a pointed model: the conjunction over designated worlds."""
    if ctx is None:
        ctx = EvalContext()
    return all(_eval(pm.model, w, f, ctx) for w in sorted(pm.designated))


@dataclass(frozen=True)
class ProbeReport:
    verdict: bool
    recursive_calls: int
    product_worlds: int


def call_count_probe(
    m: EpistemicModel, w: str, f: Formula, max_calls: int | None = None
) -> ProbeReport:
    """Evaluate while counting every evaluator invocation, including the
    ones triggered inside precondition checks during product construction.
    A ``max_calls`` budget aborts with :class:`CallBudgetExceeded`."""
    ctx = EvalContext(max_calls=max_calls)
    verdict = evaluate(m, w, f, ctx)
    return ProbeReport(verdict, ctx.calls, ctx.product_worlds)
