import random

import pytest

from delcheck.fastcheck import (
    FragmentError,
    FragmentInstance,
    accepts_fragment,
    contract_update,
    fragment_check,
    fragment_check_probe,
    nested_update_family,
)
from delcheck.formula import And, Atom, Know, Literal, Not, UpdateBox, verum
from delcheck.kripke import EpistemicModel, EventModel, PointedEventModel
from delcheck.oracle import bisimilar
from delcheck.semantics import (
    CallBudgetExceeded,
    call_count_probe,
    compose_world,
    evaluate,
    product_update,
)

from genutil import random_fragment_formula, random_s5_model


def single_agent_model(valuations, component=True):
    worlds = sorted(valuations)
    if component:
        rel = [(u, v) for u in worlds for v in worlds]
    else:
        rel = [(w, w) for w in worlds]
    return EpistemicModel(worlds, {"a": rel}, valuations, s5=True)


def test_accepts_simple_instance():
    m = single_agent_model({"u": {"p"}, "v": set()})
    decision = accepts_fragment(FragmentInstance(m, "u", Know("a", Atom("p"))))
    assert decision.accepted and decision.reason is None


def test_rejects_two_agents(secret_model):
    decision = accepts_fragment(
        FragmentInstance(secret_model.model, "w1", Atom("z"))
    )
    assert not decision.accepted
    assert decision.reason == "two agents"


def test_rejects_postconditions():
    m = single_agent_model({"u": {"p"}})
    ev = EventModel(
        ("e",), {"a": [("e", "e")]}, {"e": verum()}, {"e": [Literal("x1")]}, s5=True
    )
    pem = PointedEventModel(ev, ("e",))
    decision = accepts_fragment(FragmentInstance(m, "u", UpdateBox(pem, Atom("p"))))
    assert not decision.accepted
    assert decision.reason == "postcondition present"


def test_rejects_multi_pointed_event_models():
    m = single_agent_model({"u": {"p"}})
    ev = EventModel(
        ("e1", "e2"), {"a": [("e1", "e1"), ("e2", "e2")]}, {}, {}, s5=True
    )
    pem = PointedEventModel(ev, ("e1", "e2"))
    decision = accepts_fragment(FragmentInstance(m, "u", UpdateBox(pem, Atom("p"))))
    assert not decision.accepted
    assert decision.reason == "multi-pointed event model"


def test_rejects_non_s5_model():
    m = EpistemicModel(("u", "v"), {"a": [("u", "u"), ("v", "v"), ("u", "v")]}, {})
    decision = accepts_fragment(FragmentInstance(m, "u", Atom("p")))
    assert not decision.accepted
    assert decision.reason == "model is not S5"


def test_contract_filters_by_precondition():
    m = single_agent_model({"u": {"p"}, "v": set()})
    ev = EventModel(("e",), {"a": [("e", "e")]}, {"e": Atom("p")}, {}, s5=True)
    sub = contract_update(m, "u", ev, "e")
    assert sub.worlds == {"u"}


def test_contract_identity_keeps_component():
    m = single_agent_model({"u": {"p"}, "v": set()})
    ev = EventModel(("e",), {"a": [("e", "e")]}, {"e": verum()}, {}, s5=True)
    sub = contract_update(m, "u", ev, "e")
    assert sub.worlds == {"u", "v"}


def test_contract_union_of_preconditions_keeps_everything():
    m = single_agent_model({"u": {"p"}, "v": set()})
    ev = EventModel(
        ("e1", "e2"),
        {"a": [("e1", "e1"), ("e1", "e2"), ("e2", "e1"), ("e2", "e2")]},
        {"e1": Atom("p"), "e2": Not(Atom("p"))},
        {},
        s5=True,
    )
    sub = contract_update(m, "u", ev, "e1")
    assert sub.worlds == {"u", "v"}


def test_contract_requires_precondition_at_start():
    m = single_agent_model({"u": set(), "v": {"p"}})
    ev = EventModel(("e",), {"a": [("e", "e")]}, {"e": Atom("p")}, {}, s5=True)
    with pytest.raises(FragmentError, match="precondition"):
        contract_update(m, "u", ev, "e")


def test_contract_restricted_to_reachable_component():
    m = single_agent_model({"u": {"p"}, "v": {"p"}}, component=False)
    ev = EventModel(("e",), {"a": [("e", "e")]}, {"e": Atom("p")}, {}, s5=True)
    sub = contract_update(m, "u", ev, "e")
    assert sub.worlds == {"u"}


def test_fragment_check_update_free_matches_evaluate():
    rng = random.Random(11)
    for _ in range(50):
        m = random_s5_model(rng, max_worlds=6, agents=("a",))
        w = sorted(m.worlds)[0]
        f = random_fragment_formula(rng, depth=3, updates_left=0)
        inst = FragmentInstance(m, w, f)
        assert fragment_check(inst) == evaluate(m, w, f)


def test_fragment_check_restricted_identity_update(secret_model):
    # the two-world model restricted to its sole nontrivial agent
    m = EpistemicModel(
        ("w1", "w2"),
        {"a": [("w1", "w1"), ("w1", "w2"), ("w2", "w1"), ("w2", "w2")]},
        {"w1": {"z"}},
        s5=True,
    )
    ev = EventModel(("e",), {"a": [("e", "e")]}, {"e": verum()}, {}, s5=True)
    pem = PointedEventModel(ev, ("e",))
    inst = FragmentInstance(m, "w1", UpdateBox(pem, Know("a", Atom("z"))))
    assert fragment_check(inst) is False
    assert evaluate(m, "w1", inst.formula) is False


def test_fragment_check_rejects_nonfragment_input(secret_model):
    with pytest.raises(FragmentError, match="two agents"):
        fragment_check(FragmentInstance(secret_model.model, "w1", Atom("z")))


def test_oracle_equivalence_on_random_instances():
    rng = random.Random(42)
    done = 0
    while done < 200:
        m = random_s5_model(rng, max_worlds=8, agents=("a",))
        w = sorted(m.worlds)[rng.randrange(len(m.worlds))]
        f = random_fragment_formula(rng, depth=4, updates_left=3)
        inst = FragmentInstance(m, w, f)
        if not accepts_fragment(inst).accepted:
            continue
        assert fragment_check(inst) == evaluate(m, w, f)
        done += 1


def test_contraction_bisimilar_to_product():
    rng = random.Random(99)
    done = 0
    while done < 100:
        m = random_s5_model(rng, max_worlds=6, agents=("a",))
        w0 = sorted(m.worlds)[rng.randrange(len(m.worlds))]
        from genutil import random_partition, equivalence_from_partition

        events = [f"e{i}" for i in range(rng.randint(1, 3))]
        relations = {"a": equivalence_from_partition(random_partition(rng, events[:]))}
        pre = {
            e: random_fragment_formula(rng, depth=2, updates_left=1)
            for e in events
        }
        ev = EventModel(events, relations, pre, {}, s5=True)
        e0 = rng.choice(events)
        if not evaluate(m, w0, ev.pre[e0]):
            continue
        contracted = contract_update(m, w0, ev, e0)
        prod = product_update(m, ev)
        assert bisimilar(contracted, w0, prod, compose_world(w0, e0))
        done += 1


def test_memoization_transparency():
    rng = random.Random(17)
    done = 0
    while done < 40:
        m = random_s5_model(rng, max_worlds=5, agents=("a",))
        w = sorted(m.worlds)[0]
        f = random_fragment_formula(rng, depth=3, updates_left=2)
        inst = FragmentInstance(m, w, f)
        if not accepts_fragment(inst).accepted:
            continue
        assert fragment_check(inst, memo=True) == fragment_check(inst, memo=False)
        done += 1


def test_family_base_case_is_atom():
    inst = nested_update_family(0)
    assert inst.formula == Atom("p")


def test_family_first_level_shape():
    inst = nested_update_family(1)
    f = inst.formula
    assert type(f) is UpdateBox
    assert f.sub == Atom("p")
    (event,) = f.update.model.events
    pre = f.update.model.pre[event]
    assert pre == And(Atom("p"), Atom("p"))
    # the two conjuncts are literally the same node (shared structure)
    assert pre.left is pre.right


def test_family_accepted_and_engines_agree():
    for k in range(0, 8):
        inst = nested_update_family(k)
        assert accepts_fragment(inst).accepted
        naive = evaluate(inst.model, inst.world, inst.formula)
        assert fragment_check(inst) == naive is True


def test_family_exponential_versus_memoized():
    inst = nested_update_family(12)
    naive = call_count_probe(inst.model, inst.world, inst.formula)
    fast = fragment_check_probe(inst)
    assert naive.verdict == fast.verdict
    assert naive.recursive_calls >= 4096
    assert fast.recursive_calls <= 200


def test_family_naive_growth_is_geometric():
    counts = []
    for k in range(4, 11):
        inst = nested_update_family(k)
        counts.append(
            call_count_probe(inst.model, inst.world, inst.formula).recursive_calls
        )
    for a, b in zip(counts, counts[1:]):
        assert b / a >= 1.9


def test_family_memoized_growth_is_linear():
    entries = []
    for k in range(4, 13):
        entries.append(fragment_check_probe(nested_update_family(k)).memo_entries)
    diffs = [b - a for a, b in zip(entries, entries[1:])]
    seconds = [b - a for a, b in zip(diffs, diffs[1:])]
    assert all(abs(d) <= 2 for d in seconds)


def test_family_naive_budget_stop():
    inst = nested_update_family(16)
    with pytest.raises(CallBudgetExceeded) as info:
        call_count_probe(inst.model, inst.world, inst.formula, max_calls=2**16)
    assert info.value.calls >= 2**16
