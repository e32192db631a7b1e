import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))
sys.setrecursionlimit(100_000)

from delcheck.formula import Literal, verum
from delcheck.kripke import (
    EpistemicModel,
    EventModel,
    PointedEventModel,
    PointedModel,
)


@pytest.fixture
def secret_model() -> PointedModel:
    """Two worlds, z true in one; agent a cannot tell them apart, agent b
    can.  Designated at the z world."""
    model = EpistemicModel(
        ("w1", "w2"),
        {
            "a": [("w1", "w1"), ("w1", "w2"), ("w2", "w1"), ("w2", "w2")],
            "b": [("w1", "w1"), ("w2", "w2")],
        },
        {"w1": {"z"}},
        s5=True,
    )
    return PointedModel(model, frozenset(["w1"]))


@pytest.fixture
def coin_flip_event() -> PointedEventModel:
    """A hidden coin flip: both outcomes possible, agent a learns the
    result (identity relation), agent b only sees that a flip happened.
    Postconditions force h on one branch and ~h on the other."""
    model = EventModel(
        ("e1", "e2"),
        {
            "a": [("e1", "e1"), ("e2", "e2")],
            "b": [("e1", "e1"), ("e1", "e2"), ("e2", "e1"), ("e2", "e2")],
        },
        {"e1": verum(), "e2": verum()},
        {"e1": [Literal("h")], "e2": [Literal("h", negated=True)]},
        s5=True,
    )
    return PointedEventModel(model, ("e1",), name="flip")


@pytest.fixture
def identity_update() -> PointedEventModel:
    """One event with a trivially true precondition for both agents."""
    model = EventModel(
        ("e",),
        {"a": [("e", "e")], "b": [("e", "e")]},
        {"e": verum()},
        {},
        s5=True,
    )
    return PointedEventModel(model, ("e",), name="id")
