import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noplan.errors import EnumerationBudgetError
from noplan.model import validate_plan
from noplan.search import (
    SearchLimits,
    additive_heuristic,
    decide_solvable,
    enumerate_plans,
    reachable_states,
)

from .conftest import build_model


def test_minirover_unsolvable(minirover):
    assert decide_solvable(minirover).status == "unsolvable"
    # nothing is applicable at the initial state: only one reachable state
    assert len(reachable_states(minirover)) == 1


def test_norocks_solvable_with_deterministic_plan(norocks):
    result = decide_solvable(norocks)
    assert result.solvable
    assert result.plan == ("move_l1_l2", "move_l2_l3")
    assert validate_plan(norocks, result.plan).valid


def test_goal_in_init_gives_empty_plan():
    m, _ = build_model(["g"], [], ["g"], ["g"])
    result = decide_solvable(m)
    assert result.solvable and result.plan == ()


def test_node_budget_reports_exhausted(norocks):
    result = decide_solvable(norocks, SearchLimits(max_nodes=0, max_seconds=60))
    assert result.exhausted
    assert "budget" in result.detail


def test_enumerate_norocks(norocks):
    assert enumerate_plans(norocks, 2) == {("move_l1_l2", "move_l2_l3")}


def test_enumerate_minirover_empty(minirover):
    assert enumerate_plans(minirover, 6) == set()


def test_enumerate_len_zero_goal_in_init():
    m, _ = build_model(["g"], [], ["g"], ["g"])
    assert enumerate_plans(m, 0) == {()}


def test_enumerate_budget():
    m, _ = build_model(
        ["p", "q"],
        [("flip", [], ["p"], []), ("flop", [], ["q"], [])],
        [],
        ["p", "q"],
    )
    with pytest.raises(EnumerationBudgetError):
        enumerate_plans(m, 10, max_nodes=5)


def test_additive_heuristic_values(norocks):
    h = additive_heuristic(norocks)
    assert h(norocks.init) == 2.0  # two moves to reach at_l3 under relaxation
    goal_state = frozenset(
        {f for f in norocks.fluents if norocks.table.canonical(f) != "at_l1"}
    )
    assert h(goal_state) == 0.0


def test_additive_heuristic_unreachable_is_inf(minirover):
    h = additive_heuristic(minirover)
    assert math.isinf(h(minirover.init))


@st.composite
def micro_models(draw):
    n = draw(st.integers(3, 6))
    names = [f"f{i}" for i in range(n)]
    subset = st.lists(st.sampled_from(names), max_size=2, unique=True)
    actions = []
    for i in range(draw(st.integers(1, 4))):
        prec = draw(subset)
        adds = draw(st.lists(st.sampled_from(names), min_size=1, max_size=2, unique=True))
        dels = [f for f in draw(subset) if f not in adds]
        actions.append((f"a{i}", prec, adds, dels))
    init = draw(subset)
    goal = draw(st.lists(st.sampled_from(names), min_size=1, max_size=2, unique=True))
    return build_model(names, actions, init, goal)[0]


@given(micro_models())
@settings(max_examples=60, deadline=None)
def test_oracle_agreement(m):
    bound = len(reachable_states(m))
    plans = enumerate_plans(m, bound, max_nodes=4_000_000)
    result = decide_solvable(m)
    assert result.solvable == bool(plans)
    if result.solvable:
        assert validate_plan(m, result.plan).valid


@given(micro_models())
@settings(max_examples=40, deadline=None)
def test_decide_solvable_deterministic(m):
    a = decide_solvable(m)
    b = decide_solvable(m)
    assert a == b
