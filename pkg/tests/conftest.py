from pathlib import Path

import pytest

from noplan.abstraction import FluentGroup, LatticeSpec
from noplan.model import Action, Effect, FluentTable, PlanningModel
from noplan.pddl import ground, parse_model

INSTANCES = Path(__file__).resolve().parent.parent / "instances"


def build_model(fluent_names, actions, init, goal):
    """Hand-build a model from canonical fluent names.

    actions: list of (name, prec, adds, dels) over fluent names, or
    (name, prec, effects) with effects as (cond, adds, dels) triples.
    """
    table = FluentTable()
    ids = {}
    for name in fluent_names:
        pred, *args = name.split("_")
        ids[name] = table.intern(pred, tuple(args))

    def s(names):
        return frozenset(ids[n] for n in names)

    built = []
    for spec in actions:
        if len(spec) == 4:
            name, prec, adds, dels = spec
            built.append(Action.simple(name, s(prec), s(adds), s(dels)))
        else:
            name, prec, effects = spec
            built.append(
                Action(
                    name,
                    s(prec),
                    tuple(Effect(s(c), s(a), s(d)) for c, a, d in effects),
                )
            )
    model = PlanningModel(
        table, frozenset(ids.values()), tuple(built), s(init), s(goal)
    )
    return model, ids


@pytest.fixture(scope="session")
def minirover_texts():
    return (
        (INSTANCES / "minirover" / "domain.pddl").read_text(),
        (INSTANCES / "minirover" / "problem.pddl").read_text(),
    )


@pytest.fixture(scope="session")
def minirover(minirover_texts):
    """MiniRover-A as produced by the parser and grounder."""
    return ground(parse_model(*minirover_texts))


@pytest.fixture(scope="session")
def minirover_hand():
    """MiniRover-A built by hand; the grounding must reproduce it."""
    model, _ = build_model(
        ["at_l1", "at_l2", "at_l3", "clear_l2", "clear_l3", "conn_l1_l2", "conn_l2_l3"],
        [
            ("move_l1_l2", ["at_l1", "conn_l1_l2", "clear_l2"], ["at_l2"], ["at_l1"]),
            ("move_l2_l3", ["at_l2", "conn_l2_l3", "clear_l3"], ["at_l3"], ["at_l2"]),
        ],
        ["at_l1", "conn_l1_l2", "conn_l2_l3", "clear_l3"],
        ["at_l3"],
    )
    return model


def minirover_groups(m):
    def members(pred):
        return frozenset(f for f in m.fluents if m.table.fluent(f).name == pred)

    return [FluentGroup("rocks", members("clear")), FluentGroup("conn", members("conn"))]


@pytest.fixture(scope="session")
def minirover_spec():
    return LatticeSpec((("rocks", ("clear",)), ("conn", ("conn",))))


@pytest.fixture(scope="session")
def norocks(minirover):
    from noplan.abstraction import project_model

    rocks = minirover_groups(minirover)[0]
    return project_model(minirover, rocks.members)


@pytest.fixture(scope="session")
def twopath():
    """Two routes l1->l2->l4 and l1->l3->l4, no obstacles."""
    model, _ = build_model(
        ["at_l1", "at_l2", "at_l3", "at_l4",
         "conn_l1_l2", "conn_l1_l3", "conn_l2_l4", "conn_l3_l4"],
        [
            ("move_l1_l2", ["at_l1", "conn_l1_l2"], ["at_l2"], ["at_l1"]),
            ("move_l1_l3", ["at_l1", "conn_l1_l3"], ["at_l3"], ["at_l1"]),
            ("move_l2_l4", ["at_l2", "conn_l2_l4"], ["at_l4"], ["at_l2"]),
            ("move_l3_l4", ["at_l3", "conn_l3_l4"], ["at_l4"], ["at_l3"]),
        ],
        ["at_l1", "conn_l1_l2", "conn_l1_l3", "conn_l2_l4", "conn_l3_l4"],
        ["at_l4"],
    )
    return model
