import itertools

import pytest

from noplan.abstraction import (
    AbstractionLattice,
    FluentGroup,
    LatticeSpec,
    build_lattice,
    concretize,
    diff_models,
    find_explanatory_fluents,
    load_lattice_spec,
    minimum_abstraction_set,
    project_model,
    resolve_groups,
)
from noplan.errors import (
    LatticeError,
    LatticeSpecError,
    ProjectionRelationError,
    RootSolvableError,
    UnsolvableEverywhereError,
)
from noplan.model import validate_plan
from noplan.search import decide_solvable, enumerate_plans

from .conftest import build_model, minirover_groups


def test_project_clear_gives_norocks(minirover, minirover_hand, norocks):
    rocks = minirover_groups(minirover)[0]
    projected = project_model(minirover, rocks.members)
    assert projected.same_content(norocks)
    for a in projected.actions:
        names = {projected.table.canonical(f) for f in a.prec}
        assert not any(n.startswith("clear") for n in names)


def test_project_empty_is_identity(minirover):
    assert project_model(minirover, frozenset()) is minirover


def test_project_everything_trivially_solvable(minirover):
    total = project_model(minirover, minirover.fluents)
    assert total.goal == frozenset()
    assert decide_solvable(total).plan == ()


def test_project_rejects_foreign_fluents(minirover):
    with pytest.raises(Exception):
        project_model(minirover, frozenset({10_000}))


def test_build_lattice_four_nodes(minirover):
    lat = build_lattice(minirover, minirover_groups(minirover))
    assert len(lat.all_projected_sets()) == 4
    assert lat.maximal_projected_sets() == [frozenset({"conn", "rocks"})]


def test_build_lattice_zero_groups(minirover):
    lat = build_lattice(minirover, [])
    assert lat.all_projected_sets() == [frozenset()]
    assert lat.node(frozenset()).model is minirover


def test_build_lattice_rejects_overlap(minirover):
    rocks, conn = minirover_groups(minirover)
    overlap = FluentGroup("both", rocks.members | conn.members)
    with pytest.raises(LatticeError, match="overlap"):
        build_lattice(minirover, [rocks, overlap])


def test_concretize_top_minus_rocks(minirover):
    lat = build_lattice(minirover, minirover_groups(minirover))
    top = lat.node({"rocks", "conn"})
    node = concretize(lat, top, {"rocks"})
    assert node.projected == frozenset({"conn"})


def test_concretize_nothing_is_same_node(minirover):
    lat = build_lattice(minirover, minirover_groups(minirover))
    top = lat.node({"rocks", "conn"})
    assert concretize(lat, top, set()) is top


def test_concretize_error_when_not_projected(minirover):
    lat = build_lattice(minirover, minirover_groups(minirover))
    with pytest.raises(LatticeError):
        concretize(lat, lat.root_node, {"rocks"})


def test_minimum_abstraction_set_is_top(minirover):
    lat = build_lattice(minirover, minirover_groups(minirover))
    members = minimum_abstraction_set(lat)
    assert [n.projected for n in members] == [frozenset({"conn", "rocks"})]


def test_minimum_abstraction_set_empty_when_goal_unreachable():
    # no action ever adds g, and g is in no group
    m, _ = build_model(
        ["p_x", "g"],
        [("a", [], ["p_x"], [])],
        [],
        ["g"],
    )
    lat = build_lattice(m, [FluentGroup("ps", frozenset({0}))])
    assert minimum_abstraction_set(lat) == []


def test_minimum_abstraction_set_zero_groups_solvable(norocks):
    lat = build_lattice(norocks, [])
    members = minimum_abstraction_set(lat)
    assert len(members) == 1 and members[0] is lat.root_node


def test_diff_norocks_vs_minirover(minirover):
    rocks = minirover_groups(minirover)[0]
    abs_m = project_model(minirover, rocks.members)
    ups = diff_models(abs_m, minirover)
    canon = [(u.kind, u.action, minirover.table.canonical(u.fluent)) for u in ups]
    assert canon == [
        ("init-literal", None, "clear_l3"),
        ("precondition-literal", "move_l1_l2", "clear_l2"),
        ("precondition-literal", "move_l2_l3", "clear_l3"),
    ]


def test_diff_identity_is_empty(minirover):
    assert diff_models(minirover, minirover) == []


def test_diff_goal_literal():
    m, ids = build_model(
        ["p", "g"],
        [("a", [], ["g"], [])],
        ["p"],
        ["g"],
    )
    abs_m = project_model(m, frozenset({ids["g"]}))
    ups = diff_models(abs_m, m)
    kinds = [(u.kind, u.action) for u in ups]
    assert ("goal-literal", None) in kinds
    assert ("add-effect-literal", "a") in kinds


def test_diff_rejects_unrelated_models(minirover, twopath):
    with pytest.raises(ProjectionRelationError):
        diff_models(twopath, minirover)


def test_find_explanatory_minirover(minirover):
    lat = build_lattice(minirover, minirover_groups(minirover))
    expl = find_explanatory_fluents(lat)
    assert expl.groups == frozenset({"rocks"})
    assert expl.cost == 3
    assert len(expl.updates) == 3


def test_find_explanatory_solvable_root_error(norocks):
    groups = [FluentGroup("conn", frozenset(
        f for f in norocks.fluents if norocks.table.fluent(f).name == "conn"))]
    lat = build_lattice(norocks, groups)
    with pytest.raises(RootSolvableError):
        find_explanatory_fluents(lat)


def test_find_explanatory_empty_minimum_signals():
    m, _ = build_model(["p_x", "g"], [("a", [], ["p_x"], [])], [], ["g"])
    lat = build_lattice(m, [FluentGroup("ps", frozenset({0}))])
    with pytest.raises(UnsolvableEverywhereError):
        find_explanatory_fluents(lat)


def test_find_explanatory_prefers_cheaper_group():
    # two independent blockers; breaking either explains, the cheaper
    # one (fewer occurrences) must win
    m, ids = build_model(
        ["key_a", "door_b", "g"],
        [
            ("open", ["key_a", "door_b"], ["g"], []),
            ("jiggle", ["door_b"], ["door_b"], []),
        ],
        [],
        ["g"],
    )
    lat = build_lattice(m, [
        FluentGroup("key", frozenset({ids["key_a"]})),
        FluentGroup("door", frozenset({ids["door_b"]})),
    ])
    expl = find_explanatory_fluents(lat)
    # key occurs once (precondition); door occurs three times
    assert expl.groups == frozenset({"key"})
    assert expl.cost == 1


def test_forbidden_combinations_create_multiple_maxima(minirover):
    groups = minirover_groups(minirover)
    lat = build_lattice(minirover, groups, forbidden=[{"rocks", "conn"}])
    maxima = lat.maximal_projected_sets()
    assert maxima == [frozenset({"conn"}), frozenset({"rocks"})]
    members = minimum_abstraction_set(lat)
    # only the rocks projection is solvable
    assert [n.projected for n in members] == [frozenset({"rocks"})]
    expl = find_explanatory_fluents(lat, members)
    assert expl.groups == frozenset({"rocks"})


def test_lattice_spec_loading(minirover):
    spec = load_lattice_spec(
        '{"groups": [{"name": "rocks", "predicates": ["clear"]},'
        '{"name": "conn", "predicates": ["conn"]}],'
        '"forbidden": [["rocks", "conn"]]}'
    )
    groups = resolve_groups(minirover, spec)
    assert {g.name for g in groups} == {"rocks", "conn"}
    assert spec.forbidden == (frozenset({"rocks", "conn"}),)


def test_lattice_spec_errors(minirover):
    with pytest.raises(LatticeSpecError):
        load_lattice_spec("not json")
    with pytest.raises(LatticeSpecError):
        load_lattice_spec('{"groups": [{"name": "x", "predicates": []}]}')
    spec = load_lattice_spec('{"groups": [{"name": "x", "predicates": ["missing"]}]}')
    with pytest.raises(LatticeSpecError, match="matches no fluents"):
        resolve_groups(minirover, spec)


def test_complement_pairs_must_share_group():
    from noplan.pddl import ground, parse_model

    domain = """(define (domain d)
  (:requirements :strips :negative-preconditions)
  (:predicates (p) (q))
  (:action a :parameters () :precondition (not (p)) :effect (q)))"""
    problem = "(define (problem x) (:domain d) (:init) (:goal (q)))"
    m = ground(parse_model(domain, problem))
    p = m.table.id_of("p")
    with pytest.raises(LatticeError, match="complement"):
        build_lattice(m, [FluentGroup("half", frozenset({p}))])
    # resolve_groups pulls the complement in automatically
    groups = resolve_groups(m, LatticeSpec((("ps", ("p",)),)))
    canon = {m.table.canonical(f) for f in groups[0].members}
    assert canon == {"p", "not-p"}


# --- order preservation and inheritance ------------------------------------


def _all_lattice_nodes(lat: AbstractionLattice):
    return [lat.node(p) for p in lat.all_projected_sets()]


def test_projection_order_preserved_by_concretization(minirover):
    """Removing the same groups from two ordered nodes keeps them ordered."""
    lat = build_lattice(minirover, minirover_groups(minirover))
    nodes = _all_lattice_nodes(lat)
    for n1, n2 in itertools.product(nodes, nodes):
        if not n1.projected <= n2.projected:
            continue
        for restored in map(frozenset, _powerset(sorted(n1.projected))):
            c1 = concretize(lat, n1, restored)
            c2 = concretize(lat, n2, restored)
            assert c1.projected <= c2.projected


def _powerset(items):
    for r in range(len(items) + 1):
        yield from itertools.combinations(items, r)


def test_logical_completeness_all_nodes(minirover):
    """Every plan of a concrete node stays valid in every abstraction of it."""
    lat = build_lattice(minirover, minirover_groups(minirover))
    nodes = _all_lattice_nodes(lat)
    for n1, n2 in itertools.product(nodes, nodes):
        if not n1.projected <= n2.projected:
            continue
        for plan in enumerate_plans(n1.model, 6):
            assert validate_plan(n2.model, plan).valid


def test_plan_set_monotone_up_the_lattice(minirover):
    lat = build_lattice(minirover, minirover_groups(minirover))
    nodes = _all_lattice_nodes(lat)
    for n1, n2 in itertools.product(nodes, nodes):
        if n1.projected <= n2.projected:
            assert enumerate_plans(n1.model, 6) <= enumerate_plans(n2.model, 6)


def test_explanation_inheritance_down_the_lattice(minirover):
    """A group set that breaks a node breaks every more concrete node."""
    lat = build_lattice(minirover, minirover_groups(minirover))
    nodes = _all_lattice_nodes(lat)
    for n2 in nodes:
        for restored in map(frozenset, _powerset(sorted(n2.projected))):
            if not restored:
                continue
            broken = not decide_solvable(concretize(lat, n2, restored).model).solvable
            if not broken:
                continue
            for n1 in nodes:
                if n1.projected <= n2.projected and restored <= n1.projected:
                    c1 = concretize(lat, n1, restored)
                    assert not decide_solvable(c1.model).solvable


def test_explanatory_minimality_exhaustive(minirover):
    from .oracles import brute_force_explanations

    lat = build_lattice(minirover, minirover_groups(minirover))
    members = minimum_abstraction_set(lat)
    expl = find_explanatory_fluents(lat, members)
    valid = brute_force_explanations(lat, members)
    assert valid, "oracle found no explanation but search returned one"
    assert expl.cost == min(cost for cost, _ in valid)
