"""Fluent-group projection, abstraction lattices and explanatory fluents.

A lattice is addressed by subsets of named fluent groups; projecting a
group removes all of its member fluents from every component of the
model, which keeps every concrete plan valid in the abstraction. Nodes
are built lazily from the root and memoized, together with a
solvability cache. The explanatory-fluent search walks candidate group
subsets in nondecreasing update-cost order, so the first subset whose
restoration makes every minimum-abstraction-set member unsolvable is
also the cheapest.
"""

from __future__ import annotations

import heapq
import itertools
import json
import threading
from dataclasses import dataclass

from .errors import (
    LatticeError,
    LatticeSpecError,
    ModelError,
    ProjectionRelationError,
    ResourceExhaustedError,
    RootSolvableError,
    UnsolvableEverywhereError,
)
from .model import Action, Effect, PlanningModel
from .search import SearchLimits, SearchResult, decide_solvable

INIT_LITERAL = "init-literal"
GOAL_LITERAL = "goal-literal"
PRECONDITION_LITERAL = "precondition-literal"
EFFECT_CONDITION_LITERAL = "effect-condition-literal"
ADD_EFFECT_LITERAL = "add-effect-literal"
DEL_EFFECT_LITERAL = "del-effect-literal"

_KIND_ORDER = {
    INIT_LITERAL: 0,
    GOAL_LITERAL: 1,
    PRECONDITION_LITERAL: 2,
    EFFECT_CONDITION_LITERAL: 3,
    ADD_EFFECT_LITERAL: 4,
    DEL_EFFECT_LITERAL: 5,
}


@dataclass(frozen=True)
class FluentGroup:
    """A named, disjoint bundle of fluents (all groundings of a predicate)."""

    name: str
    members: frozenset[int]


@dataclass(frozen=True)
class ModelUpdate:
    """One syntactic occurrence of a restored fluent in the concrete model."""

    kind: str
    action: str | None
    fluent: int

    def sort_key(self):
        return (_KIND_ORDER[self.kind], self.action or "", self.fluent)


@dataclass(frozen=True)
class ExplanatorySet:
    groups: frozenset[str]
    cost: int
    updates: tuple[ModelUpdate, ...]


@dataclass
class LatticeNode:
    projected: frozenset[str]
    model: PlanningModel
    solvable: SearchResult | None = None

    def sort_key(self):
        return tuple(sorted(self.projected))


def project_model(m: PlanningModel, fluents) -> PlanningModel:
    """Remove a fluent set from every component of m."""
    gone = frozenset(fluents)
    if not gone <= m.fluents:
        raise ModelError("projection set mentions fluents outside the model")
    if not gone:
        return m
    actions = tuple(
        Action(
            a.name,
            a.prec - gone,
            tuple(Effect(e.condition - gone, e.adds - gone, e.dels - gone) for e in a.effects),
        )
        for a in m.actions
    )
    return PlanningModel(m.table, m.fluents - gone, actions, m.init - gone, m.goal - gone)


class AbstractionLattice:
    """Lazily built powerset lattice of group projections of a root model."""

    def __init__(self, root: PlanningModel, groups, forbidden=(), limits: SearchLimits | None = None):
        self.root = root
        self.groups: dict[str, FluentGroup] = {}
        self.limits = limits or SearchLimits()
        seen: set[int] = set()
        for g in groups:
            if g.name in self.groups:
                raise LatticeError(f"duplicate group name {g.name}")
            if not g.members:
                raise LatticeError(f"group {g.name} is empty")
            if not g.members <= root.fluents:
                raise LatticeError(f"group {g.name} mentions fluents outside the model")
            if g.members & seen:
                raise LatticeError(f"group {g.name} overlaps another group")
            for f in g.members:
                partner = root.table.complement(f)
                if partner is not None and partner in root.fluents and partner not in g.members:
                    raise LatticeError(
                        f"group {g.name}: fluent {root.table.canonical(f)} is separated "
                        f"from its complement; complement pairs must share a group"
                    )
            seen |= g.members
            self.groups[g.name] = g
        self.forbidden = tuple(frozenset(f) for f in forbidden)
        for combo in self.forbidden:
            if not combo <= set(self.groups):
                raise LatticeError("forbidden combination names an unknown group")
        self._nodes: dict[frozenset[str], LatticeNode] = {
            frozenset(): LatticeNode(frozenset(), root)
        }
        self._lock = threading.Lock()

    @property
    def root_node(self) -> LatticeNode:
        return self._nodes[frozenset()]

    def allowed(self, projected: frozenset[str]) -> bool:
        return not any(f <= projected for f in self.forbidden)

    def node(self, projected) -> LatticeNode:
        projected = frozenset(projected)
        if not projected <= set(self.groups):
            unknown = sorted(projected - set(self.groups))
            raise LatticeError(f"unknown groups {unknown}")
        if not self.allowed(projected):
            raise LatticeError(f"projected set {sorted(projected)} is forbidden")
        with self._lock:
            node = self._nodes.get(projected)
            if node is None:
                gone = frozenset().union(*(self.groups[g].members for g in projected))
                node = LatticeNode(projected, project_model(self.root, gone))
                self._nodes[projected] = node
        return node

    def all_projected_sets(self) -> list[frozenset[str]]:
        names = sorted(self.groups)
        out = []
        for r in range(len(names) + 1):
            for combo in itertools.combinations(names, r):
                p = frozenset(combo)
                if self.allowed(p):
                    out.append(p)
        return out

    def maximal_projected_sets(self) -> list[frozenset[str]]:
        sets = self.all_projected_sets()
        return sorted(
            (p for p in sets if not any(p < q for q in sets)),
            key=lambda p: tuple(sorted(p)),
        )

    def solvability(self, node: LatticeNode) -> SearchResult:
        if node.solvable is None:
            node.solvable = decide_solvable(node.model, self.limits)
        return node.solvable

    def decided_solvable(self, node: LatticeNode, stage: str) -> bool:
        result = self.solvability(node)
        if result.exhausted:
            raise ResourceExhaustedError(f"{stage} at node {sorted(node.projected)}")
        return result.solvable


def build_lattice(m: PlanningModel, groups, forbidden=(),
                  limits: SearchLimits | None = None) -> AbstractionLattice:
    return AbstractionLattice(m, groups, forbidden, limits)


def concretize(lat: AbstractionLattice, node: LatticeNode, restored) -> LatticeNode:
    """The node obtained by restoring the given groups to node."""
    restored = frozenset(restored)
    if not restored <= node.projected:
        missing = sorted(restored - node.projected)
        raise LatticeError(f"groups {missing} are not projected at this node")
    return lat.node(node.projected - restored)


def minimum_abstraction_set(lat: AbstractionLattice) -> list[LatticeNode]:
    """The solvable maximal elements, in deterministic order."""
    out = []
    for projected in lat.maximal_projected_sets():
        node = lat.node(projected)
        if lat.decided_solvable(node, "solvability of maximal element"):
            out.append(node)
    return out


def _updates_for_fluents(m: PlanningModel, fluents: frozenset[int]) -> list[ModelUpdate]:
    ups: set[ModelUpdate] = set()
    for f in m.init & fluents:
        ups.add(ModelUpdate(INIT_LITERAL, None, f))
    for f in m.goal & fluents:
        ups.add(ModelUpdate(GOAL_LITERAL, None, f))
    for a in m.actions:
        for f in a.prec & fluents:
            ups.add(ModelUpdate(PRECONDITION_LITERAL, a.name, f))
        for e in a.effects:
            for f in e.condition & fluents:
                ups.add(ModelUpdate(EFFECT_CONDITION_LITERAL, a.name, f))
            for f in e.adds & fluents:
                ups.add(ModelUpdate(ADD_EFFECT_LITERAL, a.name, f))
            for f in e.dels & fluents:
                ups.add(ModelUpdate(DEL_EFFECT_LITERAL, a.name, f))
    return sorted(ups, key=ModelUpdate.sort_key)


def diff_models(abs_m: PlanningModel, conc_m: PlanningModel) -> list[ModelUpdate]:
    """One update per occurrence of a projected fluent in the concrete model."""
    restored = conc_m.fluents - abs_m.fluents
    if abs_m.fluents - conc_m.fluents or project_model(conc_m, restored) != abs_m:
        raise ProjectionRelationError("models are not in a projection relation")
    return _updates_for_fluents(conc_m, restored)


def find_explanatory_fluents(lat: AbstractionLattice,
                             minimum: list[LatticeNode] | None = None) -> ExplanatorySet:
    """Cheapest group set whose restoration breaks every minimum-set member.

    Cost is the number of unique model updates, which is additive across
    disjoint groups, so candidates are popped from a heap ordered by
    (cost, group count, names) and the first hit is optimal. Ties go to
    fewer groups, then lexicographic names.
    """
    members = minimum_abstraction_set(lat) if minimum is None else minimum
    if not members:
        raise UnsolvableEverywhereError("every maximal abstraction is unsolvable")

    universe = sorted(set().union(*(n.projected for n in members)))
    if not universe:
        raise RootSolvableError("the concrete model is solvable; nothing to explain")
    weight = {
        g: len(_updates_for_fluents(lat.root, lat.groups[g].members)) for g in universe
    }

    heap: list[tuple[int, int, tuple[str, ...], int]] = []
    for i, g in enumerate(universe):
        heapq.heappush(heap, (weight[g], 1, (g,), i))
    while heap:
        cost, size, names, frontier = heapq.heappop(heap)
        candidate = frozenset(names)
        if _explains(lat, members, candidate):
            updates: set[ModelUpdate] = set()
            for node in members:
                conc = concretize(lat, node, candidate & node.projected)
                updates.update(diff_models(node.model, conc.model))
            ordered = sorted(updates, key=ModelUpdate.sort_key)
            # the heap key must be the realized cost, or the first hit
            # would not be the cheapest
            assert len(ordered) == cost, "group update costs are not additive"
            return ExplanatorySet(candidate, len(ordered), tuple(ordered))
        for j in range(frontier + 1, len(universe)):
            g = universe[j]
            heapq.heappush(heap, (cost + weight[g], size + 1, names + (g,), j))
    raise RootSolvableError("the concrete model is solvable; nothing to explain")


def _explains(lat: AbstractionLattice, members, candidate: frozenset[str]) -> bool:
    for node in members:
        conc = concretize(lat, node, candidate & node.projected)
        if lat.decided_solvable(conc, "explanatory-fluent check"):
            return False
    return True


# ---------------------------------------------------------------------------
# Lattice spec files


@dataclass(frozen=True)
class LatticeSpec:
    groups: tuple[tuple[str, tuple[str, ...]], ...]  # (name, predicate names)
    forbidden: tuple[frozenset[str], ...] = ()


def load_lattice_spec(text: str) -> LatticeSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise LatticeSpecError(f"lattice spec is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "groups" not in data:
        raise LatticeSpecError("lattice spec must be an object with a 'groups' list")
    groups = []
    for item in data["groups"]:
        if not isinstance(item, dict) or "name" not in item or "predicates" not in item:
            raise LatticeSpecError("each group needs 'name' and 'predicates'")
        preds = tuple(str(p) for p in item["predicates"])
        if not preds:
            raise LatticeSpecError(f"group {item['name']} lists no predicates")
        groups.append((str(item["name"]), preds))
    forbidden = tuple(
        frozenset(str(n) for n in combo) for combo in data.get("forbidden", [])
    )
    names = {name for name, _ in groups}
    if len(names) != len(groups):
        raise LatticeSpecError("duplicate group names in lattice spec")
    for combo in forbidden:
        if not combo <= names:
            raise LatticeSpecError("forbidden combination names an unknown group")
    return LatticeSpec(tuple(groups), forbidden)


def resolve_groups(m: PlanningModel, spec: LatticeSpec) -> list[FluentGroup]:
    """Instantiate spec groups against a model's fluents.

    Members are every model fluent of the listed predicates, plus the
    complement partners of those fluents, so complement pairs always
    project together.
    """
    out = []
    for name, preds in spec.groups:
        wanted = set(preds)
        members: set[int] = set()
        for fid in m.fluents:
            if m.table.fluent(fid).name in wanted:
                members.add(fid)
        for fid in list(members):
            partner = m.table.complement(fid)
            if partner is not None and partner in m.fluents:
                members.add(partner)
        if not members:
            raise LatticeSpecError(f"group {name} matches no fluents of the model")
        out.append(FluentGroup(name, frozenset(members)))
    return out
