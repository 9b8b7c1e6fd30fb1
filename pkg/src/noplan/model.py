"""Grounded STRIPS-style planning models.

A state is a frozenset of interned fluent ids. A model owns a fluent
table that is shared by every model derived from it (projections and
compilations), so fluent ids stay comparable across a whole model
family. Actions carry a list of conditional effects; a plain action is
a single effect with an empty condition. Effect conditions are always
evaluated on the pre-state, deletes are applied before adds, and adds
win when different effects of the same action conflict.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import (
    FormulaError,
    ModelError,
    PreconditionViolation,
    UnknownActionError,
)

State = frozenset[int]
Plan = tuple[str, ...]


@dataclass(frozen=True)
class Fluent:
    """A ground atom: predicate name plus object arguments."""

    id: int
    name: str
    args: tuple[str, ...] = ()

    @property
    def canonical(self) -> str:
        if not self.args:
            return self.name
        return self.name + "_" + "_".join(self.args)

    @property
    def sexpr(self) -> str:
        if not self.args:
            return f"({self.name})"
        return f"({self.name} {' '.join(self.args)})"


class FluentTable:
    """Interning table for fluents, shared across one model family.

    Ids are dense, assigned in interning order. The table also records
    complement pairs (p, not-p) produced when negative conditions are
    compiled away; complements of a fluent must follow it through
    projections and groups, so the pairing is kept here, next to the ids.
    """

    def __init__(self) -> None:
        self._fluents: list[Fluent] = []
        self._index: dict[tuple[str, tuple[str, ...]], int] = {}
        self._complement: dict[int, int] = {}
        self._negatives: set[int] = set()

    def __len__(self) -> int:
        return len(self._fluents)

    def intern(self, name: str, args: tuple[str, ...] = ()) -> int:
        key = (name, tuple(args))
        fid = self._index.get(key)
        if fid is None:
            fid = len(self._fluents)
            self._fluents.append(Fluent(fid, name, tuple(args)))
            self._index[key] = fid
        return fid

    def get(self, name: str, args: tuple[str, ...] = ()) -> int | None:
        return self._index.get((name, tuple(args)))

    def id_of(self, name: str, args: tuple[str, ...] = ()) -> int:
        fid = self.get(name, args)
        if fid is None:
            raise KeyError(f"unknown fluent ({name} {' '.join(args)})")
        return fid

    def fluent(self, fid: int) -> Fluent:
        return self._fluents[fid]

    def canonical(self, fid: int) -> str:
        return self._fluents[fid].canonical

    def sexpr(self, fid: int) -> str:
        return self._fluents[fid].sexpr

    def fluents(self) -> tuple[Fluent, ...]:
        return tuple(self._fluents)

    def register_complement(self, pos: int, neg: int) -> None:
        self._complement[pos] = neg
        self._complement[neg] = pos
        self._negatives.add(neg)

    def complement(self, fid: int) -> int | None:
        return self._complement.get(fid)

    def positive_of(self, fid: int) -> int | None:
        """The positive partner when fid is a compiled complement, else None."""
        if fid in self._negatives:
            return self._complement[fid]
        return None

    def ensure_complement(self, pos: int) -> int:
        """Return the complement fluent of pos, creating it if needed."""
        existing = self._complement.get(pos)
        if existing is not None:
            return existing
        f = self._fluents[pos]
        neg = self.intern("not-" + f.name, f.args)
        self.register_complement(pos, neg)
        return neg

    def clone(self) -> "FluentTable":
        """Independent copy; existing ids are preserved."""
        other = FluentTable()
        other._fluents = list(self._fluents)
        other._index = dict(self._index)
        other._complement = dict(self._complement)
        other._negatives = set(self._negatives)
        return other


@dataclass(frozen=True)
class Effect:
    """One conditional effect: condition -> adds, deletes."""

    condition: frozenset[int] = frozenset()
    adds: frozenset[int] = frozenset()
    dels: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.adds & self.dels:
            raise ModelError("effect adds and deletes overlap")


@dataclass(frozen=True)
class Action:
    name: str
    prec: frozenset[int]
    effects: tuple[Effect, ...]

    @classmethod
    def simple(cls, name, prec=(), adds=(), dels=()) -> "Action":
        return cls(name, frozenset(prec), (Effect(frozenset(), frozenset(adds), frozenset(dels)),))

    @property
    def adds(self) -> frozenset[int]:
        out: frozenset[int] = frozenset()
        for e in self.effects:
            out |= e.adds
        return out

    @property
    def dels(self) -> frozenset[int]:
        out: frozenset[int] = frozenset()
        for e in self.effects:
            out |= e.dels
        return out


@dataclass(frozen=True)
class PlanningModel:
    """A grounded model: fluents, actions, initial state and goal."""

    table: FluentTable = field(compare=False, repr=False)
    fluents: frozenset[int]
    actions: tuple[Action, ...]
    init: frozenset[int]
    goal: frozenset[int]
    _by_name: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self) -> None:
        if not self.init <= self.fluents:
            raise ModelError("initial state mentions fluents outside the model")
        if not self.goal <= self.fluents:
            raise ModelError("goal mentions fluents outside the model")
        by_name: dict[str, Action] = {}
        for a in self.actions:
            if a.name in by_name:
                raise ModelError(f"duplicate action name {a.name}")
            scope = a.prec
            for e in a.effects:
                scope = scope | e.condition | e.adds | e.dels
            if not scope <= self.fluents:
                raise ModelError(f"action {a.name} mentions fluents outside the model")
            by_name[a.name] = a
        object.__setattr__(self, "_by_name", by_name)

    def action(self, name: str) -> Action:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownActionError(f"unknown action {name}") from None

    def has_action(self, name: str) -> bool:
        return name in self._by_name

    def canonical(self, fid: int) -> str:
        return self.table.canonical(fid)

    def same_content(self, other: "PlanningModel") -> bool:
        """Structural equality by fluent names, usable across tables."""

        def side(tab: FluentTable, m: "PlanningModel"):
            def names(ids):
                return frozenset(tab.canonical(f) for f in ids)

            return (
                names(m.fluents),
                names(m.init),
                names(m.goal),
                tuple(
                    (
                        a.name,
                        names(a.prec),
                        tuple(
                            sorted(
                                (
                                    tuple(sorted(names(e.condition))),
                                    tuple(sorted(names(e.adds))),
                                    tuple(sorted(names(e.dels))),
                                )
                                for e in a.effects
                            )
                        ),
                    )
                    for a in sorted(m.actions, key=lambda a: a.name)
                ),
            )

        return side(self.table, self) == side(other.table, other)


def apply_action(state: State, action: Action) -> State:
    """Successor state of applying action; raises if preconditions fail.

    All effect conditions are tested against the pre-state, then all
    triggered deletes are removed before all triggered adds are applied.
    """
    if not action.prec <= state:
        raise PreconditionViolation(action.name, frozenset(action.prec - state))
    dels: set[int] = set()
    adds: set[int] = set()
    for e in action.effects:
        if e.condition <= state:
            dels |= e.dels
            adds |= e.adds
    if not dels and not adds:
        return state
    return (state - frozenset(dels)) | frozenset(adds)


@dataclass(frozen=True)
class ValidationTrace:
    """Outcome of replaying a plan: either valid, or the first failure.

    failing_index == len(plan) means the plan executed but the final
    state missed the goal; unsatisfied_precondition then holds the
    missing goal fluents.
    """

    status: str  # "valid" | "failed"
    failing_index: int | None
    unsatisfied_precondition: frozenset[int] | None
    states: tuple[State, ...] | None
    plan: Plan

    @property
    def valid(self) -> bool:
        return self.status == "valid"


def validate_plan(m: PlanningModel, plan) -> ValidationTrace:
    """Replay plan from the initial state and report the first failure."""
    plan = tuple(plan)
    states = [m.init]
    state = m.init
    for i, name in enumerate(plan):
        a = m.action(name)
        try:
            state = apply_action(state, a)
        except PreconditionViolation as exc:
            return ValidationTrace("failed", i, exc.missing, tuple(states), plan)
        states.append(state)
    if m.goal <= state:
        return ValidationTrace("valid", None, None, tuple(states), plan)
    return ValidationTrace("failed", len(plan), frozenset(m.goal - state), tuple(states), plan)


@dataclass(frozen=True)
class DnfFormula:
    """Disjunction of conjunctions over fluent ids.

    The empty disjunction is falsum and never holds. Construction via
    build() minimizes by subsumption: a disjunct implied by a smaller
    one is dropped.
    """

    disjuncts: frozenset[frozenset[int]]

    @classmethod
    def build(cls, disjuncts) -> "DnfFormula":
        sets = {frozenset(d) for d in disjuncts}
        minimal = {
            d for d in sets if not any(o < d for o in sets)
        }
        return cls(frozenset(minimal))

    @classmethod
    def atom(cls, fid: int) -> "DnfFormula":
        return cls(frozenset({frozenset({fid})}))

    @property
    def is_false(self) -> bool:
        return not self.disjuncts

    @property
    def fluents(self) -> frozenset[int]:
        out: frozenset[int] = frozenset()
        for d in self.disjuncts:
            out |= d
        return out

    def sorted_disjuncts(self) -> list[tuple[int, ...]]:
        return sorted(tuple(sorted(d)) for d in self.disjuncts)


FALSE = DnfFormula(frozenset())


def normalize_dnf(tree) -> DnfFormula:
    """Convert an and/or tree over fluent ids into minimized DNF.

    Trees are ints (atoms) or tuples ("and", *children) / ("or", *children).
    Negation is rejected: formulas in this package are positive.
    """
    return DnfFormula.build(_dnf_sets(tree))


def _dnf_sets(tree) -> set[frozenset[int]]:
    if isinstance(tree, int):
        return {frozenset({tree})}
    if not isinstance(tree, tuple) or not tree:
        raise FormulaError(f"malformed formula node: {tree!r}")
    op = tree[0]
    kids = tree[1:]
    if op == "not":
        raise FormulaError("negation is not supported in these formulas")
    if op == "or":
        out: set[frozenset[int]] = set()
        for k in kids:
            out |= _dnf_sets(k)
        return out
    if op == "and":
        acc: set[frozenset[int]] = {frozenset()}
        for k in kids:
            nxt: set[frozenset[int]] = set()
            for d in _dnf_sets(k):
                for prev in acc:
                    nxt.add(prev | d)
            acc = nxt
        return acc
    raise FormulaError(f"unknown operator {op!r}")


def holds(state: State, formula: DnfFormula) -> bool:
    """True when some disjunct of formula is contained in state."""
    return any(d <= state for d in formula.disjuncts)


def holds_closed_world(table: FluentTable, state: State, formula: DnfFormula) -> bool:
    """Like holds(), but evaluates compiled complement fluents as 'positive absent'.

    Needed when a formula mentions not-p while the state being inspected
    does not materialize the complement pair.
    """
    for d in formula.disjuncts:
        ok = True
        for f in d:
            pos = table.positive_of(f)
            if pos is not None:
                if pos in state:
                    ok = False
                    break
            elif f not in state:
                ok = False
                break
        if ok:
            return True
    return False


def format_formula(table: FluentTable, formula: DnfFormula) -> str:
    """Readable rendering: 'a & b | c' with canonical fluent names."""
    if formula.is_false:
        return "FALSE"
    parts = []
    for d in formula.sorted_disjuncts():
        if not d:
            return "TRUE"
        parts.append(" & ".join(table.canonical(f) for f in d))
    if len(parts) == 1:
        return parts[0]
    return " | ".join(f"({p})" if " & " in p else p for p in parts)
