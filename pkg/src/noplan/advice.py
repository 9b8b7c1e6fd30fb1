"""Plan advice as finite automata, and the constrained-model compilation.

Advice items (templates or explicit automata) become nondeterministic
finite automata over action labels and state-formula guards. Guards are
optional epsilon moves: a run may fire one whenever its formula holds in
the current trace state. Safety templates (never-holds, before) force
the check by alternation: action moves are only available from a state
that a fresh guard certification just reached, so a run that cannot
certify dies. Negated conditions inside templates are expressed through
complement fluents, which the compilation materializes and maintains.

Composing an automaton with a model yields a model whose plans are, up
to bookkeeping steps, exactly the base plans the automaton accepts: one
copy of each base action per automaton transition carrying its label,
pure guard-step actions per guard disjunct, and an accept step that sets
a fresh goal fluent from any accepting state. Every move clears the
accept fluent again, so the accept step is only useful last.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass

from .errors import AdviceError, InvalidPlanError
from .model import (
    Action,
    DnfFormula,
    Effect,
    PlanningModel,
    holds_closed_world,
    normalize_dnf,
    validate_plan,
)
from .pddl import parse_ground_formula

logger = logging.getLogger(__name__)

GOAL_ACCEPT = "goal-accept"

TEMPLATES = (
    "never-use-action",
    "use-action-eventually",
    "eventually-holds",
    "never-holds",
    "before",
    "action-count-at-most",
)


@dataclass(frozen=True)
class ActionLabel:
    name: str


@dataclass(frozen=True)
class GuardLabel:
    formula: DnfFormula


@dataclass(frozen=True)
class Transition:
    source: str
    label: ActionLabel | GuardLabel
    target: str


@dataclass(frozen=True)
class ConstraintFsa:
    states: frozenset[str]
    initial: str
    accepting: frozenset[str]
    transitions: tuple[Transition, ...]

    def __post_init__(self) -> None:
        if self.initial not in self.states:
            raise AdviceError("initial state is not a state")
        if not self.accepting <= self.states:
            raise AdviceError("accepting set contains unknown states")
        for t in self.transitions:
            if t.source not in self.states or t.target not in self.states:
                raise AdviceError("transition endpoint is not a state")

    def _label_reachable(self) -> frozenset[str]:
        seen = {self.initial}
        frontier = [self.initial]
        while frontier:
            s = frontier.pop()
            for t in self.transitions:
                if t.source == s and t.target not in seen:
                    seen.add(t.target)
                    frontier.append(t.target)
        return frozenset(seen)

    def warn_unreachable_accepting(self) -> None:
        reach = self._label_reachable()
        dead = self.accepting - reach
        if dead:
            logger.warning("accepting states %s are unreachable", sorted(dead))

    def action_moves(self, states: set[str], name: str) -> set[str]:
        return {
            t.target
            for t in self.transitions
            if t.source in states and isinstance(t.label, ActionLabel) and t.label.name == name
        }

    def guard_transitions(self):
        return [t for t in self.transitions if isinstance(t.label, GuardLabel)]


def universal_fsa(m: PlanningModel) -> ConstraintFsa:
    """Single accepting state with self-loops on every action: no constraint."""
    loops = tuple(Transition("s0", ActionLabel(a.name), "s0") for a in m.actions)
    return ConstraintFsa(frozenset({"s0"}), "s0", frozenset({"s0"}), loops)


def _negate_to_complements(m: PlanningModel, formula: DnfFormula) -> DnfFormula:
    """not-formula as positive DNF over complement fluents.

    The negation of a DNF is the cross product of per-disjunct negated
    literals; each negated literal is the complement fluent of its atom.
    """
    disjunct_lists = [sorted(d) for d in formula.sorted_disjuncts()]
    out = []
    for picks in itertools.product(*disjunct_lists):
        out.append({m.table.ensure_complement(p) for p in picks})
    return DnfFormula.build(out)


def _and_formulas(a: DnfFormula, b: DnfFormula) -> DnfFormula:
    return DnfFormula.build(
        [set(x) | set(y) for x in a.disjuncts for y in b.disjuncts]
    )


def _check_action(m: PlanningModel, name: str) -> str:
    if not m.has_action(name):
        raise AdviceError(f"advice references unknown action {name}")
    return name


def _loops(state: str, names) -> list[Transition]:
    return [Transition(state, ActionLabel(n), state) for n in names]


def never_use_action(m: PlanningModel, action: str) -> ConstraintFsa:
    _check_action(m, action)
    others = [a.name for a in m.actions if a.name != action]
    return ConstraintFsa(
        frozenset({"s0"}), "s0", frozenset({"s0"}), tuple(_loops("s0", others))
    )


def use_action_eventually(m: PlanningModel, action: str) -> ConstraintFsa:
    _check_action(m, action)
    names = [a.name for a in m.actions]
    trans = _loops("s0", (n for n in names if n != action))
    trans.append(Transition("s0", ActionLabel(action), "s1"))
    trans += _loops("s1", names)
    return ConstraintFsa(frozenset({"s0", "s1"}), "s0", frozenset({"s1"}), tuple(trans))


def eventually_holds(m: PlanningModel, formula: DnfFormula) -> ConstraintFsa:
    names = [a.name for a in m.actions]
    trans = _loops("s0", names) + _loops("s1", names)
    trans.append(Transition("s0", GuardLabel(formula), "s1"))
    return ConstraintFsa(frozenset({"s0", "s1"}), "s0", frozenset({"s1"}), tuple(trans))


def never_holds(m: PlanningModel, formula: DnfFormula) -> ConstraintFsa:
    """Alternation forces certifying not-formula at every trace state."""
    neg = _negate_to_complements(m, formula)
    names = [a.name for a in m.actions]
    trans = [Transition("chk", GuardLabel(neg), "go")]
    trans += [Transition("go", ActionLabel(n), "chk") for n in names]
    return ConstraintFsa(frozenset({"chk", "go"}), "chk", frozenset({"go"}), tuple(trans))


def before(m: PlanningModel, first: DnfFormula, second: DnfFormula) -> ConstraintFsa:
    """first must hold at some state strictly before second first holds."""
    not_second = _negate_to_complements(m, second)
    witness = _and_formulas(first, not_second)
    names = [a.name for a in m.actions]
    trans = [
        Transition("chk", GuardLabel(not_second), "go"),
        Transition("chk", GuardLabel(witness), "free"),
    ]
    trans += [Transition("go", ActionLabel(n), "chk") for n in names]
    trans += _loops("free", names)
    return ConstraintFsa(
        frozenset({"chk", "go", "free"}), "chk", frozenset({"go", "free"}), tuple(trans)
    )


def action_count_at_most(m: PlanningModel, action: str, count: int) -> ConstraintFsa:
    _check_action(m, action)
    if count < 0:
        raise AdviceError("action-count-at-most needs a count >= 0")
    names = [a.name for a in m.actions]
    states = [f"c{i}" for i in range(count + 1)]
    trans: list[Transition] = []
    for i, s in enumerate(states):
        trans += _loops(s, (n for n in names if n != action))
        if i < count:
            trans.append(Transition(s, ActionLabel(action), states[i + 1]))
    return ConstraintFsa(frozenset(states), "c0", frozenset(states), tuple(trans))


def _parse_formula(m: PlanningModel, text: str) -> DnfFormula:
    return normalize_dnf(parse_ground_formula(text, m))


def parse_advice(text: str, m: PlanningModel) -> ConstraintFsa:
    """Load an advice file and fold its items into one automaton."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AdviceError(f"advice file is not valid JSON: {exc}") from exc
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list):
        raise AdviceError("advice must be a list of items")
    fsa = universal_fsa(m)
    for item in data:
        piece = _parse_item(item, m)
        piece.warn_unreachable_accepting()
        fsa = fsa_product(fsa, piece)
    return fsa


def _parse_item(item, m: PlanningModel) -> ConstraintFsa:
    if not isinstance(item, dict):
        raise AdviceError("each advice item must be an object")
    if "fsa" in item:
        return _parse_explicit_fsa(item["fsa"], m)
    template = item.get("template", item.get("type"))
    if template is None:
        raise AdviceError("advice item needs a 'template' (or explicit 'fsa')")
    if template == "never-use-action":
        return never_use_action(m, _str_arg(item, "action"))
    if template == "use-action-eventually":
        return use_action_eventually(m, _str_arg(item, "action"))
    if template == "eventually-holds":
        return eventually_holds(m, _parse_formula(m, _str_arg(item, "formula")))
    if template == "never-holds":
        return never_holds(m, _parse_formula(m, _str_arg(item, "formula")))
    if template == "before":
        return before(
            m,
            _parse_formula(m, _str_arg(item, "first")),
            _parse_formula(m, _str_arg(item, "second")),
        )
    if template == "action-count-at-most":
        count = item.get("count")
        if not isinstance(count, int):
            raise AdviceError("action-count-at-most needs an integer 'count'")
        return action_count_at_most(m, _str_arg(item, "action"), count)
    raise AdviceError(f"unknown advice template {template!r}")


def _str_arg(item: dict, key: str) -> str:
    value = item.get(key)
    if not isinstance(value, str):
        raise AdviceError(f"advice item is missing string argument {key!r}")
    return value


def _parse_explicit_fsa(data, m: PlanningModel) -> ConstraintFsa:
    if not isinstance(data, dict):
        raise AdviceError("'fsa' must be an object")
    try:
        states = frozenset(str(s) for s in data["states"])
        initial = str(data["initial"])
        accepting = frozenset(str(s) for s in data["accepting"])
        raw_transitions = data["transitions"]
    except KeyError as exc:
        raise AdviceError(f"fsa is missing field {exc}") from exc
    for s in states:
        if not all(c.isalnum() or c in "-_" for c in s) or not s:
            raise AdviceError(f"state name {s!r} must be alphanumeric with - or _")
    transitions = []
    for t in raw_transitions:
        label = t.get("label", {})
        if "action" in label:
            transitions.append(
                Transition(str(t["from"]), ActionLabel(_check_action(m, label["action"])),
                           str(t["to"]))
            )
        elif "formula" in label:
            transitions.append(
                Transition(str(t["from"]), GuardLabel(_parse_formula(m, label["formula"])),
                           str(t["to"]))
            )
        else:
            raise AdviceError("transition label needs 'action' or 'formula'")
    return ConstraintFsa(states, initial, accepting, tuple(transitions))


def fsa_product(a: ConstraintFsa, b: ConstraintFsa) -> ConstraintFsa:
    """Synchronous product: action labels pair up, guards interleave."""

    def name(p: str, q: str) -> str:
        return f"{p}__{q}"

    transitions: list[Transition] = []
    for ta in a.transitions:
        if isinstance(ta.label, ActionLabel):
            for tb in b.transitions:
                if isinstance(tb.label, ActionLabel) and tb.label.name == ta.label.name:
                    transitions.append(
                        Transition(name(ta.source, tb.source), ta.label,
                                   name(ta.target, tb.target))
                    )
        else:
            for q in sorted(b.states):
                transitions.append(
                    Transition(name(ta.source, q), ta.label, name(ta.target, q))
                )
    for tb in b.transitions:
        if isinstance(tb.label, GuardLabel):
            for p in sorted(a.states):
                transitions.append(
                    Transition(name(p, tb.source), tb.label, name(p, tb.target))
                )

    initial = name(a.initial, b.initial)
    states = {name(p, q) for p in a.states for q in b.states}
    accepting = {name(p, q) for p in a.accepting for q in b.accepting}

    # trim to label-level reachable states to keep products small
    seen = {initial}
    frontier = [initial]
    while frontier:
        s = frontier.pop()
        for t in transitions:
            if t.source == s and t.target not in seen:
                seen.add(t.target)
                frontier.append(t.target)
    transitions = [t for t in transitions if t.source in seen and t.target in seen]
    return ConstraintFsa(
        frozenset(seen), initial, frozenset(accepting & seen), tuple(transitions)
    )


def _guard_closure(fsa: ConstraintFsa, states: set[str], trace_state,
                   table) -> set[str]:
    out = set(states)
    changed = True
    while changed:
        changed = False
        for t in fsa.guard_transitions():
            if t.source in out and t.target not in out:
                if holds_closed_world(table, trace_state, t.label.formula):
                    out.add(t.target)
                    changed = True
    return out


def accepts(fsa: ConstraintFsa, plan, m: PlanningModel) -> bool:
    """True when some run over the plan's actions ends accepting.

    Guard transitions are taken as optional epsilon moves whenever their
    formula holds in the current trace state; the subset construction
    below covers every firing schedule at once.
    """
    trace = validate_plan(m, plan)
    if not trace.valid:
        raise InvalidPlanError("accepts() needs a plan that is valid in the model")
    current = _guard_closure(fsa, {fsa.initial}, trace.states[0], m.table)
    for i, name in enumerate(trace.plan):
        current = fsa.action_moves(current, name)
        if not current:
            return False
        current = _guard_closure(fsa, current, trace.states[i + 1], m.table)
    return bool(current & fsa.accepting)


@dataclass(frozen=True)
class ConstrainedModel:
    base: PlanningModel
    fsa: ConstraintFsa
    compiled: PlanningModel
    meta_action_map: dict  # compiled name -> (base name | None, Transition | None)


def compose(m: PlanningModel, fsa: ConstraintFsa) -> ConstrainedModel:
    """Compile automaton x model so that plans = accepted base plans."""
    for t in fsa.transitions:
        if isinstance(t.label, ActionLabel):
            _check_action(m, t.label.name)

    table = m.table.clone()

    # materialize complement fluents used by guards but absent from the model
    needed: set[int] = set()
    for t in fsa.guard_transitions():
        for f in t.label.formula.fluents:
            pos = table.positive_of(f)
            if pos is not None and f not in m.fluents:
                if pos not in m.fluents:
                    raise AdviceError(
                        f"guard references {table.canonical(f)} but the model "
                        f"does not contain {table.canonical(pos)}"
                    )
                needed.add(pos)
    fluents = set(m.fluents)
    init = set(m.init)
    base_actions = list(m.actions)
    if needed:
        complements = {p: table.ensure_complement(p) for p in sorted(needed)}
        fluents.update(complements.values())
        for p, n in complements.items():
            if p not in m.init:
                init.add(n)
        maintained = []
        for a in base_actions:
            effects = []
            for e in a.effects:
                adds, dels = set(e.adds), set(e.dels)
                for p, n in complements.items():
                    if p in e.adds:
                        dels.add(n)
                    if p in e.dels:
                        adds.add(n)
                effects.append(Effect(e.condition, frozenset(adds), frozenset(dels)))
            maintained.append(Action(a.name, a.prec, tuple(effects)))
        base_actions = maintained

    in_state = {s: table.intern(f"in-state-{s}") for s in sorted(fsa.states)}
    accept_fluent = table.intern(GOAL_ACCEPT)
    fluents.update(in_state.values())
    fluents.add(accept_fluent)
    init.add(in_state[fsa.initial])

    actions: list[Action] = []
    meta_map: dict = {}

    by_label: dict[str, list[Transition]] = {}
    for t in fsa.transitions:
        if isinstance(t.label, ActionLabel):
            by_label.setdefault(t.label.name, []).append(t)

    for a in base_actions:
        for t in sorted(by_label.get(a.name, ()), key=lambda t: (t.source, t.target)):
            name = f"{a.name}--{t.source}--{t.target}"
            if t.source == t.target:
                swap = Effect(frozenset(), frozenset(), frozenset({accept_fluent}))
            else:
                swap = Effect(
                    frozenset(),
                    frozenset({in_state[t.target]}),
                    frozenset({in_state[t.source], accept_fluent}),
                )
            actions.append(
                Action(name, a.prec | {in_state[t.source]}, a.effects + (swap,))
            )
            meta_map[name] = (a.name, t)

    for t in sorted(fsa.guard_transitions(), key=lambda t: (t.source, t.target)):
        for k, disjunct in enumerate(t.label.formula.sorted_disjuncts()):
            name = f"guard--{t.source}--{t.target}--{k}"
            if t.source == t.target:
                eff = Effect(frozenset(), frozenset(), frozenset({accept_fluent}))
            else:
                eff = Effect(
                    frozenset(),
                    frozenset({in_state[t.target]}),
                    frozenset({in_state[t.source], accept_fluent}),
                )
            actions.append(
                Action(name, frozenset(disjunct) | {in_state[t.source]}, (eff,))
            )
            meta_map[name] = (None, t)

    for s in sorted(fsa.accepting):
        name = f"accept--{s}"
        actions.append(
            Action(name, frozenset({in_state[s]}),
                   (Effect(frozenset(), frozenset({accept_fluent}), frozenset()),))
        )
        meta_map[name] = (None, None)

    goal = frozenset(m.goal | {accept_fluent})
    compiled = PlanningModel(
        table, frozenset(fluents), tuple(actions), frozenset(init), goal
    )
    return ConstrainedModel(m, fsa, compiled, meta_map)


def strip_meta(cm: ConstrainedModel, plan) -> tuple[str, ...]:
    """Map a compiled plan back to base action names, dropping pure meta steps."""
    trace = validate_plan(cm.compiled, plan)
    if not trace.valid:
        raise InvalidPlanError("strip_meta() needs a plan valid in the compiled model")
    out = []
    for name in trace.plan:
        base_name, _ = cm.meta_action_map[name]
        if base_name is not None:
            out.append(base_name)
    return tuple(out)
