"""End-to-end unsolvability explanations.

The pipeline: compile advice into the model when given, confirm the
effective problem is unsolvable, build the abstraction lattice, take the
solvable maximal elements, search for the cheapest group set whose
restoration breaks all of them, then extract landmarks one level up and
scan for the first subgoal that the explanatory level can no longer
achieve. Output is self-verified: the unsolvability claims behind a
non-degenerate explanation are re-checked with fresh searches before the
explanation is returned.

Degenerate cases: a solvable effective model yields a "solvable" report
with a plan; a lattice whose top is already unsolvable yields an
"unsolvable-at-top" report whose failure scan runs directly on the top
node (using the unconstrained model's landmarks when advice caused the
collapse and the base model is solvable, else the goal conjuncts).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace

from .abstraction import (
    AbstractionLattice,
    ExplanatorySet,
    LatticeNode,
    LatticeSpec,
    ModelUpdate,
    build_lattice,
    concretize,
    find_explanatory_fluents,
    minimum_abstraction_set,
    resolve_groups,
)
from .achievability import FailedSubgoal, compile_achievability, final_goal_landmark, first_unachievable
from .advice import ConstrainedModel, compose, parse_advice, strip_meta
from .errors import ModelUnsolvableError, PipelineError, ResourceExhaustedError
from .landmarks import Landmark, LandmarkGraph, extract_landmarks, linearize
from .model import (
    DnfFormula,
    FluentTable,
    Plan,
    PlanningModel,
    ValidationTrace,
    validate_plan,
)
from .pddl import write_domain, write_problem
from .search import SearchLimits, decide_solvable

STATUS_EXPLAINED = "explained"
STATUS_SOLVABLE = "solvable"
STATUS_TOP_UNSOLVABLE = "unsolvable-at-top"

EXEMPLAR_AUTO = "auto"
EXEMPLAR_ALWAYS = "always"
EXEMPLAR_NEVER = "never"


@dataclass(frozen=True)
class Explanation:
    status: str
    table: FluentTable = field(repr=False, compare=False)
    advice_applied: bool = False
    explanatory: ExplanatorySet | None = None
    failed: FailedSubgoal | None = None
    secondary: tuple[FailedSubgoal, ...] = ()
    exemplar: ValidationTrace | None = None
    plan: Plan | None = None

    def __post_init__(self) -> None:
        if self.status == STATUS_EXPLAINED:
            if self.explanatory is None or self.failed is None:
                raise PipelineError(
                    "a non-degenerate explanation needs both the explanatory "
                    "set and the failed subgoal"
                )

    @property
    def degenerate(self) -> str | None:
        if self.status == STATUS_SOLVABLE:
            return "solvable-root"
        if self.status == STATUS_TOP_UNSOLVABLE:
            return "unsolvable-at-top"
        return None


@dataclass(frozen=True)
class ExplanationReport:
    machine: dict
    human: str


def explain(m: PlanningModel, lattice_spec: LatticeSpec, advice_text: str | None = None,
            *, limits: SearchLimits | None = None, exemplar: str = EXEMPLAR_AUTO,
            verify: bool = True, dump_dir: str | None = None) -> Explanation:
    limits = limits or SearchLimits()

    cm: ConstrainedModel | None = None
    effective = m
    if advice_text is not None:
        fsa = parse_advice(advice_text, m)
        cm = compose(m, fsa)
        effective = cm.compiled
        if dump_dir:
            _dump(dump_dir, "constrained", effective)

    root_result = decide_solvable(effective, limits)
    if root_result.exhausted:
        raise ResourceExhaustedError(f"solvability of the concrete model: {root_result.detail}")
    if root_result.solvable:
        plan = strip_meta(cm, root_result.plan) if cm else root_result.plan
        return Explanation(STATUS_SOLVABLE, effective.table,
                           advice_applied=cm is not None, plan=plan)

    groups = resolve_groups(effective, lattice_spec)
    lat = build_lattice(effective, groups, lattice_spec.forbidden, limits)
    lat.root_node.solvable = root_result

    members = minimum_abstraction_set(lat)
    if not members:
        return _explain_top_unsolvable(m, cm, lat, limits, dump_dir)

    explanatory = find_explanatory_fluents(lat, members)

    failures: list[FailedSubgoal] = []
    targets: list[LatticeNode] = []
    for node in members:
        graph = extract_landmarks(node.model, check_solvable=False, limits=limits)
        sequence = linearize(graph)
        target = concretize(lat, node, explanatory.groups & node.projected)
        failed = first_unachievable(target.model, graph, sequence, limits)
        failures.append(replace(failed, level=target))
        targets.append(target)
        if dump_dir:
            extended, pseudo = final_goal_landmark(target.model, graph)
            lm = pseudo if failed.is_final_goal else failed.landmark
            _dump(dump_dir, f"subgoal-{lm.id}", compile_achievability(target.model, extended, lm))

    headline = failures[0]
    exemplar_trace = _exemplar(lat, members[0], targets[0], headline, explanatory,
                               exemplar, limits)

    if verify:
        _self_verify(lat, members, explanatory, headline, limits)

    return Explanation(
        STATUS_EXPLAINED,
        effective.table,
        advice_applied=cm is not None,
        explanatory=explanatory,
        failed=headline,
        secondary=tuple(failures[1:]),
        exemplar=exemplar_trace,
    )


def _explain_top_unsolvable(base: PlanningModel, cm: ConstrainedModel | None,
                            lat: AbstractionLattice, limits: SearchLimits,
                            dump_dir: str | None) -> Explanation:
    top = lat.node(lat.maximal_projected_sets()[0])
    graph = _top_landmarks(base, cm, top, limits)
    sequence = linearize(graph)
    failed = first_unachievable(top.model, graph, sequence, limits)
    failed = replace(failed, level=top)
    if dump_dir:
        extended, pseudo = final_goal_landmark(top.model, graph)
        lm = pseudo if failed.is_final_goal else failed.landmark
        _dump(dump_dir, f"subgoal-{lm.id}", compile_achievability(top.model, extended, lm))
    return Explanation(
        STATUS_TOP_UNSOLVABLE,
        top.model.table,
        advice_applied=cm is not None,
        failed=failed,
    )


def _top_landmarks(base: PlanningModel, cm: ConstrainedModel | None,
                   top: LatticeNode, limits: SearchLimits) -> LandmarkGraph:
    """Landmark source when even the top abstraction is unsolvable.

    When advice collapsed a solvable base problem, the base model's own
    landmarks (restricted to fluents the top node still has) pinpoint
    which subgoal the advice forbids. Otherwise the goal conjuncts are
    scanned directly.
    """
    if cm is not None and decide_solvable(base, limits).solvable:
        graph = extract_landmarks(base, check_solvable=False, limits=limits)
        keep = [lm for lm in graph.landmarks
                if lm.formula.fluents <= top.model.fluents]
        ids = {lm.id for lm in keep}
        orderings = tuple(o for o in graph.orderings
                          if o.source in ids and o.target in ids)
        if keep:
            return LandmarkGraph(tuple(keep), orderings)
    landmarks = tuple(
        Landmark(i, DnfFormula.atom(g), is_goal_conjunct=True,
                 holds_in_init=g in top.model.init)
        for i, g in enumerate(sorted(top.model.goal))
    )
    return LandmarkGraph(landmarks, ())


def exemplar_failure(abs_node: LatticeNode, conc: PlanningModel,
                     limits: SearchLimits | None = None,
                     restrict_to: frozenset[int] | None = None) -> ValidationTrace:
    """Replay a plan of the abstraction in the concrete model.

    The returned trace carries the first failing step and its missing
    preconditions, narrowed to restrict_to when that keeps any.
    """
    result = abs_node.solvable or decide_solvable(abs_node.model, limits)
    if result.exhausted:
        raise ResourceExhaustedError("exemplar plan search")
    if not result.solvable:
        raise ModelUnsolvableError("exemplar needs a solvable abstraction")
    trace = validate_plan(conc, result.plan)
    if restrict_to and trace.unsatisfied_precondition:
        narrowed = trace.unsatisfied_precondition & restrict_to
        if narrowed:
            trace = replace(trace, unsatisfied_precondition=narrowed)
    return trace


def _exemplar(lat, member, target, headline: FailedSubgoal,
              explanatory: ExplanatorySet, mode: str,
              limits: SearchLimits) -> ValidationTrace | None:
    if mode == EXEMPLAR_NEVER:
        return None
    if mode == EXEMPLAR_AUTO and not _complex_formula(headline.landmark.formula):
        return None
    restrict = frozenset().union(
        *(lat.groups[g].members for g in explanatory.groups)
    ) if explanatory.groups else None
    trace = exemplar_failure(member, target.model, limits, restrict)
    if trace.valid:
        return None
    return trace


def _complex_formula(formula: DnfFormula) -> bool:
    return len(formula.disjuncts) > 1 or any(len(d) > 3 for d in formula.disjuncts)


def _self_verify(lat: AbstractionLattice, members, explanatory: ExplanatorySet,
                 headline: FailedSubgoal, limits: SearchLimits) -> None:
    """Re-check the unsolvability claims behind the explanation from scratch."""
    for node in members:
        target = concretize(lat, node, explanatory.groups & node.projected)
        fresh = decide_solvable(target.model, limits)
        if fresh.exhausted:
            raise ResourceExhaustedError("self-verification of the explanatory level")
        if fresh.solvable:
            raise PipelineError(
                f"restoring {sorted(explanatory.groups)} left node "
                f"{sorted(node.projected)} solvable"
            )
    level: LatticeNode = headline.level
    graph = extract_landmarks(members[0].model, check_solvable=False, limits=limits)
    extended, pseudo = final_goal_landmark(level.model, graph)
    lm = pseudo if headline.is_final_goal else headline.landmark
    compiled = compile_achievability(level.model, extended, lm)
    fresh = decide_solvable(compiled, limits)
    if fresh.exhausted:
        raise ResourceExhaustedError("self-verification of the failed subgoal")
    if fresh.solvable and not headline.is_final_goal:
        raise PipelineError("the reported failed subgoal is achievable after all")


def _dump(directory: str, stem: str, model: PlanningModel) -> None:
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, f"{stem}-domain.pddl"), "w") as fh:
        fh.write(write_domain(model, stem))
        fh.write("\n")
    with open(os.path.join(directory, f"{stem}-problem.pddl"), "w") as fh:
        fh.write(write_problem(model, stem, stem))
        fh.write("\n")


# ---------------------------------------------------------------------------
# Rendering


def _formula_names(table: FluentTable, formula: DnfFormula) -> list[list[str]]:
    return [[table.canonical(f) for f in d] for d in formula.sorted_disjuncts()]


def _failed_dict(table: FluentTable, failed: FailedSubgoal) -> dict:
    level = failed.level
    return {
        "formula": _formula_names(table, failed.landmark.formula),
        "final_goal": failed.is_final_goal,
        "prefix": [_formula_names(table, lm.formula) for lm in failed.achieved_prefix],
        "level": {"projected": sorted(level.projected) if level is not None else []},
    }


def render(e: Explanation, fmt: str):
    """Machine (dict) or human (text) rendering of an explanation."""
    if fmt == "machine":
        return _render_machine(e)
    if fmt == "human":
        return _render_human(e)
    raise ValueError(f"unknown format {fmt!r}")


def build_report(e: Explanation) -> ExplanationReport:
    return ExplanationReport(machine=render(e, "machine"), human=render(e, "human"))


def _render_machine(e: Explanation) -> dict:
    table = e.table
    out: dict = {
        "status": e.status,
        "advice_applied": e.advice_applied,
        "explanatory": None,
        "failed": None,
        "secondary": [],
        "exemplar": None,
        "plan": list(e.plan) if e.plan is not None else None,
    }
    if e.explanatory is not None:
        out["explanatory"] = {
            "groups": sorted(e.explanatory.groups),
            "cost": e.explanatory.cost,
            "updates": [
                {"kind": u.kind, "action": u.action, "fluent": table.canonical(u.fluent)}
                for u in e.explanatory.updates
            ],
        }
    if e.failed is not None:
        out["failed"] = _failed_dict(table, e.failed)
    out["secondary"] = [_failed_dict(table, f) for f in e.secondary]
    if e.exemplar is not None:
        out["exemplar"] = {
            "plan": list(e.exemplar.plan),
            "failing_index": e.exemplar.failing_index,
            "missing": sorted(table.canonical(f)
                              for f in (e.exemplar.unsatisfied_precondition or ())),
        }
    return out


def _formula_text(table: FluentTable, formula: DnfFormula) -> str:
    parts = []
    for d in formula.sorted_disjuncts():
        if not d:
            return "TRUE"
        parts.append(" and ".join(table.canonical(f) for f in d))
    if not parts:
        return "FALSE"
    if len(parts) == 1:
        return parts[0]
    return " or ".join(f"({p})" if " and " in p else p for p in parts)


def _render_human(e: Explanation) -> str:
    table = e.table
    lines: list[str] = []
    if e.status == STATUS_SOLVABLE:
        lines.append("The problem is solvable; there is nothing to explain.")
        if e.plan is not None:
            steps = ", ".join(e.plan) if e.plan else "(empty plan)"
            lines.append(f"Found plan: {steps}")
        if e.advice_applied:
            lines.append("(the given advice was applied)")
        return "\n".join(lines)

    if e.status == STATUS_TOP_UNSOLVABLE:
        lines.append("The problem is unsolvable at every abstraction level of the lattice.")
    else:
        lines.append("The problem is unsolvable.")
    if e.advice_applied:
        lines.append("(the given advice was applied)")

    if e.explanatory is not None:
        groups = ", ".join(sorted(e.explanatory.groups))
        lines.append("")
        lines.append(
            f"Missing detail that makes it unsolvable: group(s) {groups} "
            f"({e.explanatory.cost} model updates)"
        )
        for text in _update_lines(table, e.explanatory.updates):
            lines.append("  " + text)

    if e.failed is not None:
        lines.append("")
        subject = "the goal conjunction" if e.failed.is_final_goal else "this subgoal"
        lines.append(
            f"The following subgoal, required by every solution, cannot be achieved: "
            f"{_formula_text(table, e.failed.landmark.formula)}"
        )
        if e.failed.achieved_prefix:
            prefix = "; ".join(
                _formula_text(table, lm.formula) for lm in e.failed.achieved_prefix
            )
            lines.append(f"  (after achieving: {prefix})")
        if e.failed.is_final_goal:
            lines.append(f"  (every intermediate subgoal stays achievable; {subject} does not)")
        level = e.failed.level
        if level is not None and level.projected:
            lines.append(f"  (at abstraction level: {', '.join(sorted(level.projected))} projected)")

    for extra in e.secondary:
        lines.append(
            f"Also unachievable ({', '.join(sorted(extra.level.projected))} projected): "
            f"{_formula_text(table, extra.landmark.formula)}"
        )

    if e.exemplar is not None:
        lines.append("")
        steps = ", ".join(e.exemplar.plan) if e.exemplar.plan else "(empty plan)"
        missing = ", ".join(sorted(table.canonical(f)
                                   for f in (e.exemplar.unsatisfied_precondition or ())))
        if e.exemplar.failing_index == len(e.exemplar.plan):
            lines.append(
                f"Exemplar failure: the abstract plan [{steps}] executes, "
                f"but the goal still misses: {missing}"
            )
        else:
            step = e.exemplar.plan[e.exemplar.failing_index]
            lines.append(
                f"Exemplar failure: the abstract plan [{steps}] fails at step "
                f"{e.exemplar.failing_index + 1} ({step}); unsatisfied: {missing}"
            )
    return "\n".join(lines)


def _update_lines(table: FluentTable, updates) -> list[str]:
    from .abstraction import (
        ADD_EFFECT_LITERAL,
        DEL_EFFECT_LITERAL,
        EFFECT_CONDITION_LITERAL,
        GOAL_LITERAL,
        INIT_LITERAL,
        PRECONDITION_LITERAL,
    )

    verbs = {
        PRECONDITION_LITERAL: "requires",
        EFFECT_CONDITION_LITERAL: "has effect condition",
        ADD_EFFECT_LITERAL: "adds",
        DEL_EFFECT_LITERAL: "deletes",
    }
    init = [table.canonical(u.fluent) for u in updates if u.kind == INIT_LITERAL]
    goal = [table.canonical(u.fluent) for u in updates if u.kind == GOAL_LITERAL]
    lines = []
    if init:
        lines.append(f"initially: {', '.join(init)}")
    if goal:
        lines.append(f"in the goal: {', '.join(goal)}")
    by_action: dict[str, list[str]] = {}
    for u in updates:
        if u.action is None:
            continue
        by_action.setdefault(u.action, []).append(
            f"{verbs[u.kind]} {table.canonical(u.fluent)}"
        )
    for action in sorted(by_action):
        lines.append(f"action {action}: {'; '.join(by_action[action])}")
    return lines


def parse_machine(data: dict, table: FluentTable) -> Explanation:
    """Rebuild an explanation from its machine rendering.

    Landmark ids and lattice references are not part of the schema, so
    the reconstruction is canonical-form faithful: rendering it again
    reproduces the input dict exactly.
    """
    lookup = {f.canonical: f.id for f in table.fluents()}

    def formula(disjuncts) -> DnfFormula:
        return DnfFormula.build([{lookup[name] for name in d} for d in disjuncts])

    def failed(fd: dict) -> FailedSubgoal:
        prefix = tuple(
            Landmark(-1 - i, formula(d)) for i, d in enumerate(fd.get("prefix", ()))
        )
        return FailedSubgoal(
            landmark=Landmark(-100, formula(fd["formula"])),
            achieved_prefix=prefix,
            is_final_goal=bool(fd.get("final_goal")),
            level=LatticeNode(frozenset(fd["level"]["projected"]), None),
        )

    explanatory = None
    if data.get("explanatory") is not None:
        ed = data["explanatory"]
        ups = tuple(
            ModelUpdate(u["kind"], u["action"], lookup[u["fluent"]])
            for u in ed["updates"]
        )
        explanatory = ExplanatorySet(frozenset(ed["groups"]), ed["cost"], ups)

    exemplar = None
    if data.get("exemplar") is not None:
        xd = data["exemplar"]
        exemplar = ValidationTrace(
            status="failed",
            failing_index=xd["failing_index"],
            unsatisfied_precondition=frozenset(lookup[n] for n in xd["missing"]),
            states=None,
            plan=tuple(xd["plan"]),
        )

    return Explanation(
        status=data["status"],
        table=table,
        advice_applied=bool(data.get("advice_applied")),
        explanatory=explanatory,
        failed=failed(data["failed"]) if data.get("failed") else None,
        secondary=tuple(failed(fd) for fd in data.get("secondary", ())),
        exemplar=exemplar,
        plan=tuple(data["plan"]) if data.get("plan") is not None else None,
    )


def machine_json(e: Explanation) -> str:
    return json.dumps(_render_machine(e), indent=2, sort_keys=True)
