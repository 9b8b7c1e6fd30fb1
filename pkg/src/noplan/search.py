"""Solvability decisions and exhaustive plan enumeration.

decide_solvable runs a best-first forward search with duplicate
detection over the (finite) state space. The additive delete-relaxation
heuristic orders expansions but never prunes, so "unsolvable" is exact:
it is only reported once the open list is exhausted. Budgets turn an
undecided search into a resource-exhausted result, never a wrong answer.

enumerate_plans is the brute-force oracle used by the property suite:
it walks every applicable action sequence up to a length bound and
collects exactly the valid plans.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

from .errors import EnumerationBudgetError
from .model import Plan, PlanningModel, State, apply_action

SOLVABLE = "solvable"
UNSOLVABLE = "unsolvable"
EXHAUSTED = "resource-exhausted"


@dataclass(frozen=True)
class SearchLimits:
    max_nodes: int = 10_000_000
    max_seconds: float = 300.0


@dataclass(frozen=True)
class SearchResult:
    status: str  # SOLVABLE | UNSOLVABLE | EXHAUSTED
    plan: Plan | None = None
    detail: str | None = None

    @property
    def solvable(self) -> bool:
        return self.status == SOLVABLE

    @property
    def exhausted(self) -> bool:
        return self.status == EXHAUSTED


def additive_heuristic(m: PlanningModel):
    """Precompile an h_add evaluator for m.

    Returns a callable state -> float estimating remaining cost under
    the delete relaxation; math.inf when the goal is relaxed-unreachable.
    """
    acts = []
    for a in m.actions:
        effs = [(tuple(e.condition), tuple(e.adds)) for e in a.effects if e.adds]
        if effs:
            acts.append((tuple(a.prec), effs))
    goal = tuple(m.goal)

    def h(state: State) -> float:
        cost: dict[int, int] = dict.fromkeys(state, 0)
        changed = True
        while changed:
            changed = False
            for prec, effs in acts:
                base = 0
                for p in prec:
                    c = cost.get(p)
                    if c is None:
                        base = -1
                        break
                    base += c
                if base < 0:
                    continue
                for cond, adds in effs:
                    total = base
                    for p in cond:
                        c = cost.get(p)
                        if c is None:
                            total = -1
                            break
                        total += c
                    if total < 0:
                        continue
                    total += 1
                    for f in adds:
                        old = cost.get(f)
                        if old is None or total < old:
                            cost[f] = total
                            changed = True
        score = 0
        for g in goal:
            c = cost.get(g)
            if c is None:
                return math.inf
            score += c
        return float(score)

    return h


def decide_solvable(m: PlanningModel, limits: SearchLimits | None = None) -> SearchResult:
    """Decide whether m has a valid plan; exact unless a budget trips.

    Tie-breaking is (heuristic value, insertion order), so the returned
    plan is deterministic for a fixed model.
    """
    limits = limits or SearchLimits()
    if m.goal <= m.init:
        return SearchResult(SOLVABLE, ())
    h = additive_heuristic(m)
    deadline = time.monotonic() + limits.max_seconds
    counter = 0
    open_list: list[tuple[float, int, State]] = [(h(m.init), counter, m.init)]
    parent: dict[State, tuple[State, str] | None] = {m.init: None}
    expanded = 0
    while open_list:
        if expanded >= limits.max_nodes:
            return SearchResult(EXHAUSTED, None, f"node budget {limits.max_nodes} reached")
        if time.monotonic() > deadline:
            return SearchResult(EXHAUSTED, None, f"time budget {limits.max_seconds}s reached")
        _, _, state = heapq.heappop(open_list)
        expanded += 1
        for a in m.actions:
            if not a.prec <= state:
                continue
            succ = apply_action(state, a)
            if succ in parent:
                continue
            parent[succ] = (state, a.name)
            if m.goal <= succ:
                return SearchResult(SOLVABLE, _reconstruct(parent, succ))
            counter += 1
            heapq.heappush(open_list, (h(succ), counter, succ))
    return SearchResult(UNSOLVABLE)


def _reconstruct(parent, state) -> Plan:
    steps: list[str] = []
    cur = state
    while True:
        entry = parent[cur]
        if entry is None:
            break
        cur, name = entry
        steps.append(name)
    return tuple(reversed(steps))


def enumerate_plans(m: PlanningModel, max_len: int, max_nodes: int = 2_000_000) -> set[Plan]:
    """All valid plans of length <= max_len, by exhaustive tree walk.

    Distinct action sequences only; loops through repeated states are
    allowed. Raises EnumerationBudgetError past max_nodes tree nodes.
    """
    plans: set[Plan] = set()
    nodes = 0

    def walk(state: State, prefix: list[str]) -> None:
        nonlocal nodes
        if m.goal <= state:
            plans.add(tuple(prefix))
        if len(prefix) == max_len:
            return
        for a in m.actions:
            nodes += 1
            if nodes > max_nodes:
                raise EnumerationBudgetError(f"enumeration exceeded {max_nodes} nodes")
            if a.prec <= state:
                prefix.append(a.name)
                walk(apply_action(state, a), prefix)
                prefix.pop()

    walk(m.init, [])
    return plans


def reachable_states(m: PlanningModel, max_states: int = 1_000_000) -> set[State]:
    """Exhaustive forward reachability; utility for oracles and checks."""
    seen = {m.init}
    frontier = [m.init]
    while frontier:
        state = frontier.pop()
        for a in m.actions:
            if a.prec <= state:
                succ = apply_action(state, a)
                if succ not in seen:
                    if len(seen) >= max_states:
                        raise EnumerationBudgetError(f"more than {max_states} reachable states")
                    seen.add(succ)
                    frontier.append(succ)
    return seen
