#!/usr/bin/env python3
"""Regenerate the bundled 5x5 rover grid instance.

The grid is 4-connected except that the edge between c4-5 and the goal
cell c5-5 is removed, so the only way into the goal runs through c5-4,
which is covered in rocks. Projecting the rocks out makes the problem
solvable; soil is a second, irrelevant detail group.
"""

import sys
from pathlib import Path

SIZE = 5
GOAL = (5, 5)
BLOCKED_EDGE = frozenset({(4, 5), (5, 5)})
ROCKS = [(5, 4)]
SOIL = [(2, 2), (3, 4)]

OUT = Path(__file__).resolve().parent.parent / "instances" / "rover_grid"

DOMAIN = """\
; A rover explores a grid. It cannot drive onto cells covered in rocks,
; and it can pick up soil samples where there is soil.
(define (domain rover-grid)
  (:requirements :strips :typing :negative-preconditions)
  (:types cell)
  (:predicates (at-rover ?c - cell)
               (conn ?a - cell ?b - cell)
               (has-rocks ?c - cell)
               (has-soil ?c - cell)
               (have-sample))
  (:action move
    :parameters (?from - cell ?to - cell)
    :precondition (and (at-rover ?from) (conn ?from ?to) (not (has-rocks ?to)))
    :effect (and (at-rover ?to) (not (at-rover ?from))))
  (:action sample-soil
    :parameters (?c - cell)
    :precondition (and (at-rover ?c) (has-soil ?c))
    :effect (and (have-sample) (not (has-soil ?c)))))
"""

LATTICE = """\
{
  "groups": [
    {"name": "rocks", "predicates": ["has-rocks"]},
    {"name": "soil", "predicates": ["has-soil"]}
  ]
}
"""


def cell(x, y):
    return f"c{x}-{y}"


def edges():
    out = []
    for x in range(1, SIZE + 1):
        for y in range(1, SIZE + 1):
            for dx, dy in ((1, 0), (0, 1)):
                nx, ny = x + dx, y + dy
                if nx > SIZE or ny > SIZE:
                    continue
                if frozenset({(x, y), (nx, ny)}) == BLOCKED_EDGE:
                    continue
                out.append(((x, y), (nx, ny)))
                out.append(((nx, ny), (x, y)))
    return out


def problem_text():
    cells = " ".join(cell(x, y) for x in range(1, SIZE + 1) for y in range(1, SIZE + 1))
    init = ["(at-rover c1-1)"]
    init += [f"(conn {cell(*a)} {cell(*b)})" for a, b in edges()]
    init += [f"(has-rocks {cell(*c)})" for c in ROCKS]
    init += [f"(has-soil {cell(*c)})" for c in SOIL]
    lines = [
        "; Rocks on c5-4 block the only approach to the goal cell c5-5.",
        "(define (problem rover-grid-blocked)",
        "  (:domain rover-grid)",
        f"  (:objects {cells} - cell)",
        "  (:init",
    ]
    lines += [f"    {atom}" for atom in init]
    lines.append("  )")
    lines.append(f"  (:goal (and (at-rover {cell(*GOAL)}))))")
    return "\n".join(lines) + "\n"


def main() -> int:
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "domain.pddl").write_text(DOMAIN)
    (OUT / "problem.pddl").write_text(problem_text())
    (OUT / "lattice.json").write_text(LATTICE)
    print(f"wrote {OUT}/domain.pddl, problem.pddl, lattice.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
