#!/usr/bin/env python3
"""Run the bundled examples end to end and print the human reports."""

import sys
import time
from pathlib import Path

from noplan.abstraction import load_lattice_spec
from noplan.explain import explain, render
from noplan.pddl import ground, parse_model

INSTANCES = Path(__file__).resolve().parent.parent / "instances"

CASES = [
    ("minirover", None),
    ("rover_grid", None),
    ("blocksworld", "advice.json"),
    ("logistics", "advice.json"),
]


def main() -> int:
    for name, advice_file in CASES:
        base = INSTANCES / name
        model = ground(parse_model((base / "domain.pddl").read_text(),
                                   (base / "problem.pddl").read_text()))
        spec = load_lattice_spec((base / "lattice.json").read_text())
        advice = (base / advice_file).read_text() if advice_file else None
        started = time.monotonic()
        explanation = explain(model, spec, advice)
        elapsed = time.monotonic() - started
        print(f"=== {name}  ({elapsed:.2f}s)")
        print(render(explanation, "human"))
        print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
