#!/usr/bin/env python3
"""Timing table for the bundled advice-constrained benchmark instances.

Prints, per instance: lattice size, explanation cost (unique model
updates) and wall-clock runtime of the full pipeline.
"""

import sys
import time
from pathlib import Path

from noplan.abstraction import load_lattice_spec
from noplan.explain import explain
from noplan.pddl import ground, parse_model

INSTANCES = Path(__file__).resolve().parent.parent / "instances"

CASES = [
    ("minirover", None),
    ("rover_grid", None),
    ("blocksworld", "advice.json"),
    ("logistics", "advice.json"),
]


def main() -> int:
    print(f"{'instance':<14} {'lattice':>8} {'cost':>6} {'runtime':>9}  status")
    for name, advice_file in CASES:
        base = INSTANCES / name
        model = ground(parse_model((base / "domain.pddl").read_text(),
                                   (base / "problem.pddl").read_text()))
        spec = load_lattice_spec((base / "lattice.json").read_text())
        advice = (base / advice_file).read_text() if advice_file else None
        started = time.monotonic()
        explanation = explain(model, spec, advice)
        elapsed = time.monotonic() - started
        lattice_size = 2 ** len(spec.groups)
        cost = explanation.explanatory.cost if explanation.explanatory else "-"
        print(f"{name:<14} {lattice_size:>8} {cost!s:>6} {elapsed:>8.2f}s  {explanation.status}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
