"""Walk the reduced four-room scenario through the whole pipeline.

Build the model, synthesise a schedule with the grid solver, check it
against the six requirements and print the induced trace.

    python demos/pipeline_reduced.py [a_bit] [pr_per_room] [g]
"""

import sys

from cleansynth import (
    best_lattice_verdict,
    build_pomdp,
    grid_synthesize,
    induce,
    load_builtin,
    worst_omega_state,
)
from cleansynth.harness import export_schedule
from cleansynth.induced import trace_to_csv


def main(a_bit: int = 316, pr: float = 0.1, g: int = 3) -> None:
    sc = load_builtin("reduced").with_weights(a_bit=a_bit, pr=pr)
    model = build_pomdp(sc)
    print(f"model: {model.n_states} states, {model.n_transitions} transitions")

    res = grid_synthesize(sc, g)
    b = res.breakdown
    print(f"grid g={g}: cost {res.value:.3f} (energy {b.energy:.0f}), "
          f"interpolation gap {res.bound_gap:.3g}, {res.seconds:.2f} s")
    print(export_schedule(sc, res.strategy))

    rep = best_lattice_verdict(sc, res.strategy)
    om = rep.omega
    print(f"best omega: charge {om.charge}, contamination {om.contamination}")
    print(rep.format())

    # the run from the worst omega state, counters included
    print()
    print(trace_to_csv(sc, induce(sc, res.strategy, worst_omega_state(sc, om))))


if __name__ == "__main__":
    args = sys.argv[1:]
    main(int(args[0]) if args else 316, float(args[1]) if len(args) > 1 else 0.1, int(args[2]) if len(args) > 2 else 3)
