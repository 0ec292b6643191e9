"""Recurrent cleaning-schedule synthesis and verification.

The pipeline: a :class:`Scenario` describes rooms, chargers and robots;
:func:`build_pomdp` enumerates the stochastic model; :func:`grid_synthesize`
or :func:`exact_synthesize` produce a time-indexed schedule; :func:`induce`
replays it in the deterministic counter model and :mod:`cleansynth.verify`
checks the requirements on that single trace.
"""

from .harness import (
    SweepPoint,
    SweepRecord,
    emit_plot,
    export_schedule,
    load_builtin,
    load_strategy,
    parse_schedule,
    run_sweep,
    save_strategy,
    sweep_summary,
)
from .induced import CounterState, Trace, induce, trace_to_csv
from .pomdp import FIN, ActionUnavailable, ModelTooLarge, Pomdp, State, available_actions, build_pomdp, transition
from .scenario import Place, RobotParams, RoomParams, Scenario, load_scenario, parse_scenario, validate
from .synth import (
    Strategy,
    SynthResult,
    exact_synthesize,
    expected_schedule_cost,
    grid_synthesize,
    marginal_update,
)
from .verify import (
    Classification,
    OmegaSpec,
    VerificationReport,
    best_lattice_verdict,
    best_verdict,
    check_recurrence,
    cleaning_visits,
    evaluate_trace,
    omega_lattice,
    without_visit,
    worst_omega_state,
)

__version__ = "0.1.0"
