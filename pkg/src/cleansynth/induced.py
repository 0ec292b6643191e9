"""Counter model and the single trace induced by a schedule.

In the counter model each room carries an integer contamination level that
grows by its rate every step (capped at the threshold) and drops to zero
whenever a robot is in the room.  There is no randomness left, so a schedule
applied from a given start state yields exactly one run.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Collection, Mapping, NamedTuple, Sequence

from .pomdp import (
    FIN,
    Action,
    ActionUnavailable,
    ObsState,
    cleaned_rooms,
    error_or_final,
    is_available,
    step_observable,
)
from .scenario import Scenario
from .synth import Strategy


class CounterState(NamedTuple):
    t: int
    x: tuple[int, ...]
    c: tuple[int, ...]
    d: tuple[int, ...]

    @property
    def obs(self) -> ObsState:
        return ObsState(self.t, self.x, self.c)


@dataclass(frozen=True)
class Trace:
    states: tuple[CounterState, ...]
    actions: tuple[Action, ...]

    def __len__(self) -> int:
        return len(self.states)

    def graph_size(self) -> tuple[int, int]:
        """(nodes, edges) of the induced model: the path plus the final self-loop."""
        nodes = len(set(self.states))
        edges = len(self.actions) + 1
        return nodes, edges


def counter_step(sc: Scenario, s: CounterState, a: Action, skip: Collection[int] = ()) -> CounterState:
    """One step of the counter model; rooms in ``skip`` are not reset even if occupied."""
    if not is_available(sc, s.obs, a):
        raise ActionUnavailable(f"action {a!r} not available at {s}")
    o2 = step_observable(sc, s.obs, a, check=False)
    if a is FIN:
        return CounterState(o2.t, o2.x, o2.c, s.d)
    cl = cleaned_rooms(sc, o2.x) - set(skip)
    d2 = tuple(
        0 if j in cl else min(dj + r.contamination_rate, r.threshold)
        for j, (dj, r) in enumerate(zip(s.d, sc.rooms))
    )
    return CounterState(o2.t, o2.x, o2.c, d2)


def induce(
    sc: Scenario,
    sigma: Strategy | Sequence[Action],
    s0: CounterState,
    skip: Mapping[int, Collection[int]] | None = None,
) -> Trace:
    """Run ``sigma`` from ``s0`` in the counter model.

    Once a battery is empty only ``FIN`` can fire, whatever the schedule
    says; this mirrors restricting the move commands to the steps where the
    schedule picks them while leaving the finishing command untouched.
    ``skip`` maps a step index to rooms whose cleaning is ignored on
    entering ``states[t]``; it is used to knock out single visits.
    """
    schedule = sigma.schedule if isinstance(sigma, Strategy) else tuple(sigma)
    if s0.t != 0:
        raise ValueError("trace must start at t=0")
    if len(schedule) != sc.horizon_T:
        raise ValueError(f"schedule has {len(schedule)} steps, horizon is {sc.horizon_T}")
    states = [s0]
    taken = []
    s = s0
    for t, a in enumerate(schedule):
        if error_or_final(sc, s.obs):
            a = FIN
        elif a is FIN:
            raise ActionUnavailable(f"step {t}: schedule finishes early but no battery is empty at {s}")
        s = counter_step(sc, s, a, skip.get(t + 1, ()) if skip else ())
        states.append(s)
        taken.append(a)
    return Trace(tuple(states), tuple(taken))


def trace_to_csv(sc: Scenario, trace: Trace) -> str:
    names = [p.name for p in sc.places]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ["t"]
        + [f"x_{i}" for i in range(sc.k)]
        + [f"c_{i}" for i in range(sc.k)]
        + [f"d_{sc.places[p].name}" for p in sc.room_places]
    )
    for s in trace.states:
        w.writerow([s.t] + [names[p] for p in s.x] + list(s.c) + list(s.d))
    return buf.getvalue()
