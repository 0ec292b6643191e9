"""Requirement checks on the induced trace.

Six requirements are evaluated on the run that starts in the worst state of
a recurrence area ``omega`` (every robot on its start place, every charge at
its omega threshold, every counter at its omega threshold):

====  ===========================================================
FR    every robot is back on its start place at ``T``
ωR    every final charge is at least the robot's omega threshold
ωC    every final counter is at most the room's omega threshold
BC    no battery is ever empty
CT    no counter ever reaches the room's threshold
UT    no robot is inside a room during one of its utilisation slots
====  ===========================================================

Higher charges and lower counters can only help every clause, so passing
from the worst state certifies the whole area.
"""

from __future__ import annotations

import csv
import enum
import io
import itertools
from dataclasses import dataclass
from typing import Iterable

from .induced import CounterState, Trace, induce
from .pomdp import FIN, ActionUnavailable
from .scenario import Scenario
from .synth import Strategy

REQUIREMENTS = ("FR", "ωR", "ωC", "BC", "CT", "UT")
SAFETY = ("FR", "BC", "CT", "UT")


class Classification(str, enum.Enum):
    INCORRECT = "incorrect"
    CORRECT_NONRECURRENT = "correct-nonrecurrent"
    RECURRENT = "recurrent"

    def __str__(self) -> str:
        return self.value

    @property
    def rank(self) -> int:
        return _RANK[self]


_RANK = {Classification.INCORRECT: 0, Classification.CORRECT_NONRECURRENT: 1, Classification.RECURRENT: 2}


@dataclass(frozen=True)
class OmegaSpec:
    charge: tuple[int, ...]
    contamination: tuple[int, ...]

    @classmethod
    def from_scenario(cls, sc: Scenario) -> "OmegaSpec":
        return cls(
            tuple(r.omega_chg_thres for r in sc.robots),
            tuple(r.omega_cont_thres for r in sc.rooms),
        )

    def check(self, sc: Scenario) -> None:
        if len(self.charge) != sc.k or len(self.contamination) != sc.m:
            raise ValueError("omega dimensions do not match the scenario")
        for q, r in zip(self.charge, sc.robots):
            if not 0 <= q <= r.max_charge:
                raise ValueError(f"omega charge {q} outside [0, {r.max_charge}]")
        for q, r in zip(self.contamination, sc.rooms):
            if not 0 <= q <= r.threshold:
                raise ValueError(f"omega contamination {q} outside [0, {r.threshold}]")


@dataclass(frozen=True)
class RequirementResult:
    name: str
    passed: bool
    first_violation_t: int | None = None
    witness: str = ""


@dataclass(frozen=True)
class VerificationReport:
    results: tuple[RequirementResult, ...]
    omega: OmegaSpec | None = None

    def __getitem__(self, name: str) -> RequirementResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def passed(self, name: str) -> bool:
        return self[name].passed

    @property
    def classification(self) -> Classification:
        return classify({r.name: r.passed for r in self.results})

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["requirement", "pass", "first_violation_t", "witness"])
        for r in self.results:
            w.writerow([r.name, str(r.passed).lower(), "" if r.first_violation_t is None else r.first_violation_t, r.witness])
        return buf.getvalue()

    def format(self) -> str:
        lines = [f"{'req':<4} {'result':<6} {'t':>3}  witness"]
        for r in self.results:
            t = "-" if r.first_violation_t is None else str(r.first_violation_t)
            lines.append(f"{r.name:<4} {'pass' if r.passed else 'FAIL':<6} {t:>3}  {r.witness}")
        lines.append(f"classification: {self.classification}")
        return "\n".join(lines)


def classify(passed: dict[str, bool]) -> Classification:
    if not all(passed[n] for n in SAFETY):
        return Classification.INCORRECT
    if all(passed[n] for n in REQUIREMENTS):
        return Classification.RECURRENT
    return Classification.CORRECT_NONRECURRENT


def worst_omega_state(sc: Scenario, omega: OmegaSpec) -> CounterState:
    omega.check(sc)
    return CounterState(0, sc.starts, tuple(omega.charge), tuple(omega.contamination))


def check_requirements(sc: Scenario, trace: Trace, omega: OmegaSpec) -> VerificationReport:
    if trace.states[0] != worst_omega_state(sc, omega):
        raise ValueError("trace does not start at the worst state of omega")
    return evaluate_trace(sc, trace, omega)


def evaluate_trace(sc: Scenario, trace: Trace, omega: OmegaSpec) -> VerificationReport:
    """The six checks on any full-length trace, wherever it starts."""
    T = sc.horizon_T
    names = [p.name for p in sc.places]
    room_name = [sc.places[p].name for p in sc.room_places]
    last = trace.states[-1]
    if last.t != T:
        raise ValueError("trace does not reach the horizon")
    out = []

    bad = [f"robot {i} at {names[x]}" for i, (x, r) in enumerate(zip(last.x, sc.robots)) if x != r.start]
    out.append(RequirementResult("FR", not bad, None if not bad else T, "; ".join(bad)))

    bad = [f"c_{i}={c} < {q}" for i, (c, q) in enumerate(zip(last.c, omega.charge)) if c < q]
    out.append(RequirementResult("ωR", not bad, None if not bad else T, "; ".join(bad)))

    bad = [f"{room_name[j]} d={d} > {q}" for j, (d, q) in enumerate(zip(last.d, omega.contamination)) if d > q]
    out.append(RequirementResult("ωC", not bad, None if not bad else T, "; ".join(bad)))

    out.append(_first(trace, "BC", lambda s: [f"c_{i}=0" for i, c in enumerate(s.c) if c <= 0]))
    out.append(_first(trace, "CT", lambda s: [
        f"{room_name[j]} d={d} >= {r.threshold}" for j, (d, r) in enumerate(zip(s.d, sc.rooms)) if d >= r.threshold
    ]))

    def util(s: CounterState) -> list[str]:
        hits = []
        for i, x in enumerate(s.x):
            j = sc.room_of_place[x]
            if j >= 0 and sc.rooms[j].utilised(s.t):
                hits.append(f"robot {i} in {room_name[j]}")
        return hits

    out.append(_first(trace, "UT", util))
    return VerificationReport(tuple(out), omega)


def _first(trace: Trace, name: str, violations) -> RequirementResult:
    for s in trace.states:
        bad = violations(s)
        if bad:
            return RequirementResult(name, False, s.t, "; ".join(bad))
    return RequirementResult(name, True)


def check_recurrence(sc: Scenario, sigma: Strategy, omega: OmegaSpec) -> VerificationReport:
    """Verify ``sigma`` from the worst state of ``omega``."""
    s0 = worst_omega_state(sc, omega)
    return check_requirements(sc, induce(sc, sigma, s0), omega)


def omega_lattice(
    sc: Scenario,
    charge_fractions: Iterable[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
    contamination_fractions: Iterable[float] = (0.0, 0.25, 0.5),
) -> list[OmegaSpec]:
    """Candidate recurrence areas: every combination of per-robot and per-room fractions.

    Fractions are scaled by ``max_charge`` / ``threshold`` and rounded down.
    """
    cf = sorted(set(charge_fractions))
    df = sorted(set(contamination_fractions))
    charges = [sorted({int(f * r.max_charge) for f in cf}) for r in sc.robots]
    conts = [sorted({int(f * r.threshold) for f in df}) for r in sc.rooms]
    return [
        OmegaSpec(tuple(c), tuple(d))
        for c in itertools.product(*charges)
        for d in itertools.product(*conts)
    ]


def best_verdict(sc: Scenario, sigma: Strategy, omegas: Iterable[OmegaSpec]) -> VerificationReport | None:
    """Best report over the candidates (recurrent > correct > incorrect).

    A candidate from which the schedule cannot be replayed (it finishes early
    although no battery is empty) counts as incorrect.  Returns ``None`` only
    if no candidate could be replayed at all.
    """
    best = None
    for om in omegas:
        try:
            rep = check_recurrence(sc, sigma, om)
        except ActionUnavailable:
            continue
        if best is None or rep.classification.rank > best.classification.rank:
            best = rep
            if rep.classification is Classification.RECURRENT:
                break
    return best


def best_lattice_verdict(
    sc: Scenario,
    sigma: Strategy,
    charge_fractions: Iterable[float] = (0.0, 0.25, 0.5, 0.75, 1.0),
    contamination_fractions: Iterable[float] = (0.0, 0.25, 0.5),
) -> VerificationReport | None:
    """Same answer as ``best_verdict(sc, sigma, omega_lattice(...))``, much faster.

    Positions and charges do not depend on the counters, and each counter
    only depends on its own start value and on the positions, so one trace
    per charge vector settles every room's options independently.
    """
    cf = sorted(set(charge_fractions))
    df = sorted(set(contamination_fractions))
    charges = [sorted({int(f * r.max_charge) for f in cf}) for r in sc.robots]
    conts = [sorted({int(f * r.threshold) for f in df}) for r in sc.rooms]
    T = sc.horizon_T

    best_rank, best_omega = -1, None
    for q in itertools.product(*charges):
        s0 = CounterState(0, sc.starts, tuple(q), tuple(c[0] for c in conts))
        try:
            tr = induce(sc, sigma, s0)
        except ActionUnavailable:
            continue
        last = tr.states[-1]
        safe = (
            last.x == sc.starts
            and all(ci > 0 for s in tr.states for ci in s.c)
            and not any(
                sc.room_of_place[x] >= 0 and sc.rooms[sc.room_of_place[x]].utilised(s.t)
                for s in tr.states for x in s.x
            )
        )
        final_charge = all(c >= qi for c, qi in zip(last.c, q))
        recur_pick, safe_pick = [], []
        for j, (room, cand) in enumerate(zip(sc.rooms, conts)):
            pid = sc.room_places[j]
            occupied = [pid in s.x for s in tr.states[1:]]
            moved = [a is not FIN for a in tr.actions]
            rp = sp = None
            for v in cand:
                d, ok = v, v < room.threshold
                for t in range(T):
                    if moved[t]:
                        d = 0 if occupied[t] else min(d + room.contamination_rate, room.threshold)
                    ok = ok and d < room.threshold
                if ok and sp is None:
                    sp = v
                if ok and d <= v and rp is None:
                    rp = v
            recur_pick.append(rp)
            safe_pick.append(sp)
        if safe and final_charge and all(v is not None for v in recur_pick):
            return check_recurrence(sc, sigma, OmegaSpec(tuple(q), tuple(recur_pick)))
        rank, pick = 0, tuple(c[0] for c in conts)
        if safe and all(v is not None for v in safe_pick):
            rank = 1
            pick = tuple(r if r is not None else s for r, s in zip(recur_pick, safe_pick))
        if rank > best_rank:
            best_rank, best_omega = rank, OmegaSpec(tuple(q), pick)
    if best_omega is None:
        return None
    return check_recurrence(sc, sigma, best_omega)


@dataclass(frozen=True)
class CleaningVisit:
    room: int
    start: int      # first trace index with the room occupied
    end: int        # last such index


def cleaning_visits(sc: Scenario, trace: Trace) -> list[CleaningVisit]:
    """Maximal runs of consecutive trace indices (t >= 1) during which a room is occupied."""
    out = []
    for j, pid in enumerate(sc.room_places):
        run = None
        for t, (s, a) in enumerate(zip(trace.states[1:], trace.actions), start=1):
            occ = a is not FIN and pid in s.x
            if occ and run is None:
                run = t
            if not occ and run is not None:
                out.append(CleaningVisit(j, run, t - 1))
                run = None
        if run is not None:
            out.append(CleaningVisit(j, run, len(trace.states) - 1))
    return sorted(out, key=lambda v: (v.start, v.room))


def without_visit(sc: Scenario, sigma: Strategy, omega: OmegaSpec, visit: CleaningVisit) -> VerificationReport:
    """Report for ``sigma`` from the worst ω state with one cleaning visit knocked out.

    The robots still move as scheduled; the room's counter simply is not
    reset during the visit.
    """
    skip = {t: (visit.room,) for t in range(visit.start, visit.end + 1)}
    tr = induce(sc, sigma, worst_omega_state(sc, omega), skip=skip)
    return evaluate_trace(sc, tr, omega)
