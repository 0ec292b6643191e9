"""Explicit reward-enhanced POMDP compiled from a scenario.

States are ``(t, positions, charges, flags)``; only the contamination flags
are hidden from the strategy.  Every step all robots move simultaneously to an
adjacent (or the same) place, no two robots may end up on the same place, and
after the move every occupied room is cleaned while each other room may get
contaminated (at most one new contamination per step).  Once the horizon is
reached or any battery is empty, the only action is ``FIN``, which advances
the clock to ``T`` and then self-loops.
"""

from __future__ import annotations

import enum
import itertools
from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import IO, NamedTuple, Union

import numpy as np

from .scenario import Scenario


class Fin(enum.Enum):
    FIN = "FIN"

    def __repr__(self) -> str:
        return "FIN"

    __str__ = __repr__


FIN = Fin.FIN

# A joint move is the tuple of target place ids, one per robot.
JointMove = tuple[int, ...]
Action = Union[JointMove, Fin]


class ActionUnavailable(ValueError):
    pass


class ModelTooLarge(RuntimeError):
    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"state space exceeds cap: {count} states discovered (cap {cap})")


class ObsState(NamedTuple):
    t: int
    x: tuple[int, ...]
    c: tuple[int, ...]


class State(NamedTuple):
    obs: ObsState
    d: tuple[bool, ...]


class CostTriple(NamedTuple):
    penalty: float
    energy: float
    utilisation: float

    @property
    def total(self) -> float:
        return self.penalty + self.energy + self.utilisation


def _as_obs(s: ObsState | State) -> ObsState:
    return s.obs if isinstance(s, State) else s


def initial_obs(sc: Scenario) -> ObsState:
    return ObsState(0, sc.starts, tuple(r.omega_chg_thres for r in sc.robots))


def initial_state(sc: Scenario) -> State:
    return State(initial_obs(sc), (False,) * sc.m)


def error_or_final(sc: Scenario, s: ObsState | State) -> bool:
    o = _as_obs(s)
    return o.t >= sc.horizon_T or any(ci == 0 for ci in o.c)


@lru_cache(maxsize=4096)
def _joint_moves(sc: Scenario, x: tuple[int, ...]) -> tuple[JointMove, ...]:
    moves = []
    for targets in itertools.product(*(sc.adjacency[xi] for xi in x)):
        if len(set(targets)) != len(targets):
            continue
        if not sc.allow_swaps and any(
            targets[i] == x[j] and targets[j] == x[i] and i != j
            for i in range(len(x)) for j in range(i + 1, len(x))
        ):
            continue
        moves.append(targets)
    return tuple(moves)


def available_actions(sc: Scenario, s: ObsState | State) -> tuple[Action, ...]:
    """Actions enabled in ``s``, joint moves in lexicographic target order."""
    o = _as_obs(s)
    if error_or_final(sc, o):
        return (FIN,)
    return _joint_moves(sc, o.x)


def is_available(sc: Scenario, s: ObsState | State, a: Action) -> bool:
    o = _as_obs(s)
    if error_or_final(sc, o):
        return a is FIN
    if a is FIN or len(a) != sc.k:
        return False
    return a in _joint_moves(sc, o.x)


def _charge_after(sc: Scenario, c: tuple[int, ...], targets: JointMove) -> tuple[int, ...]:
    out = []
    for ci, xi, r in zip(c, targets, sc.robots):
        if sc.room_of_place[xi] < 0:
            out.append(min(ci + r.charge_rate, r.max_charge))
        else:
            out.append(max(ci - r.discharge_rate, 0))
    return tuple(out)


def step_observable(sc: Scenario, o: ObsState, a: Action, check: bool = True) -> ObsState:
    if check and not is_available(sc, o, a):
        raise ActionUnavailable(f"action {a!r} not available at {o}")
    t = min(o.t + 1, sc.horizon_T)
    if a is FIN:
        return ObsState(t, o.x, o.c)
    return ObsState(t, tuple(a), _charge_after(sc, o.c, a))


def cleaned_rooms(sc: Scenario, x: tuple[int, ...]) -> frozenset[int]:
    """Room indices occupied by some robot."""
    return frozenset(sc.room_of_place[p] for p in x if sc.room_of_place[p] >= 0)


def contamination_kernel(sc: Scenario, d: tuple[bool, ...], cleaned: frozenset[int] | set[int]) -> dict[tuple[bool, ...], float]:
    """Distribution of the next flag vector.

    Exactly one of the following happens: room ``j`` (not cleaned) gets
    contaminated with probability ``pr_j``, or nothing happens with the
    remaining mass.  Cleaned rooms are reset in every branch.
    """
    base = tuple(False if j in cleaned else dj for j, dj in enumerate(d))
    out: dict[tuple[bool, ...], float] = {}
    rest = 1.0
    for j, room in enumerate(sc.rooms):
        if j in cleaned or room.pr == 0.0:
            continue
        rest -= room.pr
        nd = base[:j] + (True,) + base[j + 1:]
        out[nd] = out.get(nd, 0.0) + room.pr
    if rest > 1e-15:
        out[base] = out.get(base, 0.0) + rest
    return out


def observable_cost(sc: Scenario, o: ObsState) -> CostTriple:
    """Costs of entering ``o`` that do not depend on the hidden flags."""
    T = sc.horizon_T
    penalty = 0
    for xi, ci, r in zip(o.x, o.c, sc.robots):
        if ci == 0:
            penalty += sc.a_lot
        if o.t == T and (xi != r.start or ci < r.omega_chg_thres):
            penalty += sc.a_lot
    energy = sum(r.max_charge - ci for ci, r in zip(o.c, sc.robots)) if o.t < T else 0
    util = 0
    for xi in o.x:
        j = sc.room_of_place[xi]
        if j >= 0 and sc.rooms[j].utilised(o.t):
            util += sc.a_lot
    return CostTriple(float(penalty), float(energy), float(util))


def step_cost(sc: Scenario, s_next: State) -> CostTriple:
    """Penalty, energy and utilisation cost accrued on entering ``s_next``."""
    base = observable_cost(sc, s_next.obs)
    flags = sc.a_bit * sum(s_next.d)
    return CostTriple(base.penalty + flags, base.energy, base.utilisation)


def transition(sc: Scenario, s: State, a: Action) -> dict[State, float]:
    """Successor distribution ``P(s, a)``."""
    o2 = step_observable(sc, s.obs, a)
    if a is FIN:
        return {State(o2, s.d): 1.0}
    kern = contamination_kernel(sc, s.d, cleaned_rooms(sc, o2.x))
    return {State(o2, d2): p for d2, p in kern.items()}


@dataclass
class Pomdp:
    """Explicit reachable model.

    ``rows[s]`` lists ``(action, dst_indices, probs)`` for each available
    action of state ``s``.  Reward vectors are indexed by state and hold the
    cost of entering that state; action rewards are identically zero.
    """

    scenario: Scenario
    states: list[State]
    index: dict[State, int]
    rows: list[list[tuple[Action, np.ndarray, np.ndarray]]]
    penalties: np.ndarray
    energy: np.ndarray
    utilisation: np.ndarray

    initial: int = 0

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_transitions(self) -> int:
        return sum(len(dst) for row in self.rows for _, dst, _ in row)

    @property
    def n_choices(self) -> int:
        return sum(len(row) for row in self.rows)

    def obs(self, s: int) -> ObsState:
        return self.states[s].obs

    def available(self, s: int) -> list[Action]:
        return [a for a, _, _ in self.rows[s]]

    def kernel(self, s: int, a: Action) -> tuple[np.ndarray, np.ndarray]:
        for b, dst, prob in self.rows[s]:
            if b == a:
                return dst, prob
        raise ActionUnavailable(f"action {a!r} not available in state {s}")

    def action_reward(self, s: int, a: Action) -> float:
        return 0.0

    def dump(self, fh: IO[str]) -> None:
        """Write the model in the plain-text exchange format (see README)."""
        sc = self.scenario
        names = [p.name for p in sc.places]
        fh.write(f"# states {self.n_states} transitions {self.n_transitions}\n")
        fh.write("states\n")
        for i, s in enumerate(self.states):
            o = s.obs
            fh.write(
                f"{i} t={o.t} x={','.join(names[p] for p in o.x)} "
                f"c={','.join(map(str, o.c))} d={''.join('1' if v else '0' for v in s.d)}\n"
            )
        fh.write("transitions\n")
        for i, row in enumerate(self.rows):
            for a, dst, prob in row:
                label = action_label(sc, a)
                for j, p in zip(dst, prob):
                    fh.write(f"{i} {label} {p:.17g} {int(j)}\n")
        fh.write("rewards penalties energy utilisation\n")
        for i in range(self.n_states):
            fh.write(f"{i} {self.penalties[i]:.17g} {self.energy[i]:.17g} {self.utilisation[i]:.17g}\n")


def action_label(sc: Scenario, a: Action) -> str:
    if a is FIN:
        return "fin"
    return "at" + "_".join(sc.places[p].name for p in a)


def build_pomdp(sc: Scenario, max_states: int = 2_000_000) -> Pomdp:
    """Enumerate every state reachable from the initial state."""
    s0 = initial_state(sc)
    states = [s0]
    index = {s0: 0}
    rows: list[list[tuple[Action, np.ndarray, np.ndarray]]] = []
    queue = deque([0])
    while queue:
        i = queue.popleft()
        s = states[i]
        row = []
        for a in available_actions(sc, s):
            dst, prob = [], []
            for s2, p in transition(sc, s, a).items():
                j = index.get(s2)
                if j is None:
                    j = len(states)
                    if j >= max_states:
                        raise ModelTooLarge(j + 1, max_states)
                    index[s2] = j
                    states.append(s2)
                    queue.append(j)
                dst.append(j)
                prob.append(p)
            row.append((a, np.asarray(dst, dtype=np.int64), np.asarray(prob)))
        # BFS pops in index order, so rows line up with states
        rows.append(row)

    costs = np.array([step_cost(sc, s) for s in states], dtype=float).reshape(-1, 3)
    return Pomdp(sc, states, index, rows, costs[:, 0].copy(), costs[:, 1].copy(), costs[:, 2].copy())
