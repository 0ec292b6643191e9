import dataclasses
import random

import pytest

from cleansynth.induced import CounterState, counter_step, induce, trace_to_csv
from cleansynth.pomdp import FIN, ActionUnavailable, available_actions, initial_obs, step_observable
from cleansynth.synth import Strategy, grid_synthesize, marginal_update
from conftest import line_scenario
from oracles import random_tiny_scenario


def test_counter_step_examples():
    sc = line_scenario(T=6, threshold=12)
    s = CounterState(0, (0,), (4,), (5, 11))
    nxt = counter_step(sc, s, (1,))
    assert nxt == CounterState(1, (1,), (3,), (0, 12))

    fast = dataclasses.replace(sc, rooms=(sc.rooms[0], dataclasses.replace(sc.rooms[1], contamination_rate=2)))
    assert counter_step(fast, CounterState(0, (0,), (4,), (5, 11)), (0,)).d == (6, 12)


def test_fin_keeps_counters(line1):
    T = line1.horizon_T
    s = CounterState(T, (0,), (4,), (3, 2))
    assert counter_step(line1, s, FIN) == s


def test_unavailable_move(line1):
    with pytest.raises(ActionUnavailable):
        counter_step(line1, CounterState(0, (0,), (4,), (0, 0)), (2,))


def test_early_fin_is_rejected(line1):
    with pytest.raises(ActionUnavailable):
        induce(line1, [FIN] * 4, CounterState(0, (0,), (4,), (0, 0)))


def test_forced_fin_after_battery_death():
    sc = line_scenario(T=5, max_charge=2, charge_rate=2)
    tr = induce(sc, [(1,), (2,), (2,), (1,), (0,)], CounterState(0, (0,), (2,), (0, 0)))
    assert tr.actions[:2] == ((1,), (2,))
    assert all(a is FIN for a in tr.actions[2:])
    assert tr.states[-1].x == (2,) and tr.states[-1].c == (0,)


def test_trace_length_and_graph_size(line2):
    sched = [(1, 2), (0, 3), (1, 2), (0, 3)]
    tr = induce(line2, sched, CounterState(0, (0, 3), (4, 4), (1, 1)))
    assert len(tr) == line2.horizon_T + 1
    nodes, edges = tr.graph_size()
    assert nodes == len(tr.states) and edges == len(tr.actions) + 1


def _walk(sc, rng):
    o = initial_obs(sc)
    out = []
    for _ in range(sc.horizon_T):
        a = rng.choice(available_actions(sc, o))
        out.append(a)
        o = step_observable(sc, o, a)
    return out


def test_counters_bounded_and_reset_on_visit():
    rng = random.Random(5)
    for _ in range(40):
        sc = random_tiny_scenario(rng, m_max=3)
        sched = _walk(sc, rng)
        s0 = CounterState(0, sc.starts, tuple(r.omega_chg_thres for r in sc.robots), (0,) * sc.m)
        tr = induce(sc, sched, s0)
        for s, a in zip(tr.states[1:], tr.actions):
            for j, (d, r) in enumerate(zip(s.d, sc.rooms)):
                assert 0 <= d <= r.threshold
                if a is not FIN and sc.room_places[j] in s.x:
                    assert d == 0


def test_resets_match_marginal_model():
    """The counter trace resets exactly where the belief marginals reset."""
    rng = random.Random(9)
    for _ in range(30):
        sc = random_tiny_scenario(rng, m_max=3)
        sched = _walk(sc, rng)
        s0 = CounterState(0, sc.starts, tuple(r.omega_chg_thres for r in sc.robots), (0,) * sc.m)
        tr = induce(sc, sched, s0)
        p = [0.0] * sc.m
        for s, a in zip(tr.states[1:], tr.actions):
            if a is FIN:
                continue
            for j, r in enumerate(sc.rooms):
                cleaned = sc.room_places[j] in s.x
                p[j] = marginal_update(p[j], r.pr, cleaned)
                assert (s.d[j] == 0) == cleaned
                if cleaned:
                    assert p[j] == 0.0


def test_deterministic(reduced):
    sigma = grid_synthesize(reduced, 2).strategy
    s0 = CounterState(0, reduced.starts, tuple(r.omega_chg_thres for r in reduced.robots), (0,) * reduced.m)
    assert induce(reduced, sigma, s0) == induce(reduced, sigma, s0)


def test_wrong_length_and_start(line1):
    s0 = CounterState(0, (0,), (4,), (0, 0))
    with pytest.raises(ValueError):
        induce(line1, [(0,)] * 3, s0)
    with pytest.raises(ValueError):
        induce(line1, Strategy(((0,),) * 4, ""), s0._replace(t=1))


def test_skip_suppresses_reset(line1):
    s0 = CounterState(0, (0,), (4,), (0, 0))
    sched = [(1,), (0,), (0,), (0,)]
    assert induce(line1, sched, s0).states[1].d == (0, 1)
    assert induce(line1, sched, s0, skip={1: (0,)}).states[1].d == (1, 1)


def test_trace_csv(line2):
    tr = induce(line2, [(1, 2), (0, 3), (0, 3), (0, 3)], CounterState(0, (0, 3), (4, 4), (0, 0)))
    lines = trace_to_csv(line2, tr).splitlines()
    assert lines[0] == "t,x_0,x_1,c_0,c_1,d_R1,d_R2"
    assert lines[1] == "0,C0,C3,4,4,0,0"
    assert lines[2] == "1,R1,R2,3,3,0,0"
    assert len(lines) == line2.horizon_T + 2
