"""Schedule synthesis: minimise expected penalties + energy + utilisation up to ``T``.

The hidden contamination flags never influence positions, charges or which
actions are enabled, so under any strategy the observable run is
deterministic and the strategy reduces to a time-indexed schedule.  The
expected flag penalty is linear in the flags, so the per-room marginals
``p_j = P(flag j set)`` are a sufficient statistic for the belief; they
evolve deterministically with :func:`marginal_update`.

Two solvers are provided:

* :func:`exact_synthesize` - backward induction over ``(t, x, c, tau)`` where
  ``tau_j`` counts steps since room ``j`` was last cleaned.
* :func:`grid_synthesize` - value iteration with each marginal quantised on
  ``{0, 1/g, ..., 1}`` and multilinear interpolation between grid points,
  followed by a greedy forward rollout on the exact marginals.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .pomdp import (
    FIN,
    Action,
    ActionUnavailable,
    CostTriple,
    ObsState,
    available_actions,
    cleaned_rooms,
    initial_obs,
    is_available,
    observable_cost,
    step_observable,
)
from .scenario import Scenario, scenario_hash

# Actions whose values differ by less than this are treated as tied and the
# lexicographically smallest one wins.
TIE_ATOL = 1e-9
TIE_RTOL = 1e-12

DEFAULT_STATE_CAP = 2_000_000


class SolverCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class Strategy:
    schedule: tuple[Action, ...]
    scenario_hash: str = ""
    solver: str = "manual"
    g: int | None = None

    def __len__(self) -> int:
        return len(self.schedule)

    def __getitem__(self, t: int) -> Action:
        return self.schedule[t]

    def __iter__(self):
        return iter(self.schedule)


@dataclass
class SynthResult:
    strategy: Strategy
    value: float
    bound_gap: float = 0.0
    interpolated_value: float | None = None
    seconds: float = 0.0
    breakdown: CostTriple | None = field(default=None, repr=False)


def marginal_update(p: float, pr: float, cleaned: bool) -> float:
    """Probability that a room's flag is set after one contamination step."""
    if cleaned:
        return 0.0
    return p + (1.0 - p) * pr


def _schedule_of(schedule) -> Sequence[Action]:
    return schedule.schedule if isinstance(schedule, Strategy) else schedule


def schedule_cost_breakdown(sc: Scenario, schedule: Strategy | Sequence[Action]) -> CostTriple:
    """Expected (penalty, energy, utilisation) of following ``schedule`` from the initial state."""
    actions = _schedule_of(schedule)
    if len(actions) != sc.horizon_T:
        raise ValueError(f"schedule has {len(actions)} steps, horizon is {sc.horizon_T}")
    prs = [r.pr for r in sc.rooms]
    p = [0.0] * sc.m
    o = initial_obs(sc)
    pen = en = ut = 0.0
    for t, a in enumerate(actions):
        if not is_available(sc, o, a):
            raise ActionUnavailable(f"step {t}: action {a!r} not available at {o}")
        o = step_observable(sc, o, a, check=False)
        if a is not FIN:
            cl = cleaned_rooms(sc, o.x)
            p = [marginal_update(pj, prj, j in cl) for j, (pj, prj) in enumerate(zip(p, prs))]
        c = observable_cost(sc, o)
        pen += c.penalty + sc.a_bit * sum(p)
        en += c.energy
        ut += c.utilisation
    return CostTriple(pen, en, ut)


def expected_schedule_cost(sc: Scenario, schedule: Strategy | Sequence[Action]) -> float:
    """Exact expected total cost of a fixed schedule."""
    return schedule_cost_breakdown(sc, schedule).total


def _pick(qs: Sequence[float]) -> int:
    """Index of the first value within tolerance of the minimum."""
    best = min(qs)
    tol = TIE_ATOL + TIE_RTOL * abs(best)
    for i, q in enumerate(qs):
        if q <= best + tol:
            return i
    raise AssertionError("unreachable")


def _strategy(sc: Scenario, schedule, solver: str, g: int | None = None) -> Strategy:
    return Strategy(tuple(schedule), scenario_hash(sc), solver, g)


# ---------------------------------------------------------------------------
# exact solver


def exact_synthesize(sc: Scenario, max_states: int = DEFAULT_STATE_CAP) -> SynthResult:
    """Optimal schedule by backward induction over ``(t, x, c, tau)``."""
    t0 = time.perf_counter()
    T = sc.horizon_T
    m = sc.m
    prs = [r.pr for r in sc.rooms]
    a_bit = sc.a_bit
    # stay_clean[j][tau] = probability the flag is set tau steps after cleaning
    stay = [[1.0 - (1.0 - pr) ** n for n in range(T + 1)] for pr in prs]

    memo: dict[tuple[ObsState, tuple[int, ...]], tuple[float, int]] = {}
    succ_cache: dict[ObsState, list[tuple[Action, ObsState, float, frozenset[int] | None]]] = {}

    def successors(o: ObsState):
        out = succ_cache.get(o)
        if out is None:
            out = []
            for a in available_actions(sc, o):
                o2 = step_observable(sc, o, a, check=False)
                cl = None if a is FIN else cleaned_rooms(sc, o2.x)
                out.append((a, o2, observable_cost(sc, o2).total, cl))
            succ_cache[o] = out
        return out

    def value(o: ObsState, tau: tuple[int, ...]) -> float:
        if o.t >= T:
            return 0.0
        key = (o, tau)
        hit = memo.get(key)
        if hit is not None:
            return hit[0]
        qs = []
        for a, o2, det, cl in successors(o):
            if cl is None:
                tau2 = tau
            else:
                tau2 = tuple(0 if j in cl else min(tau[j] + 1, T) for j in range(m))
            flags = a_bit * sum(stay[j][tau2[j]] for j in range(m))
            qs.append(det + flags + value(o2, tau2))
        i = _pick(qs)
        memo[key] = (qs[i], i)
        if len(memo) > max_states:
            raise SolverCapExceeded(f"exact DP exceeded {max_states} states")
        return qs[i]

    o = initial_obs(sc)
    tau = (0,) * m
    v0 = value(o, tau)
    schedule = []
    for _ in range(T):
        _, i = memo[(o, tau)]
        a, o2, _, cl = successors(o)[i]
        schedule.append(a)
        if cl is not None:
            tau = tuple(0 if j in cl else min(tau[j] + 1, T) for j in range(m))
        o = o2
    strat = _strategy(sc, schedule, "exact")
    breakdown = schedule_cost_breakdown(sc, strat)
    return SynthResult(strat, v0, 0.0, None, time.perf_counter() - t0, breakdown)


# ---------------------------------------------------------------------------
# observable layer graph shared by the grid solver


@dataclass
class _Layer:
    states: list[ObsState]
    index: dict[ObsState, int]
    # one entry per (state, action); sorted by state then lexicographic action
    src: np.ndarray = None
    dst: np.ndarray = None
    key: np.ndarray = None
    cost: np.ndarray = None
    actions: list[Action] = None
    offsets: np.ndarray = None  # pair range of state i is offsets[i]:offsets[i+1]


def _build_layers(sc: Scenario) -> tuple[list[_Layer], list[frozenset[int] | None]]:
    """Forward-reachable observable states per time step, plus the cleaning keys.

    Key ``None`` stands for ``FIN`` (no contamination step at all).
    """
    T = sc.horizon_T
    keys: list[frozenset[int] | None] = []
    key_id: dict = {}
    o0 = initial_obs(sc)
    layers = [_Layer([o0], {o0: 0})]
    for t in range(T):
        cur = layers[t]
        nxt_states: list[ObsState] = []
        nxt_index: dict[ObsState, int] = {}
        src, dst, kk, cost, acts, offsets = [], [], [], [], [], [0]
        for i, o in enumerate(cur.states):
            for a in available_actions(sc, o):
                o2 = step_observable(sc, o, a, check=False)
                j = nxt_index.get(o2)
                if j is None:
                    j = nxt_index[o2] = len(nxt_states)
                    nxt_states.append(o2)
                cl = None if a is FIN else cleaned_rooms(sc, o2.x)
                kid = key_id.get(cl)
                if kid is None:
                    kid = key_id[cl] = len(keys)
                    keys.append(cl)
                src.append(i)
                dst.append(j)
                kk.append(kid)
                cost.append(observable_cost(sc, o2).total)
                acts.append(a)
            offsets.append(len(src))
        cur.src = np.asarray(src, dtype=np.int64)
        cur.dst = np.asarray(dst, dtype=np.int64)
        cur.key = np.asarray(kk, dtype=np.int64)
        cur.cost = np.asarray(cost, dtype=float)
        cur.actions = acts
        cur.offsets = np.asarray(offsets, dtype=np.int64)
        layers.append(_Layer(nxt_states, nxt_index))
    return layers, keys


def _key_map(sc: Scenario, key: frozenset[int] | None, p: np.ndarray) -> np.ndarray:
    """Apply one step of marginal updates to marginals ``p`` (last axis = room)."""
    if key is None:
        return p
    pr = np.array([r.pr for r in sc.rooms])
    out = p + (1.0 - p) * pr
    for j in key:
        out[..., j] = 0.0
    return out


def _interp_weights(x: np.ndarray, g: int) -> tuple[np.ndarray, np.ndarray]:
    """Lower grid index and upper weight for points ``x`` in [0, 1]."""
    u = np.clip(x, 0.0, 1.0) * g
    lo = np.minimum(np.floor(u + 1e-12).astype(np.int64), g - 1)
    w = np.clip(u - lo, 0.0, 1.0)
    return lo, w


def _interp_matrix(vals: np.ndarray, g: int) -> np.ndarray:
    """(g+1)x(g+1) matrix mapping grid values to their values at ``vals``."""
    lo, w = _interp_weights(vals, g)
    W = np.zeros((len(vals), g + 1))
    rows = np.arange(len(vals))
    W[rows, lo] += 1.0 - w
    W[rows, lo + 1] += w
    return W


def _interp_point(V: np.ndarray, p: np.ndarray, g: int) -> float:
    """Multilinear interpolation of a grid tensor ``V`` (shape (g+1,)*m) at ``p``."""
    lo, w = _interp_weights(p, g)
    arr = V
    for j in range(len(p)):
        arr = (1.0 - w[j]) * arr[lo[j]] + w[j] * arr[lo[j] + 1]
    return float(arr)


def _apply_axes(mats: list[np.ndarray], V: np.ndarray) -> np.ndarray:
    """Apply ``mats[j]`` along grid axis ``j`` of ``V`` (axis 0 is the state axis)."""
    out = V
    for j, W in enumerate(mats):
        out = np.moveaxis(np.tensordot(W, out, axes=([1], [j + 1])), 0, j + 1)
    return out


def grid_synthesize(sc: Scenario, g: int, max_points: int = 50_000_000) -> SynthResult:
    """Fixed-grid approximate synthesis with resolution ``g``."""
    if g < 1:
        raise ValueError("grid resolution must be >= 1")
    t0 = time.perf_counter()
    T, m = sc.horizon_T, sc.m
    layers, keys = _build_layers(sc)
    shape = (g + 1,) * m
    G = (g + 1) ** m
    total = sum(len(L.states) for L in layers) * G
    if total > max_points:
        raise SolverCapExceeded(f"grid value table needs {total} entries (cap {max_points})")

    axis = np.linspace(0.0, 1.0, g + 1)
    pr = np.array([r.pr for r in sc.rooms])
    key_mats, key_flag = [], []
    for key in keys:
        mats, flag = [], np.zeros(shape)
        for j in range(m):
            if key is None:
                vals = axis
            elif j in key:
                vals = np.zeros_like(axis)
            else:
                vals = axis + (1.0 - axis) * pr[j]
            mats.append(_interp_matrix(vals, g))
            bshape = [1] * m
            bshape[j] = g + 1
            flag = flag + vals.reshape(bshape)
        key_mats.append(mats)
        key_flag.append(sc.a_bit * flag)

    V: list[np.ndarray] = [None] * (T + 1)
    V[T] = np.zeros((len(layers[T].states),) + shape)
    for t in range(T - 1, -1, -1):
        L = layers[t]
        Vt = np.full((len(L.states),) + shape, np.inf)
        for kid in np.unique(L.key):
            sel = np.nonzero(L.key == kid)[0]
            # interpolate only the successor rows this key needs
            rows, inv = np.unique(L.dst[sel], return_inverse=True)
            cont = _apply_axes(key_mats[kid], V[t + 1][rows]) + key_flag[kid]
            # sel is sorted, so pairs of the same source are contiguous
            q = cont[inv] + L.cost[sel].reshape((-1,) + (1,) * m)
            srcs = L.src[sel]
            starts = np.r_[0, np.nonzero(np.diff(srcs))[0] + 1]
            mins = np.minimum.reduceat(q, starts, axis=0)
            u = srcs[starts]
            Vt[u] = np.minimum(Vt[u], mins)
        V[t] = Vt

    # greedy rollout on exact marginals
    p = np.zeros(m)
    i = 0
    schedule: list[Action] = []
    v_interp = None
    for t in range(T):
        L = layers[t]
        lo, hi = L.offsets[i], L.offsets[i + 1]
        qs, nexts = [], []
        for e in range(lo, hi):
            p2 = _key_map(sc, keys[L.key[e]], p.copy())
            q = L.cost[e] + sc.a_bit * p2.sum() + _interp_point(V[t + 1][L.dst[e]], p2, g)
            qs.append(q)
            nexts.append(p2)
        b = _pick(qs)
        if t == 0:
            v_interp = qs[b]
        schedule.append(L.actions[lo + b])
        p = nexts[b]
        i = int(L.dst[lo + b])

    strat = _strategy(sc, schedule, "grid", g)
    breakdown = schedule_cost_breakdown(sc, strat)
    value = breakdown.total
    return SynthResult(strat, value, abs(v_interp - value), v_interp, time.perf_counter() - t0, breakdown)
