"""Problem instances: place graph, robots, rooms, horizon and penalty weights.

A scenario is read from a JSON document (see ``README.md`` for the schema),
checked against its structural invariants by :func:`validate`, and then
consumed read-only by every other module.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Iterable

ROOM = "room"
CHARGER = "charger"

DEFAULT_A_LOT = 10_000_000
DEFAULT_A_BIT = 10_000

# Slack for the sum-of-probabilities check; pr values are usually decimal literals.
PROB_EPS = 1e-12


class ScenarioError(ValueError):
    """Malformed scenario document (syntax, unknown key, missing field, bad type)."""


class ScenarioValidationError(ScenarioError):
    def __init__(self, report: "ValidationReport"):
        self.report = report
        super().__init__("invalid scenario:\n" + report.format())


@dataclass(frozen=True)
class Place:
    id: int
    kind: str
    name: str


@dataclass(frozen=True)
class RoomParams:
    pr: float
    threshold: int
    contamination_rate: int
    omega_cont_thres: int
    util_slots: tuple[tuple[int, int], ...] = ()

    def utilised(self, t: int) -> bool:
        return any(a <= t < b for a, b in self.util_slots)


@dataclass(frozen=True)
class RobotParams:
    start: int
    max_charge: int
    charge_rate: int
    discharge_rate: int
    omega_chg_thres: int


@dataclass(frozen=True)
class Scenario:
    places: tuple[Place, ...]
    edges: frozenset[tuple[int, int]]
    rooms: tuple[RoomParams, ...]
    robots: tuple[RobotParams, ...]
    horizon_T: int
    a_lot: int = DEFAULT_A_LOT
    a_bit: int = DEFAULT_A_BIT
    allow_swaps: bool = True

    def __hash__(self) -> int:
        # hashed on every cached move lookup; the field tuple is deep
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash((self.places, self.edges, self.rooms, self.robots, self.horizon_T, self.a_lot, self.a_bit, self.allow_swaps))
            object.__setattr__(self, "_hash", h)
        return h

    def __reduce__(self):
        # rebuild from fields so cached hashes and properties never cross processes
        return (type(self), (self.places, self.edges, self.rooms, self.robots, self.horizon_T, self.a_lot, self.a_bit, self.allow_swaps))

    @property
    def n_places(self) -> int:
        return len(self.places)

    @property
    def k(self) -> int:
        return len(self.robots)

    @property
    def m(self) -> int:
        return len(self.rooms)

    @cached_property
    def room_places(self) -> tuple[int, ...]:
        """Place id of each room, in room-index order."""
        return tuple(p.id for p in self.places if p.kind == ROOM)

    @cached_property
    def chargers(self) -> tuple[int, ...]:
        return tuple(p.id for p in self.places if p.kind == CHARGER)

    @cached_property
    def room_of_place(self) -> tuple[int, ...]:
        """Room index for each place id, -1 for chargers."""
        out = [-1] * self.n_places
        for j, pid in enumerate(self.room_places):
            out[pid] = j
        return tuple(out)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Sorted neighbour tuple per place, the place itself included."""
        adj: list[set[int]] = [{p} for p in range(self.n_places)]
        for i, j in self.edges:
            if 0 <= i < self.n_places and 0 <= j < self.n_places:
                adj[i].add(j)
                adj[j].add(i)
        return tuple(tuple(sorted(s)) for s in adj)

    @property
    def starts(self) -> tuple[int, ...]:
        return tuple(r.start for r in self.robots)

    def place_id(self, name: str) -> int:
        for p in self.places:
            if p.name == name:
                return p.id
        raise KeyError(f"unknown place {name!r}")

    def with_weights(self, *, a_bit: int | None = None, pr: float | Iterable[float] | None = None) -> "Scenario":
        """Copy with a different flag weight and/or contamination probabilities.

        A scalar ``pr`` is applied to every room.
        """
        sc = self
        if a_bit is not None:
            sc = replace(sc, a_bit=a_bit)
        if pr is not None:
            prs = [float(pr)] * self.m if isinstance(pr, (int, float)) else [float(v) for v in pr]
            if len(prs) != self.m:
                raise ValueError(f"expected {self.m} probabilities, got {len(prs)}")
            sc = replace(sc, rooms=tuple(replace(r, pr=p) for r, p in zip(sc.rooms, prs)))
        return sc


def neighbors(sc: Scenario, p: int) -> frozenset[int]:
    """Places reachable from ``p`` in one step (staying put included)."""
    if not 0 <= p < sc.n_places:
        raise IndexError(f"place id {p} out of range 0..{sc.n_places - 1}")
    return frozenset(sc.adjacency[p])


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, path: str, message: str) -> None:
        self.violations.append(Violation(path, message))

    def messages(self) -> list[str]:
        return [v.message for v in self.violations]

    def format(self) -> str:
        return "\n".join(f"  {v}" for v in self.violations) or "  (no violations)"

    def __len__(self) -> int:
        return len(self.violations)


def validate(sc: Scenario) -> ValidationReport:
    """Check every structural invariant; never raises."""
    rep = ValidationReport()
    n = sc.n_places
    T = sc.horizon_T

    names = set()
    for i, p in enumerate(sc.places):
        if p.id != i:
            rep.add(f"places[{i}].id", "place ids not contiguous")
        if p.kind not in (ROOM, CHARGER):
            rep.add(f"places[{i}].kind", f"unknown place kind {p.kind!r}")
        if p.name in names:
            rep.add(f"places[{i}].name", f"duplicate place name {p.name!r}")
        names.add(p.name)

    for i, j in sorted(sc.edges):
        if not (0 <= i < n and 0 <= j < n):
            rep.add(f"edges[{i},{j}]", "edge endpoint out of range")

    if len(sc.rooms) != len(sc.room_places):
        rep.add("rooms", f"rooms not aligned with room places ({len(sc.rooms)} params for {len(sc.room_places)} rooms)")

    total_pr = 0.0
    for j, r in enumerate(sc.rooms):
        path = f"rooms[{j}]"
        if not 0.0 <= r.pr <= 1.0:
            rep.add(f"{path}.pr", "probability out of range [0, 1]")
        total_pr += r.pr
        if r.threshold <= 0:
            rep.add(f"{path}.threshold", "threshold must be positive")
        if r.contamination_rate <= 0:
            rep.add(f"{path}.contamination_rate", "contamination rate must be positive")
        if not 0 <= r.omega_cont_thres <= max(r.threshold, 0):
            rep.add(f"{path}.omega_cont_thres", "omega contamination bound outside [0, threshold]")
        for s, (a, b) in enumerate(r.util_slots):
            if not 0 <= a < b <= T:
                rep.add(f"{path}.util[{s}]", f"utilisation interval [{a},{b}) out of range")
    if total_pr > 1.0 + PROB_EPS:
        rep.add("rooms", f"probabilities exceed 1 (sum {total_pr:g})")

    if not sc.robots:
        rep.add("robots", "at least one robot required")
    chargers = set(sc.chargers)
    seen: dict[int, int] = {}
    for i, r in enumerate(sc.robots):
        path = f"robots[{i}]"
        if r.start not in chargers:
            rep.add(f"{path}.start", "start is not a charger")
        if r.start in seen:
            rep.add(f"{path}.start", f"distinct start places violated (shared with robots[{seen[r.start]}])")
        seen.setdefault(r.start, i)
        if r.max_charge <= 0:
            rep.add(f"{path}.max_charge", "max charge must be positive")
        if r.charge_rate <= 0:
            rep.add(f"{path}.charge_rate", "charge rate must be positive")
        if r.discharge_rate <= 0:
            rep.add(f"{path}.discharge_rate", "discharge rate must be positive")
        if not 0 <= r.omega_chg_thres <= max(r.max_charge, 0):
            rep.add(f"{path}.omega_chg_thres", "omega charge bound outside [0, max_charge]")
    if sc.k > len(chargers):
        rep.add("robots", f"more robots than chargers ({sc.k} > {len(chargers)})")

    if T <= 1:
        rep.add("horizon_T", "horizon must exceed 1")
    if sc.a_lot < 0:
        rep.add("a_lot", "weight must be non-negative")
    if sc.a_bit < 0:
        rep.add("a_bit", "weight must be non-negative")
    return rep


# ---------------------------------------------------------------------------
# JSON document


_TOP_KEYS = {"places", "edges", "rooms", "robots", "horizon_T", "a_lot", "a_bit", "allow_swaps"}
_TOP_REQUIRED = {"places", "edges", "rooms", "robots", "horizon_T"}
_PLACE_KEYS = {"name", "kind"}
_ROOM_KEYS = {"pr", "threshold", "contamination_rate", "omega_cont_thres", "util"}
_ROOM_REQUIRED = _ROOM_KEYS - {"util"}
_ROBOT_KEYS = {"start", "max_charge", "charge_rate", "discharge_rate", "omega_chg_thres"}


def _check_keys(obj: Any, allowed: set[str], required: set[str], path: str) -> dict:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ScenarioError(f"{path}: unknown key(s) {', '.join(unknown)}")
    missing = sorted(required - set(obj))
    if missing:
        raise ScenarioError(f"{path}: missing required field(s) {', '.join(missing)}")
    return obj


def _int(v: Any, path: str) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ScenarioError(f"{path}: expected an integer, got {v!r}")
    return int(v)


def _num(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{path}: expected a number, got {v!r}")
    return float(v)


def _list(v: Any, path: str) -> list:
    if not isinstance(v, list):
        raise ScenarioError(f"{path}: expected an array")
    return v


def _place_ref(v: Any, names: dict[str, int], path: str) -> int:
    if isinstance(v, str):
        if v not in names:
            raise ScenarioError(f"{path}: unknown place {v!r}")
        return names[v]
    return _int(v, path)


def scenario_from_dict(doc: Any) -> Scenario:
    doc = _check_keys(doc, _TOP_KEYS, _TOP_REQUIRED, "scenario")
    places = []
    for i, p in enumerate(_list(doc["places"], "places")):
        p = _check_keys(p, _PLACE_KEYS, _PLACE_KEYS, f"places[{i}]")
        if not isinstance(p["name"], str) or not isinstance(p["kind"], str):
            raise ScenarioError(f"places[{i}]: name and kind must be strings")
        places.append(Place(i, p["kind"], p["name"]))
    names = {p.name: p.id for p in places}

    edges = set()
    for e, pair in enumerate(_list(doc["edges"], "edges")):
        pair = _list(pair, f"edges[{e}]")
        if len(pair) != 2:
            raise ScenarioError(f"edges[{e}]: expected a pair")
        a, b = (_place_ref(v, names, f"edges[{e}]") for v in pair)
        edges.add((min(a, b), max(a, b)))

    rooms = []
    for j, r in enumerate(_list(doc["rooms"], "rooms")):
        path = f"rooms[{j}]"
        r = _check_keys(r, _ROOM_KEYS, _ROOM_REQUIRED, path)
        slots = []
        for s, iv in enumerate(_list(r.get("util", []), f"{path}.util")):
            iv = _list(iv, f"{path}.util[{s}]")
            if len(iv) != 2:
                raise ScenarioError(f"{path}.util[{s}]: expected [start, end]")
            slots.append((_int(iv[0], f"{path}.util[{s}]"), _int(iv[1], f"{path}.util[{s}]")))
        rooms.append(RoomParams(
            pr=_num(r["pr"], f"{path}.pr"),
            threshold=_int(r["threshold"], f"{path}.threshold"),
            contamination_rate=_int(r["contamination_rate"], f"{path}.contamination_rate"),
            omega_cont_thres=_int(r["omega_cont_thres"], f"{path}.omega_cont_thres"),
            util_slots=tuple(slots),
        ))

    robots = []
    for i, r in enumerate(_list(doc["robots"], "robots")):
        path = f"robots[{i}]"
        r = _check_keys(r, _ROBOT_KEYS, _ROBOT_KEYS, path)
        robots.append(RobotParams(
            start=_place_ref(r["start"], names, f"{path}.start"),
            max_charge=_int(r["max_charge"], f"{path}.max_charge"),
            charge_rate=_int(r["charge_rate"], f"{path}.charge_rate"),
            discharge_rate=_int(r["discharge_rate"], f"{path}.discharge_rate"),
            omega_chg_thres=_int(r["omega_chg_thres"], f"{path}.omega_chg_thres"),
        ))

    allow_swaps = doc.get("allow_swaps", True)
    if not isinstance(allow_swaps, bool):
        raise ScenarioError("allow_swaps: expected a boolean")
    return Scenario(
        places=tuple(places),
        edges=frozenset(edges),
        rooms=tuple(rooms),
        robots=tuple(robots),
        horizon_T=_int(doc["horizon_T"], "horizon_T"),
        a_lot=_int(doc.get("a_lot", DEFAULT_A_LOT), "a_lot"),
        a_bit=_int(doc.get("a_bit", DEFAULT_A_BIT), "a_bit"),
        allow_swaps=allow_swaps,
    )


def parse_scenario(text: str, check: bool = True) -> Scenario:
    """Parse a scenario document.

    With ``check`` (the default) a scenario violating any invariant raises
    :class:`ScenarioValidationError`; pass ``check=False`` to get the raw
    scenario and call :func:`validate` yourself.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"syntax error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    sc = scenario_from_dict(doc)
    if check:
        rep = validate(sc)
        if not rep.ok:
            raise ScenarioValidationError(rep)
    return sc


def load_scenario(path, check: bool = True) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read(), check=check)


def scenario_to_dict(sc: Scenario) -> dict:
    return {
        "places": [{"name": p.name, "kind": p.kind} for p in sc.places],
        "edges": [list(e) for e in sorted(sc.edges)],
        "rooms": [
            {
                "pr": r.pr,
                "threshold": r.threshold,
                "contamination_rate": r.contamination_rate,
                "omega_cont_thres": r.omega_cont_thres,
                "util": [list(s) for s in r.util_slots],
            }
            for r in sc.rooms
        ],
        "robots": [
            {
                "start": r.start,
                "max_charge": r.max_charge,
                "charge_rate": r.charge_rate,
                "discharge_rate": r.discharge_rate,
                "omega_chg_thres": r.omega_chg_thres,
            }
            for r in sc.robots
        ],
        "horizon_T": sc.horizon_T,
        "a_lot": sc.a_lot,
        "a_bit": sc.a_bit,
        "allow_swaps": sc.allow_swaps,
    }


def serialise_scenario(sc: Scenario, indent: int | None = 2) -> str:
    return json.dumps(scenario_to_dict(sc), indent=indent)


def scenario_hash(sc: Scenario) -> str:
    blob = json.dumps(scenario_to_dict(sc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
