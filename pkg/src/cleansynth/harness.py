"""Parameter sweeps, schedule files and the sweep plot.

A sweep synthesises one schedule per ``(a_bit, pr, g)`` point on the grid
solver, verifies it against a set of candidate recurrence areas and keeps
the best classification.  Points are independent, so they can be farmed
out to worker processes; records always come back in point order.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .pomdp import FIN, Action
from .scenario import Scenario, parse_scenario, scenario_hash
from .synth import Strategy, grid_synthesize, schedule_cost_breakdown
from .verify import Classification, OmegaSpec, best_lattice_verdict, best_verdict

# weights and per-room probabilities of the reference sweep
SWEEP_A_BITS = (1, 3, 6, 10, 17, 32, 100, 316, 1000, 3162)
SWEEP_PRS = (0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20)
SWEEP_GS = (1, 2, 3, 4)

BUILTINS = ("reduced", "five_rooms_one_robot", "five_rooms_two_robots")

COLOURS = {
    "incorrect": "red",
    "correct-nonrecurrent": "blue",
    "recurrent": "green",
    "error": "gray",
}


def load_builtin(name: str) -> Scenario:
    """One of the bundled scenarios, see ``BUILTINS``."""
    if name not in BUILTINS:
        raise KeyError(f"unknown builtin scenario {name!r}; choose from {', '.join(BUILTINS)}")
    text = resources.files("cleansynth").joinpath("data").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return parse_scenario(text)


def builtin_path(name: str) -> Path:
    return Path(str(resources.files("cleansynth").joinpath("data").joinpath(f"{name}.json")))


# ---------------------------------------------------------------------------
# schedule files


def export_schedule(sc: Scenario, sigma: Strategy | Sequence[Action]) -> str:
    """Schedule table: header ``t,robot_0,...`` and one row per step.

    Row ``t`` names the place each robot moves to at step ``t``; a finishing
    step has ``FIN`` in every robot column.
    """
    schedule = sigma.schedule if isinstance(sigma, Strategy) else tuple(sigma)
    names = [p.name for p in sc.places]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"robot_{i}" for i in range(sc.k)])
    for t, a in enumerate(schedule):
        cells = ["FIN"] * sc.k if a is FIN else [names[p] for p in a]
        w.writerow([t] + cells)
    return buf.getvalue()


def parse_schedule(sc: Scenario, text: str) -> tuple[Action, ...]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ValueError("empty schedule file")
    header = [h.strip() for h in rows[0]]
    expected = ["t"] + [f"robot_{i}" for i in range(sc.k)]
    if header != expected:
        raise ValueError(f"schedule header {header} does not match {expected}")
    out: list[Action] = []
    for n, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != sc.k + 1:
            raise ValueError(f"line {n}: expected {sc.k + 1} cells, got {len(row)}")
        if int(row[0]) != len(out):
            raise ValueError(f"line {n}: step {row[0]} out of order")
        cells = [c.strip() for c in row[1:]]
        if all(c == "FIN" for c in cells):
            out.append(FIN)
        elif "FIN" in cells:
            raise ValueError(f"line {n}: FIN must fill every robot column")
        else:
            try:
                out.append(tuple(sc.place_id(c) for c in cells))
            except KeyError as e:
                raise ValueError(f"line {n}: {e.args[0]}") from None
    return tuple(out)


def schedule_hash(sc: Scenario, sigma: Strategy | Sequence[Action]) -> str:
    return hashlib.sha256(export_schedule(sc, sigma).encode()).hexdigest()[:16]


def meta_path(path: str | Path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".meta.json")


def save_strategy(path: str | Path, sc: Scenario, sigma: Strategy, value: float | None = None) -> None:
    """Write the schedule CSV plus a ``<file>.meta.json`` sidecar."""
    Path(path).write_text(export_schedule(sc, sigma), encoding="utf-8")
    meta = {
        "scenario_hash": sigma.scenario_hash or scenario_hash(sc),
        "solver": sigma.solver,
        "g": sigma.g,
        "value": value,
    }
    meta_path(path).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def load_strategy(path: str | Path, sc: Scenario) -> tuple[Strategy, dict]:
    """Read a schedule and its sidecar (if present).

    Returns the strategy and the metadata dict; a ``scenario_hash`` that
    does not match ``sc`` raises ``ValueError``.
    """
    schedule = parse_schedule(sc, Path(path).read_text(encoding="utf-8"))
    mp = meta_path(path)
    meta = json.loads(mp.read_text(encoding="utf-8")) if mp.exists() else {}
    h = meta.get("scenario_hash")
    if h and h != scenario_hash(sc):
        raise ValueError(f"strategy was synthesised for scenario {h}, not {scenario_hash(sc)}")
    sigma = Strategy(schedule, h or scenario_hash(sc), meta.get("solver", "manual"), meta.get("g"))
    return sigma, meta


def load_omegas(path: str | Path) -> list[OmegaSpec]:
    """Read ω candidates: one ``{"charge": [...], "contamination": [...]}`` object or a list of them."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    items = doc if isinstance(doc, list) else [doc]
    out = []
    for i, it in enumerate(items):
        if not isinstance(it, dict) or set(it) != {"charge", "contamination"}:
            raise ValueError(f"omega entry {i}: expected keys 'charge' and 'contamination'")
        out.append(OmegaSpec(tuple(int(v) for v in it["charge"]), tuple(int(v) for v in it["contamination"])))
    return out


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True, order=True)
class SweepPoint:
    a_bit: int
    pr_uniform: float
    g: int

    def cumulative(self, m: int) -> float:
        return round(m * self.pr_uniform, 12)

    def check(self, sc: Scenario) -> None:
        if self.a_bit < 0:
            raise ValueError("a_bit must be non-negative")
        if self.g < 1:
            raise ValueError("grid resolution must be at least 1")
        if not 0.0 <= self.pr_uniform or sc.m * self.pr_uniform > 1.0 + 1e-12:
            raise ValueError(f"pr {self.pr_uniform} times {sc.m} rooms exceeds 1")


@dataclass(frozen=True)
class SweepRecord:
    point: SweepPoint
    pr_cumulative: float
    classification: str
    energy: float
    synth_seconds: float
    schedule_hash: str
    error: str = field(default="", compare=False)

    @property
    def ok(self) -> bool:
        return not self.error

    def same_outcome(self, other: "SweepRecord") -> bool:
        """Equal up to timing."""
        return (self.point, self.classification, self.energy, self.schedule_hash) == (
            other.point, other.classification, other.energy, other.schedule_hash)


def sweep_grid(
    a_bits: Iterable[int] = SWEEP_A_BITS,
    prs: Iterable[float] = SWEEP_PRS,
    gs: Iterable[int] = SWEEP_GS,
) -> list[SweepPoint]:
    return [SweepPoint(a, p, g) for g in gs for a in a_bits for p in prs]


def run_point(sc: Scenario, point: SweepPoint, omegas: Sequence[OmegaSpec] | None = None) -> SweepRecord:
    """Synthesise, verify and classify one point; failures become error records."""
    cum = point.cumulative(sc.m)
    try:
        point.check(sc)
        inst = sc.with_weights(a_bit=point.a_bit, pr=point.pr_uniform)
        t0 = time.perf_counter()
        res = grid_synthesize(inst, point.g)
        seconds = time.perf_counter() - t0
        sigma = res.strategy
        if omegas is None:
            rep = best_lattice_verdict(inst, sigma)
        else:
            rep = best_verdict(inst, sigma, omegas)
        cls = Classification.INCORRECT if rep is None else rep.classification
        energy = schedule_cost_breakdown(inst, sigma).energy
        return SweepRecord(point, cum, str(cls), float(energy), seconds, schedule_hash(inst, sigma))
    except Exception as e:  # noqa: BLE001 - one bad point must not stop the sweep
        return SweepRecord(point, cum, "error", math.nan, 0.0, "", f"{type(e).__name__}: {e}")


def _run_packed(args) -> SweepRecord:
    return run_point(*args)


def run_sweep(
    sc: Scenario,
    points: Sequence[SweepPoint],
    omegas: Sequence[OmegaSpec] | None = None,
    workers: int = 1,
) -> list[SweepRecord]:
    """Run every point; ``omegas=None`` searches the default ω lattice.

    Records are returned in the order of ``points`` whatever the worker count.
    """
    jobs = [(sc, p, None if omegas is None else tuple(omegas)) for p in points]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_packed(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_packed, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


@dataclass
class SweepSummary:
    counts: dict[int, dict[str, int]]
    min_recurrent_energy: dict[int, float | None]
    errors: int

    @property
    def energy_monotone(self) -> bool:
        """Minimum recurrent energy never increases with g (g without recurrent records are skipped)."""
        vals = [self.min_recurrent_energy[g] for g in sorted(self.min_recurrent_energy)]
        vals = [v for v in vals if v is not None]
        return all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))

    def format(self) -> str:
        lines = [f"{'g':>2} {'incorrect':>9} {'correct':>8} {'recurrent':>9} {'min rec. energy':>16}"]
        for g in sorted(self.counts):
            c = self.counts[g]
            e = self.min_recurrent_energy[g]
            lines.append(
                f"{g:>2} {c.get('incorrect', 0):>9} {c.get('correct-nonrecurrent', 0):>8} "
                f"{c.get('recurrent', 0):>9} {'-' if e is None else f'{e:.3f}':>16}"
            )
        lines.append(f"errors: {self.errors}")
        lines.append(f"min recurrent energy non-increasing in g: {'yes' if self.energy_monotone else 'NO'}")
        return "\n".join(lines)


def sweep_summary(records: Iterable[SweepRecord]) -> SweepSummary:
    counts: dict[int, dict[str, int]] = {}
    best: dict[int, float | None] = {}
    errors = 0
    for r in records:
        g = r.point.g
        counts.setdefault(g, {})
        best.setdefault(g, None)
        counts[g][r.classification] = counts[g].get(r.classification, 0) + 1
        if not r.ok:
            errors += 1
        elif r.classification == "recurrent":
            cur = best[g]
            best[g] = r.energy if cur is None else min(cur, r.energy)
    return SweepSummary(counts, best, errors)


SWEEP_COLUMNS = ("a_bit", "pr_cumulative", "g", "classification", "energy", "seconds", "schedule_hash")


def sweep_to_csv(records: Iterable[SweepRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in records:
        w.writerow([
            r.point.a_bit,
            repr(r.pr_cumulative),
            r.point.g,
            r.classification,
            "" if math.isnan(r.energy) else repr(r.energy),
            f"{r.synth_seconds:.6f}",
            r.schedule_hash,
        ])
    return buf.getvalue()


def sweep_from_csv(text: str, m: int) -> list[SweepRecord]:
    """Parse a sweep table; ``m`` (number of rooms) recovers the per-room probability."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != SWEEP_COLUMNS:
        raise ValueError(f"sweep header must be {','.join(SWEEP_COLUMNS)}")
    out = []
    for row in reader:
        cum = float(row["pr_cumulative"])
        point = SweepPoint(int(row["a_bit"]), round(cum / m, 12), int(row["g"]))
        energy = float(row["energy"]) if row["energy"] else math.nan
        out.append(SweepRecord(point, cum, row["classification"], energy, float(row["seconds"]), row["schedule_hash"]))
    return out


# ---------------------------------------------------------------------------
# plot

_PW, _PH = 260, 220          # panel size
_ML, _MR, _MT, _MB = 48, 12, 28, 40


def _ticks_log(lo: float, hi: float) -> list[float]:
    return [10.0 ** e for e in range(math.floor(lo), math.ceil(hi) + 1) if lo - 1e-9 <= e <= hi + 1e-9]


def emit_plot(records: Sequence[SweepRecord]) -> str:
    """SVG scatter, one panel per g: log a_bit against cumulative probability.

    Red marks incorrect, blue correct but not recurrent, green recurrent
    schedules.  Output is byte-identical for the same set of records.
    """
    if not records:
        raise ValueError("no records to plot")
    recs = sorted(records, key=lambda r: (r.point.g, r.point.a_bit, r.pr_cumulative, r.classification))
    gs = sorted({r.point.g for r in recs})
    lx = [math.log10(r.point.a_bit) if r.point.a_bit > 0 else 0.0 for r in recs]
    x0, x1 = min(lx), max(lx)
    if x1 - x0 < 1e-9:
        x0, x1 = x0 - 0.5, x1 + 0.5
    ys = [r.pr_cumulative for r in recs]
    y0, y1 = 0.0, max(ys) * 1.1 if max(ys) > 0 else 1.0
    pad = 0.04 * (x1 - x0)
    x0, x1 = x0 - pad, x1 + pad

    width = _PW * len(gs)
    height = _PH + 24
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="10">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    iw, ih = _PW - _ML - _MR, _PH - _MT - _MB
    for k, g in enumerate(gs):
        ox = k * _PW

        def px(v: float) -> float:
            return ox + _ML + (v - x0) / (x1 - x0) * iw

        def py(v: float) -> float:
            return _MT + ih - (v - y0) / (y1 - y0) * ih

        out.append(f'<g id="panel-g{g}">')
        out.append(f'<text x="{ox + _ML + iw / 2:.2f}" y="{_MT - 10}" text-anchor="middle" font-size="12">g = {g}</text>')
        out.append(f'<rect x="{ox + _ML}" y="{_MT}" width="{iw}" height="{ih}" fill="none" stroke="black"/>')
        for tv in _ticks_log(x0, x1):
            xx = px(math.log10(tv))
            out.append(f'<line x1="{xx:.2f}" y1="{_MT + ih}" x2="{xx:.2f}" y2="{_MT + ih + 4}" stroke="black"/>')
            out.append(f'<text x="{xx:.2f}" y="{_MT + ih + 15}" text-anchor="middle">{tv:g}</text>')
        for i in range(6):
            yv = y0 + (y1 - y0) * i / 5
            yy = py(yv)
            out.append(f'<line x1="{ox + _ML - 4}" y1="{yy:.2f}" x2="{ox + _ML}" y2="{yy:.2f}" stroke="black"/>')
            out.append(f'<text x="{ox + _ML - 6}" y="{yy + 3:.2f}" text-anchor="end">{yv:.2f}</text>')
        out.append(f'<text x="{ox + _ML + iw / 2:.2f}" y="{_PH - 8}" text-anchor="middle">a_bit (log)</text>')
        out.append(
            f'<text x="{ox + 12}" y="{_MT + ih / 2:.2f}" text-anchor="middle" '
            f'transform="rotate(-90 {ox + 12} {_MT + ih / 2:.2f})">cumulative pr</text>'
        )
        for r, xv in zip(recs, lx):
            if r.point.g != g:
                continue
            colour = COLOURS.get(r.classification, "gray")
            out.append(
                f'<circle cx="{px(xv):.2f}" cy="{py(r.pr_cumulative):.2f}" r="3.5" fill="{colour}" '
                f'class="{r.classification}"/>'
            )
        out.append("</g>")
    lx0 = 8
    for name in ("incorrect", "correct-nonrecurrent", "recurrent"):
        out.append(f'<circle cx="{lx0 + 4}" cy="{_PH + 10}" r="3.5" fill="{COLOURS[name]}"/>')
        out.append(f'<text x="{lx0 + 12}" y="{_PH + 14}">{name}</text>')
        lx0 += 20 + 7 * len(name)
    out.append("</svg>")
    return "\n".join(out) + "\n"
