"""Command-line front end.

Exit codes: 0 on success, 1 when a scenario (or another input file) is
invalid, 2 when a verified schedule is not recurrent.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from pathlib import Path

from . import harness
from .harness import BUILTINS, load_builtin
from .induced import induce, trace_to_csv
from .pomdp import ModelTooLarge, build_pomdp
from .scenario import ScenarioError, ScenarioValidationError, load_scenario, validate
from .synth import SolverCapExceeded, exact_synthesize, grid_synthesize
from .verify import Classification, best_lattice_verdict, best_verdict, worst_omega_state

EXIT_OK, EXIT_INVALID, EXIT_VERIFY = 0, 1, 2


class _InputError(Exception):
    pass


def _scenario(ref: str, check: bool = True):
    """A path, or the name of a bundled scenario."""
    if not os.path.exists(ref) and ref in BUILTINS:
        return load_builtin(ref)
    try:
        return load_scenario(ref, check=check)
    except OSError as e:
        raise _InputError(f"cannot read {ref}: {e.strerror}") from None


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def cmd_validate(args) -> int:
    sc = _scenario(args.scenario, check=False)
    rep = validate(sc)
    if rep.ok:
        print(f"ok: {sc.n_places} places, {sc.m} rooms, {sc.k} robots, T={sc.horizon_T}")
        return EXIT_OK
    print("invalid scenario:")
    print(rep.format())
    return EXIT_INVALID


def cmd_build(args) -> int:
    sc = _scenario(args.scenario)
    try:
        model = build_pomdp(sc, max_states=args.max_states)
    except ModelTooLarge as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    print(f"states {model.n_states} transitions {model.n_transitions} choices {model.n_choices}")
    if args.dump:
        if args.dump == "-":
            model.dump(sys.stdout)
        else:
            with open(args.dump, "w", encoding="utf-8") as fh:
                model.dump(fh)
    return EXIT_OK


def cmd_synth(args) -> int:
    sc = _scenario(args.scenario)
    try:
        res = exact_synthesize(sc) if args.exact else grid_synthesize(sc, args.grid)
    except SolverCapExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    text = harness.export_schedule(sc, res.strategy)
    if args.output:
        harness.save_strategy(args.output, sc, res.strategy, res.value)
    else:
        sys.stdout.write(text)
    b = res.breakdown
    print(
        f"# value {res.value:.6f} (penalty {b.penalty:.6f}, energy {b.energy:.6f}, utilisation {b.utilisation:.6f}) "
        f"bound_gap {res.bound_gap:.6g} seconds {res.seconds:.3f}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    sc = _scenario(args.scenario)
    sigma, _ = harness.load_strategy(args.strategy, sc)
    if args.omega:
        omegas = harness.load_omegas(args.omega)
        for om in omegas:
            om.check(sc)
        rep = best_verdict(sc, sigma, omegas)
    else:
        rep = best_lattice_verdict(sc, sigma)
    if rep is None:
        print("schedule cannot be replayed from any candidate omega")
        return EXIT_VERIFY
    om = rep.omega
    print(f"omega: charge {list(om.charge)} contamination {list(om.contamination)}")
    print(rep.format())
    if args.csv:
        Path(args.csv).write_text(rep.to_csv(), encoding="utf-8")
    if args.trace:
        tr = induce(sc, sigma, worst_omega_state(sc, om))
        Path(args.trace).write_text(trace_to_csv(sc, tr), encoding="utf-8")
    return EXIT_OK if rep.classification is Classification.RECURRENT else EXIT_VERIFY


def cmd_sweep(args) -> int:
    sc = _scenario(args.scenario)
    points = harness.sweep_grid(_ints(args.a_bit), _floats(args.pr), _ints(args.g))
    for p in points:
        p.check(sc)
    omegas = harness.load_omegas(args.omega) if args.omega else None
    records = harness.run_sweep(sc, points, omegas, workers=args.workers)
    table = harness.sweep_to_csv(records)
    if args.output:
        Path(args.output).write_text(table, encoding="utf-8")
    else:
        sys.stdout.write(table)
    if args.plot:
        Path(args.plot).write_text(harness.emit_plot(records), encoding="utf-8")
    print(harness.sweep_summary(records).format(), file=sys.stderr)
    for r in records:
        if r.error:
            print(f"point {r.point}: {r.error}", file=sys.stderr)
    return EXIT_OK


def cmd_export(args) -> int:
    """Print a stored schedule as a timeline, one line per robot."""
    rows = list(csv.reader(io.StringIO(Path(args.strategy).read_text(encoding="utf-8"))))
    if not rows or not rows[0] or rows[0][0] != "t":
        raise _InputError(f"{args.strategy}: not a schedule file")
    if args.scenario:
        harness.parse_schedule(_scenario(args.scenario), Path(args.strategy).read_text(encoding="utf-8"))
    header, body = rows[0], [r for r in rows[1:] if r]
    cols = [["t"] + [r[0] for r in body]]
    for i, name in enumerate(header[1:], start=1):
        cols.append([name] + [r[i] for r in body])
    width = max(len(c) for col in cols for c in col)
    for col in cols:
        print(" ".join(c.rjust(width) for c in col))
    return EXIT_OK


def cmd_plot(args) -> int:
    records = harness.sweep_from_csv(Path(args.sweep).read_text(encoding="utf-8"), m=1)
    svg = harness.emit_plot(records)
    if args.output:
        Path(args.output).write_text(svg, encoding="utf-8")
    else:
        sys.stdout.write(svg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cleansynth", description="Synthesise and verify recurrent cleaning schedules.")
    sub = ap.add_subparsers(dest="command", required=True)
    scen_help = f"scenario JSON file or a bundled name ({', '.join(BUILTINS)})"

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario", help=scen_help)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("build", help="enumerate the reachable model")
    p.add_argument("scenario", help=scen_help)
    p.add_argument("--dump", nargs="?", const="-", metavar="FILE", help="write the explicit model (stdout if no file)")
    p.add_argument("--max-states", type=int, default=2_000_000)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("synth", help="synthesise a schedule")
    p.add_argument("scenario", help=scen_help)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--exact", action="store_true", help="exact backward induction")
    g.add_argument("--grid", type=int, metavar="G", help="fixed-grid solver with resolution G")
    p.add_argument("-o", "--output", metavar="CSV", help="write schedule and .meta.json sidecar")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="check a schedule against the requirements")
    p.add_argument("scenario", help=scen_help)
    p.add_argument("strategy", help="schedule CSV")
    p.add_argument("--omega", metavar="FILE", help="JSON omega candidate(s); default lattice otherwise")
    p.add_argument("--csv", metavar="FILE", help="write the report CSV")
    p.add_argument("--trace", metavar="FILE", help="write the induced trace CSV")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="parameter sweep over a_bit, per-room pr and g")
    p.add_argument("scenario", help=scen_help)
    p.add_argument("--a-bit", required=True, metavar="LIST", help="comma-separated weights")
    p.add_argument("--pr", required=True, metavar="LIST", help="comma-separated per-room probabilities")
    p.add_argument("--g", required=True, metavar="LIST", help="comma-separated grid resolutions")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--omega", metavar="FILE", help="JSON omega candidates; default lattice otherwise")
    p.add_argument("-o", "--output", metavar="CSV")
    p.add_argument("--plot", metavar="SVG")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="print a schedule as a per-robot timeline")
    p.add_argument("strategy")
    p.add_argument("--scenario", help="also check place names against this scenario")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("plot", help="render a sweep CSV as SVG")
    p.add_argument("sweep")
    p.add_argument("-o", "--output", metavar="SVG")
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioValidationError as e:
        print(str(e), file=sys.stderr)
        return EXIT_INVALID
    except (ScenarioError, _InputError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
