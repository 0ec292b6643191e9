"""A coarse sweep over a_bit and pr on the reduced scenario, written as CSV and SVG.

    python demos/sweep_plot.py [outdir]
"""

import sys
from pathlib import Path

from cleansynth import load_builtin
from cleansynth.harness import emit_plot, sweep_grid, run_sweep, sweep_summary, sweep_to_csv

out = Path(sys.argv[1] if len(sys.argv) > 1 else ".")
out.mkdir(parents=True, exist_ok=True)

sc = load_builtin("reduced")
points = sweep_grid(a_bits=(1, 10, 100, 316, 1000, 3162), prs=(0.02, 0.06, 0.1, 0.16, 0.2), gs=(1, 2, 3))
records = run_sweep(sc, points)

(out / "sweep.csv").write_text(sweep_to_csv(records))
(out / "sweep.svg").write_text(emit_plot(records))
print(sweep_summary(records).format())
print(f"wrote {out / 'sweep.csv'} and {out / 'sweep.svg'}")
