"""Print the fastest-method map of a finished sweep as a text grid.

    python demos/fastest_map.py [cell-directory]

Defaults to the cached acceptance sweep. Cells where an unconverged method's
partial cost already undercuts the winner are marked with ``*``.
"""

import sys
from pathlib import Path

from sensbench.harness import EVAL_TIMES, fastest_map, load_grid

directory = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "acceptance_cache/grid"
fm = fastest_map(load_grid(directory))
dims = sorted({s.dimension for s in fm})
labels = {v: k for k, v in EVAL_TIMES.items()}
times = sorted({s.nominal_eval_time for s in fm})

print("t_eval  " + "".join(f"{'d=' + str(d):>10s}" for d in dims))
for t in reversed(times):
    row = []
    for d in dims:
        hits = [c for s, c in fm.items() if s.dimension == d and s.nominal_eval_time == t]
        c = hits[0] if hits else None
        name = "-" if c is None or c.method is None else c.method.value + ("*" if c.undercut_by else "")
        row.append(f"{name:>10s}")
    print(f"{labels.get(t, f'{t:g}s'):7s} " + "".join(row))
