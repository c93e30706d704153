"""CSV tables and SVG heatmaps rendered from persisted cell files.

Rendering is a pure function of the parsed cells: it never writes to the
input directory and the same cells always give byte-identical output.

CSV layouts (header row first, columns in this order):

fastest-map
    dimension, eval_time, eval_time_s, seed, fastest, fastest_total_s,
    second, second_total_s, tie, undercut_by, sobol_total_s,
    kriging_total_s, bass_total_s, akmcs_total_s
magnitude
    dimension, eval_time, eval_time_s, seed, fastest, fastest_total_s,
    reference_total_s, magnitude
speed-gain
    dimension, eval_time, eval_time_s, seed, baseline, challenger,
    baseline_total_s, challenger_total_s, gain
trace
    method, dimension, parameter, seed, sample_size, total_order
error-trace
    method, dimension, parameter, seed, sample_size, added_samples,
    total_order, sobol_reference, abs_error
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from html import escape

from .akmcs import initial_size
from .errors import IncompleteCell
from .harness import (
    REFERENCE_CELL, TIE_ORDER, GridResult, Method, Scenario, eval_time_label, fastest_map, magnitude_grid,
    speed_gain_grid,
)

KINDS = ("fastest-map", "magnitude", "speed-gain", "trace", "error-trace")
FORMATS = ("csv", "svg")

FASTEST_FIELDS = ("dimension", "eval_time", "eval_time_s", "seed", "fastest", "fastest_total_s", "second",
                  "second_total_s", "tie", "undercut_by", "sobol_total_s", "kriging_total_s", "bass_total_s",
                  "akmcs_total_s")
MAGNITUDE_FIELDS = ("dimension", "eval_time", "eval_time_s", "seed", "fastest", "fastest_total_s",
                    "reference_total_s", "magnitude")
GAIN_FIELDS = ("dimension", "eval_time", "eval_time_s", "seed", "baseline", "challenger", "baseline_total_s",
               "challenger_total_s", "gain")
TRACE_FIELDS = ("method", "dimension", "parameter", "seed", "sample_size", "total_order")
ERROR_FIELDS = ("method", "dimension", "parameter", "seed", "sample_size", "added_samples", "total_order",
                "sobol_reference", "abs_error")

METHOD_COLORS = {Method.SOBOL: "#4c72b0", Method.KRIGING: "#dd8452", Method.BASS: "#55a868",
                 Method.AKMCS: "#c44e52"}


@dataclass(frozen=True)
class ReportRequest:
    """What to render. ``parameter`` is 1-based, matching ``x1 ... xd``."""

    kind: str
    format: str = "csv"
    baseline: str | None = None
    challenger: str | None = None
    dimension: int | None = None
    parameter: int | None = None
    reference: tuple[int, float] = REFERENCE_CELL

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown report kind {self.kind!r}")
        if self.format not in FORMATS:
            raise ValueError(f"unknown format {self.format!r}")
        if self.kind == "speed-gain":
            if self.challenger is None:
                raise ValueError("speed-gain needs --challenger")
            if self.baseline is None and self.challenger != "second":
                raise ValueError("speed-gain needs --baseline")
        if self.kind in ("trace", "error-trace"):
            if self.dimension is None or self.parameter is None:
                raise ValueError(f"{self.kind} needs --dim and --param")
            if not 1 <= self.parameter <= self.dimension:
                raise ValueError(f"--param must lie in 1..{self.dimension}")
            if self.format == "svg":
                raise ValueError("SVG output is available for grid reports only")


def _num(v) -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return repr(float(v))


def _idx(v) -> str:
    return "" if v is None or not math.isfinite(v) else f"{v:.6g}"


def _csv(fields, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    w.writerows(rows)
    return buf.getvalue()


def _scenario_cols(s: Scenario):
    return [str(s.dimension), eval_time_label(s.nominal_eval_time), _num(s.nominal_eval_time), str(s.seed)]


def _name(m: Method | None) -> str:
    return "" if m is None else m.value


def fastest_map_csv(grid: GridResult) -> str:
    fm = fastest_map(grid)
    rows = []
    for s, c in fm.items():
        cell = grid.cells[s]
        rows.append(_scenario_cols(s) + [
            _name(c.method), _num(c.total_time), _name(c.second), _num(c.second_time), _num(c.tie),
            ";".join(m.value for m in c.undercut_by),
            *(_num(cell[m].total_time) for m in (Method.SOBOL, Method.KRIGING, Method.BASS, Method.AKMCS)),
        ])
    return _csv(FASTEST_FIELDS, rows)


def magnitude_csv(grid: GridResult, reference=REFERENCE_CELL) -> str:
    fm = fastest_map(grid)
    mg = magnitude_grid(grid, reference)
    rows = []
    for s, c in fm.items():
        ref = fm[Scenario(reference[0], reference[1], s.seed)]
        rows.append(_scenario_cols(s) + [_name(c.method), _num(c.total_time), _num(ref.total_time), str(mg[s])])
    return _csv(MAGNITUDE_FIELDS, rows)


def speed_gain_csv(grid: GridResult, baseline, challenger) -> str:
    gains = speed_gain_grid(grid, baseline, challenger)
    fm = fastest_map(grid) if challenger in ("fastest", "second") else None
    rows = []
    for s, g in gains.items():
        if challenger == "second":
            c = fm[s]
            b_name, b_t, c_name, c_t = _name(c.second), c.second_time, _name(c.method), c.total_time
        elif challenger == "fastest":
            b = Method.parse(baseline)
            b_name, b_t = b.value, grid.cells[s][b].total_time
            c_name, c_t = _name(fm[s].method), fm[s].total_time
        else:
            b, ch = Method.parse(baseline), Method.parse(challenger)
            b_name, b_t, c_name, c_t = b.value, grid.cells[s][b].total_time, ch.value, grid.cells[s][ch].total_time
        rows.append(_scenario_cols(s) + [b_name, c_name, _num(b_t), _num(c_t), "" if g is None else str(g)])
    return _csv(GAIN_FIELDS, rows)


def _runs_at(grid: GridResult, d: int):
    """One result per (method, seed) at dimension ``d``; traces do not depend on the nominal time."""
    runs = {}
    for s in grid.scenarios():
        if s.dimension != d:
            continue
        for m, r in grid.cells[s].items():
            runs.setdefault((m, s.seed), r)
    if not runs:
        raise IncompleteCell([(f"d={d}", "any method")])
    return runs


def trace_csv(grid: GridResult, d: int, parameter: int) -> str:
    runs = _runs_at(grid, d)
    rows = []
    for m in Method:
        for (mm, seed), r in sorted(runs.items(), key=lambda kv: kv[0][1]):
            if mm is not m:
                continue
            for n, totals in r.trace:
                rows.append([m.value, str(d), str(parameter), str(seed), str(n), _idx(totals[parameter - 1])])
    return _csv(TRACE_FIELDS, rows)


def _initial_size(m: Method, d: int) -> int:
    return initial_size(d) if m is Method.AKMCS else 10 * d


def error_trace_csv(grid: GridResult, d: int, parameter: int) -> str:
    runs = _runs_at(grid, d)
    rows = []
    for m in (Method.KRIGING, Method.AKMCS, Method.BASS):
        for (mm, seed), r in sorted(runs.items(), key=lambda kv: kv[0][1]):
            if mm is not m:
                continue
            ref_run = runs.get((Method.SOBOL, seed))
            if ref_run is None or ref_run.indices is None:
                raise IncompleteCell([(f"d={d}, seed={seed}", "sobol (converged)")])
            ref = float(ref_run.indices.total_order[parameter - 1])
            n0 = _initial_size(m, d)
            for n, totals in r.trace:
                v = totals[parameter - 1]
                rows.append([m.value, str(d), str(parameter), str(seed), str(n), str(n - n0), _idx(v), _idx(ref),
                             _idx(abs(v - ref))])
    return _csv(ERROR_FIELDS, rows)


# ------------------------------------------------------------------- SVG


def _heatmap(grid: GridResult, title: str, value_of, color_of, legend) -> str:
    scen = grid.scenarios()
    seeds = sorted({s.seed for s in scen})
    seed = seeds[0]
    dims = sorted({s.dimension for s in scen})
    times = sorted({s.nominal_eval_time for s in scen})
    cw, ch, left, top = 56, 32, 70, 50
    width = left + cw * len(times) + 170
    height = top + ch * len(dims) + 60
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<text x="{left}" y="20" font-size="14">{escape(title)} (seed {seed})</text>']
    for j, t in enumerate(times):
        x = left + j * cw + cw / 2
        out.append(f'<text x="{x:g}" y="{top - 6}" text-anchor="middle">{escape(eval_time_label(t))}</text>')
    for i, d in enumerate(reversed(dims)):
        y = top + i * ch
        out.append(f'<text x="{left - 8}" y="{y + ch / 2 + 4:g}" text-anchor="end">d={d}</text>')
        for j, t in enumerate(times):
            x = left + j * cw
            s = Scenario(d, t, seed)
            if s not in grid.cells:
                fill, label = "#ffffff", ""
            else:
                val = value_of(s)
                fill, label = color_of(val), "" if val is None else str(val)
            out.append(f'<rect x="{x}" y="{y}" width="{cw}" height="{ch}" fill="{fill}" stroke="#ffffff"/>')
            if label:
                out.append(f'<text x="{x + cw / 2:g}" y="{y + ch / 2 + 4:g}" text-anchor="middle">'
                           f'{escape(label)}</text>')
    lx = left + cw * len(times) + 16
    for k, (name, fill) in enumerate(legend):
        y = top + k * 20
        out.append(f'<rect x="{lx}" y="{y}" width="14" height="14" fill="{fill}"/>')
        out.append(f'<text x="{lx + 20}" y="{y + 11}">{escape(name)}</text>')
    out.append(f'<text x="{left}" y="{height - 16}">nominal evaluation time per model call</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _ramp(v: int | None, lo: int, hi: int) -> str:
    if v is None:
        return "#eeeeee"
    f = 0.0 if hi == lo else (v - lo) / (hi - lo)
    r, g, b = (int(round(255 + (c - 255) * f)) for c in (8, 48, 107))
    return f"#{r:02x}{g:02x}{b:02x}"


def fastest_map_svg(grid: GridResult) -> str:
    fm = fastest_map(grid)

    def value(s):
        m = fm[s].method
        return None if m is None else m.value

    def color(v):
        return "#eeeeee" if v is None else METHOD_COLORS[Method(v)]

    legend = [(m.value, METHOD_COLORS[m]) for m in TIE_ORDER]
    return _heatmap(grid, "Fastest method", value, color, legend)


def _int_svg(grid: GridResult, values: dict, title: str) -> str:
    present = [v for v in values.values() if v is not None]
    lo, hi = (min(present), max(present)) if present else (0, 0)
    legend = [(str(v), _ramp(v, lo, hi)) for v in range(lo, hi + 1)]
    return _heatmap(grid, title, lambda s: values.get(s), lambda v: _ramp(v, lo, hi), legend)


def render(grid: GridResult, req: ReportRequest) -> str:
    """Render ``req`` over ``grid`` to a string."""
    if req.kind == "fastest-map":
        return fastest_map_csv(grid) if req.format == "csv" else fastest_map_svg(grid)
    if req.kind == "magnitude":
        if req.format == "csv":
            return magnitude_csv(grid, req.reference)
        return _int_svg(grid, magnitude_grid(grid, req.reference), "Orders of magnitude vs reference cell")
    if req.kind == "speed-gain":
        if req.format == "csv":
            return speed_gain_csv(grid, req.baseline, req.challenger)
        base = "second fastest" if req.challenger == "second" else req.baseline
        return _int_svg(grid, speed_gain_grid(grid, req.baseline, req.challenger),
                        f"Speed gain, {base} vs {req.challenger}")
    if req.kind == "trace":
        return trace_csv(grid, req.dimension, req.parameter)
    return error_trace_csv(grid, req.dimension, req.parameter)
