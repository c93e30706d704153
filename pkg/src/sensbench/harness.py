"""Benchmark harness: run the four methods on test-model scenarios and price them.

Model time is virtual. A run records how many times the original model was
called plus the CPU seconds spent fitting emulators and computing indices;
the total time for a nominal per-call cost ``t`` is then

    n_model_evals * t + emulation_cpu + sa_cpu.

Because the counts and CPU times do not depend on ``t``, a grid sweep computes
each ``(method, dimension, seed)`` once and writes one cell file per nominal
time.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
from threadpoolctl import threadpool_limits

from .akmcs import run_akmcs
from .bass import MCMC_PROFILES, bass_emulation_loop, bass_sobol
from .errors import IncompleteCell, SensBenchError
from .kriging import POOL_SIZE, kriging_emulation_loop
from .models import build_model
from .sobol_analysis import DEFAULT_SCHEDULE, BootstrapCI, SobolIndices, run_to_convergence, sobol_indices

logger = logging.getLogger(__name__)

DIMENSIONS = (2, 5, 10, 15, 20, 30)
EVAL_TIMES: dict[str, float] = {
    "1us": 1e-6, "10us": 1e-5, "0.1ms": 1e-4, "1ms": 1e-3, "10ms": 1e-2, "0.1s": 0.1, "1s": 1.0,
    "10s": 10.0, "1min": 60.0, "1h": 3600.0, "6h": 21600.0, "12h": 43200.0, "1day": 86400.0,
}
REFERENCE_CELL = (2, 1e-6)
CELL_FORMAT_VERSION = 1


class Method(enum.Enum):
    SOBOL = "sobol"
    KRIGING = "kriging"
    AKMCS = "akmcs"
    BASS = "bass"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown method {value!r}; expected one of {[m.value for m in cls]}") from None


#: Order used to break exact ties in the fastest-method map.
TIE_ORDER = (Method.SOBOL, Method.KRIGING, Method.BASS, Method.AKMCS)


def eval_time_label(t: float) -> str:
    for label, v in EVAL_TIMES.items():
        if math.isclose(t, v, rel_tol=1e-12):
            return label
    return f"{t:g}s"


@dataclass(frozen=True, order=True)
class Scenario:
    dimension: int
    nominal_eval_time: float
    seed: int = 0

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.dimension}")
        if not (self.nominal_eval_time > 0 and math.isfinite(self.nominal_eval_time)):
            raise ValueError(f"nominal_eval_time must be positive, got {self.nominal_eval_time}")

    @property
    def canonical(self) -> bool:
        return self.dimension in DIMENSIONS and eval_time_label(self.nominal_eval_time) in EVAL_TIMES

    @property
    def label(self) -> str:
        return f"d={self.dimension}, t={eval_time_label(self.nominal_eval_time)}, seed={self.seed}"


@dataclass(frozen=True)
class CostLedger:
    n_model_evals: int
    emulation_cpu: float
    sa_cpu: float

    def __post_init__(self):
        if self.n_model_evals < 0 or self.emulation_cpu < 0 or self.sa_cpu < 0:
            raise ValueError("ledger entries must be nonnegative")


def total_time(ledger: CostLedger, t_nominal: float) -> float:
    """Virtual wall time in seconds; always the same three-term sum in the same order."""
    return ledger.n_model_evals * t_nominal + ledger.emulation_cpu + ledger.sa_cpu


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by every cell of a sweep.

    ``max_size_factor`` caps emulator sample sizes at ``factor * d`` and
    ``cpu_budget_s`` stops an emulation loop once its own CPU use passes the
    budget; both leave the run unconverged rather than failing it.
    ``trace`` records per-round total-order estimates for trace reports; that
    work is timed separately and kept out of the ledger.
    """

    mcmc_profile: str = "desk"
    schedule_cap: int = DEFAULT_SCHEDULE[-1]
    pool_size: int = POOL_SIZE
    max_size_factor: int = 200
    cpu_budget_s: float | None = None
    trace: bool = False
    trace_base_size: int = 2**12

    def __post_init__(self):
        if self.mcmc_profile not in MCMC_PROFILES:
            raise ValueError(f"unknown MCMC profile {self.mcmc_profile!r}")
        if not self.schedule:
            raise ValueError(f"schedule_cap {self.schedule_cap} is below the smallest base size")

    @property
    def schedule(self) -> tuple[int, ...]:
        return tuple(n for n in DEFAULT_SCHEDULE if n <= self.schedule_cap)

    def as_dict(self) -> dict:
        return {
            "mcmc_profile": self.mcmc_profile, "schedule_cap": self.schedule_cap, "pool_size": self.pool_size,
            "max_size_factor": self.max_size_factor, "cpu_budget_s": self.cpu_budget_s, "trace": self.trace,
            "trace_base_size": self.trace_base_size,
        }


@dataclass
class MethodResult:
    """Outcome of one method on one scenario.

    ``indices``/``ci`` are ``None`` when the emulation loop stopped before
    converging, since indices of an unconverged emulator are not reported.
    ``status`` is one of ``converged``, ``unconverged``, ``budget`` or
    ``failed``. ``trace`` holds ``(sample_size, total_order)`` pairs.
    """

    method: Method
    scenario: Scenario
    ledger: CostLedger
    converged: bool
    converged_sample_size: int
    indices: SobolIndices | None = None
    ci: BootstrapCI | None = None
    status: str = "converged"
    trace: list[tuple[int, list[float]]] = field(default_factory=list)
    selection_history: list[int] = field(default_factory=list)
    error: str | None = None

    @property
    def total_time(self) -> float:
        return total_time(self.ledger, self.scenario.nominal_eval_time)


@dataclass
class GridResult:
    cells: dict[Scenario, dict[Method, MethodResult]] = field(default_factory=dict)

    def add(self, result: MethodResult) -> None:
        self.cells.setdefault(result.scenario, {})[result.method] = result

    def __len__(self):
        return sum(len(v) for v in self.cells.values())

    def scenarios(self) -> list[Scenario]:
        return sorted(self.cells)


# ---------------------------------------------------------------- running


class _CountingModel:
    """Wraps the original model, counting rows and the CPU spent inside it."""

    def __init__(self, model):
        self.model = model
        self.n = 0
        self.cpu = 0.0

    def __call__(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        t0 = time.process_time()
        y = self.model(X)
        self.cpu += time.process_time() - t0
        self.n += X.shape[0]
        return y


class _Stopwatch:
    """CPU clock for one phase with carve-outs for model calls and tracing."""

    def __init__(self, counter: _CountingModel | None = None):
        self.counter = counter
        self.start = time.process_time()
        self.model_cpu0 = counter.cpu if counter else 0.0
        self.excluded = 0.0

    def elapsed(self) -> float:
        spent = time.process_time() - self.start - self.excluded
        if self.counter is not None:
            spent -= self.counter.cpu - self.model_cpu0
        return max(spent, 0.0)

    def exclude(self, fn, *args):
        t0 = time.process_time()
        try:
            return fn(*args)
        finally:
            self.excluded += time.process_time() - t0


@dataclass
class _Computed:
    """Everything about a run that does not depend on the nominal time."""

    ledger: CostLedger
    converged: bool
    converged_sample_size: int
    status: str
    indices: SobolIndices | None
    ci: BootstrapCI | None
    trace: list
    selection_history: list
    error: str | None = None


def _emulator_total(emulator, d, cfg: RunConfig, seed) -> list[float]:
    idx, _ = sobol_indices(emulator, d, cfg.trace_base_size, seed=seed)
    return [float(v) for v in idx.total_order]


def _sa_on_emulator(emulator, d, cfg: RunConfig, seed):
    sw = _Stopwatch()
    rep = run_to_convergence(emulator, d, schedule=cfg.schedule, seed=seed)
    return rep, sw.elapsed()


def _compute(method: Method, d: int, seed: int, cfg: RunConfig) -> _Computed:
    counter = _CountingModel(build_model(d))
    budget = cfg.cpu_budget_s
    max_size = cfg.max_size_factor * d
    trace: list = []

    if method is Method.SOBOL:
        sw = _Stopwatch(counter)
        rep = run_to_convergence(counter, d, schedule=cfg.schedule, seed=seed,
                                 on_stage=lambda N, idx, ci: trace.append(
                                     (N * (d + 2), [float(v) for v in idx.total_order])))
        ledger = CostLedger(counter.n, 0.0, sw.elapsed())
        return _Computed(ledger, rep.converged, rep.final_base_size * (d + 2),
                         "converged" if rep.converged else "unconverged", rep.indices, rep.ci, trace, [])

    sw = _Stopwatch(counter)

    def over_budget():
        return budget is not None and sw.elapsed() > budget

    def record(n, emulator):
        if cfg.trace:
            trace.append((int(n), sw.exclude(_emulator_total, emulator, d, cfg, seed)))

    if method is Method.KRIGING:
        loop = kriging_emulation_loop(counter, d, pool_size=cfg.pool_size, seed=seed, max_size=max_size,
                                      on_round=lambda n, m, s: record(n, m), should_stop=over_budget)
        emulator, size, selection = loop.model, loop.final_sample_size, []
        loop_converged = loop.converged
    elif method is Method.AKMCS:
        rep = run_akmcs(counter, d, pool_size=cfg.pool_size, seed=seed, max_additions=max_size,
                        on_step=lambda n, m, s: record(n, m), should_stop=over_budget)
        emulator, size, selection = rep.model, rep.n_model_evals, rep.selection_history
        loop_converged = rep.converged
    else:
        mcmc = MCMC_PROFILES[cfg.mcmc_profile]

        def record_bass(n, post, _max_sd):
            if cfg.trace:
                trace.append((int(n), sw.exclude(lambda: [float(v) for v in bass_sobol(post, d).total_mean])))

        loop = bass_emulation_loop(counter, d, pool_size=cfg.pool_size, seed=seed, mcmc=mcmc, max_size=max_size,
                                   on_round=record_bass, should_stop=over_budget)
        emulator, size, selection = loop.model, loop.final_sample_size, []
        loop_converged = loop.converged
    emulation_cpu = sw.elapsed()

    if not loop_converged:
        status = "budget" if over_budget() else "unconverged"
        ledger = CostLedger(counter.n, emulation_cpu, 0.0)
        return _Computed(ledger, False, size, status, None, None, trace, selection)

    if method is Method.BASS:
        sa = _Stopwatch()
        idx, ci = bass_sobol(emulator, d).summary()
        sa_cpu, sa_converged = sa.elapsed(), True
    else:
        rep, sa_cpu = _sa_on_emulator(emulator, d, cfg, seed)
        idx, ci, sa_converged = rep.indices, rep.ci, rep.converged
    ledger = CostLedger(counter.n, emulation_cpu, sa_cpu)
    status = "converged" if sa_converged else "unconverged"
    return _Computed(ledger, sa_converged, size, status, idx, ci, trace, selection)


def _compute_safe(method: Method, d: int, seed: int, cfg: RunConfig) -> _Computed:
    with threadpool_limits(limits=1):
        try:
            return _compute(method, d, seed, cfg)
        except (SensBenchError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            logger.error("%s d=%d seed=%d failed: %s", method.value, d, seed, exc)
            return _Computed(CostLedger(0, 0.0, 0.0), False, 0, "failed", None, None, [], [],
                             f"{type(exc).__name__}: {exc}")


def _result(method: Method, scenario: Scenario, c: _Computed) -> MethodResult:
    return MethodResult(method, scenario, c.ledger, c.converged, c.converged_sample_size, c.indices, c.ci,
                        c.status, c.trace, c.selection_history, c.error)


def run_method(method, scenario: Scenario, config: RunConfig | None = None) -> MethodResult:
    """Run one method on one scenario and fill its cost ledger.

    Emulator-based methods first run their emulation loop against the original
    model, then compute indices on the frozen emulator: Kriging and AKMCS by
    the Sobol' convergence loop, BASS in closed form. Unconverged loops and
    failures are recorded in ``status`` instead of raised.
    """
    method = Method.parse(method)
    cfg = config or RunConfig()
    if not scenario.canonical:
        logger.warning("non-canonical scenario %s", scenario.label)
    return _result(method, scenario, _compute_safe(method, scenario.dimension, scenario.seed, cfg))


# ------------------------------------------------------------ persistence


def _sig6(v: float) -> float:
    return float(f"{v:.6g}")


def _vec(a) -> list[float | None]:
    return [None if not np.isfinite(v) else _sig6(float(v)) for v in np.asarray(a, dtype=float)]


def result_to_dict(r: MethodResult, profile: str = "desk") -> dict:
    """Cell file payload. Indices carry 6 significant digits, durations full precision."""
    indices = None
    if r.indices is not None:
        indices = {"first": _vec(r.indices.first_order), "total": _vec(r.indices.total_order),
                   "ci_low": _vec(r.ci.lower), "ci_high": _vec(r.ci.upper)}
    return {
        "method": r.method.value,
        "dimension": r.scenario.dimension,
        "nominal_eval_time_s": r.scenario.nominal_eval_time,
        "seed": r.scenario.seed,
        "n_model_evals": int(r.ledger.n_model_evals),
        "emulation_cpu_s": float(r.ledger.emulation_cpu),
        "sa_cpu_s": float(r.ledger.sa_cpu),
        "converged": bool(r.converged),
        "converged_sample_size": int(r.converged_sample_size),
        "indices": indices,
        "status": r.status,
        "mcmc_profile": profile,
        "selection_history": [int(i) for i in r.selection_history],
        "trace": [[int(n), _vec(v)] for n, v in r.trace],
        "error": r.error,
        "format_version": CELL_FORMAT_VERSION,
    }


def _arr(v) -> np.ndarray:
    return np.array([np.nan if x is None else x for x in v], dtype=float)


def result_from_dict(doc: Mapping) -> MethodResult:
    scenario = Scenario(int(doc["dimension"]), float(doc["nominal_eval_time_s"]), int(doc["seed"]))
    ledger = CostLedger(int(doc["n_model_evals"]), float(doc["emulation_cpu_s"]), float(doc["sa_cpu_s"]))
    idx = ci = None
    if doc.get("indices"):
        ix = doc["indices"]
        idx = SobolIndices(_arr(ix["first"]), _arr(ix["total"]), float("nan"), 0)
        ci = BootstrapCI(_arr(ix["ci_low"]), _arr(ix["ci_high"]))
    trace = [(int(n), [float("nan") if x is None else x for x in v]) for n, v in doc.get("trace", [])]
    return MethodResult(Method.parse(doc["method"]), scenario, ledger, bool(doc["converged"]),
                        int(doc["converged_sample_size"]), idx, ci, doc.get("status", "converged"),
                        trace, list(doc.get("selection_history", [])), doc.get("error"))


def atomic_write_json(path: Path, doc) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _hash(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def cell_key(method: Method, scenario: Scenario, cfg: RunConfig) -> str:
    return _hash({"method": method.value, "dimension": scenario.dimension,
                  "t": repr(float(scenario.nominal_eval_time)), "seed": scenario.seed, "config": cfg.as_dict()})


def cell_filename(method: Method, scenario: Scenario, cfg: RunConfig) -> str:
    return (f"{method.value}_d{scenario.dimension}_t{eval_time_label(scenario.nominal_eval_time)}"
            f"_s{scenario.seed}_{cell_key(method, scenario, cfg)}.json")


def write_cell(path, result: MethodResult, profile: str = "desk") -> None:
    atomic_write_json(Path(path), result_to_dict(result, profile))


def read_cell(path) -> MethodResult:
    with open(path) as fh:
        return result_from_dict(json.load(fh))


def load_grid(directory) -> GridResult:
    """Collect every cell file under ``directory`` (run caches are skipped)."""
    grid = GridResult()
    for p in sorted(Path(directory).glob("*.json")):
        with open(p) as fh:
            doc = json.load(fh)
        if "method" in doc and "nominal_eval_time_s" in doc:
            grid.add(result_from_dict(doc))
    return grid


# ------------------------------------------------------------------- grid


@dataclass(frozen=True)
class GridConfig:
    dimensions: tuple[int, ...] = DIMENSIONS
    eval_times_s: tuple[float, ...] = tuple(EVAL_TIMES.values())
    methods: tuple[Method, ...] = tuple(Method)
    seeds: tuple[int, ...] = (0,)
    mcmc_profile: str = "desk"
    schedule_cap: int = DEFAULT_SCHEDULE[-1]
    pool_size: int = POOL_SIZE
    max_size_factor: int = 200
    cpu_budget_s: float | None = None
    trace: bool = False

    @classmethod
    def from_dict(cls, doc: Mapping) -> "GridConfig":
        required = ("dimensions", "eval_times_s", "methods", "seeds", "mcmc_profile", "schedule_cap")
        missing = [k for k in required if k not in doc]
        if missing:
            raise ValueError(f"grid config lacks {missing}")
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown grid config keys {sorted(unknown)}")
        kw = dict(doc)
        kw["dimensions"] = tuple(int(d) for d in doc["dimensions"])
        kw["eval_times_s"] = tuple(float(t) for t in doc["eval_times_s"])
        kw["methods"] = tuple(Method.parse(m) for m in doc["methods"])
        kw["seeds"] = tuple(int(s) for s in doc["seeds"])
        kw["schedule_cap"] = int(doc["schedule_cap"])
        cfg = cls(**kw)
        cfg.run_config()  # validates profile and cap
        return cfg

    @classmethod
    def load(cls, path) -> "GridConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {"dimensions": list(self.dimensions), "eval_times_s": list(self.eval_times_s),
                "methods": [m.value for m in self.methods], "seeds": list(self.seeds),
                "mcmc_profile": self.mcmc_profile, "schedule_cap": self.schedule_cap, "pool_size": self.pool_size,
                "max_size_factor": self.max_size_factor, "cpu_budget_s": self.cpu_budget_s, "trace": self.trace}

    def run_config(self) -> RunConfig:
        return RunConfig(self.mcmc_profile, self.schedule_cap, self.pool_size, self.max_size_factor,
                         self.cpu_budget_s, self.trace)

    def scenarios(self) -> list[Scenario]:
        return [Scenario(d, t, s) for d in self.dimensions for t in self.eval_times_s for s in self.seeds]


def _run_cache_path(out: Path, method: Method, d: int, seed: int, cfg: RunConfig) -> Path:
    key = _hash({"method": method.value, "dimension": d, "seed": seed, "config": cfg.as_dict()})
    return out / "runs" / f"{method.value}_d{d}_s{seed}_{key}.json"


def _computed_to_dict(c: _Computed) -> dict:
    # Reuses the cell layout with a placeholder nominal time.
    r = _result(Method.SOBOL, Scenario(2, 1.0), c)
    doc = result_to_dict(r)
    for k in ("method", "dimension", "nominal_eval_time_s", "seed"):
        doc.pop(k)
    return doc


def _computed_from_dict(doc: Mapping) -> _Computed:
    r = result_from_dict({**doc, "method": "sobol", "dimension": 2, "nominal_eval_time_s": 1.0, "seed": 0})
    return _Computed(r.ledger, r.converged, r.converged_sample_size, r.status, r.indices, r.ci, r.trace,
                     r.selection_history, r.error)


def run_grid(config: GridConfig, out_dir, progress=None) -> GridResult:
    """Execute every requested cell, persisting as it goes.

    Cells already on disk are loaded, not recomputed. Each
    ``(method, dimension, seed)`` run is cached under ``out_dir/runs`` so
    that the nominal times of one run share a single computation. A failing
    run is stored with ``status="failed"`` and the sweep continues.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = config.run_config()
    grid = GridResult()
    for d in config.dimensions:
        for seed in config.seeds:
            for method in config.methods:
                scenarios = [Scenario(d, t, seed) for t in config.eval_times_s]
                paths = [out / cell_filename(method, s, cfg) for s in scenarios]
                if all(p.exists() for p in paths):
                    for p in paths:
                        grid.add(read_cell(p))
                    continue
                cache = _run_cache_path(out, method, d, seed, cfg)
                if cache.exists():
                    with open(cache) as fh:
                        computed = _computed_from_dict(json.load(fh))
                else:
                    logger.info("running %s d=%d seed=%d", method.value, d, seed)
                    computed = _compute_safe(method, d, seed, cfg)
                    atomic_write_json(cache, _computed_to_dict(computed))
                for s, p in zip(scenarios, paths):
                    if not p.exists():
                        write_cell(p, _result(method, s, computed), config.mcmc_profile)
                    grid.add(read_cell(p))
                if progress is not None:
                    progress(method, d, seed, computed)
    return grid


# ------------------------------------------------------------- derived grids


@dataclass(frozen=True)
class FastestChoice:
    """Winner of one scenario.

    ``method`` is ``None`` when no method converged. ``tie`` marks an exact
    tie resolved by ``TIE_ORDER``. ``undercut_by`` lists unconverged methods
    whose partial cost is already below the winner's time, which means the
    choice depends on the caps that stopped them.
    """

    method: Method | None
    total_time: float
    second: Method | None = None
    second_time: float = float("nan")
    tie: bool = False
    undercut_by: tuple[Method, ...] = ()


def _require(grid: GridResult, methods: Iterable[Method]) -> None:
    methods = list(methods)
    missing = [(s.label, m.value) for s in grid.scenarios() for m in methods if m not in grid.cells[s]]
    if missing:
        raise IncompleteCell(missing)


def _choose(cell: Mapping[Method, MethodResult]) -> FastestChoice:
    ranked = sorted(((r.total_time, TIE_ORDER.index(m), m) for m, r in cell.items() if r.converged))
    if not ranked:
        return FastestChoice(None, float("nan"))
    best_t, _, best = ranked[0]
    tie = len(ranked) > 1 and ranked[1][0] == best_t
    second, second_t = (ranked[1][2], ranked[1][0]) if len(ranked) > 1 else (None, float("nan"))
    undercut = tuple(m for m in TIE_ORDER if m in cell and not cell[m].converged
                     and cell[m].status != "failed" and cell[m].total_time < best_t)
    return FastestChoice(best, best_t, second, second_t, tie, undercut)


def fastest_map(grid: GridResult) -> dict[Scenario, FastestChoice]:
    """Per-scenario method with the smallest total time among converged runs."""
    _require(grid, Method)
    return {s: _choose(grid.cells[s]) for s in grid.scenarios()}


def order_of_magnitude(ratio: float) -> int:
    if not ratio > 0 or not math.isfinite(ratio):
        raise ValueError(f"ratio must be positive and finite, got {ratio}")
    return math.floor(math.log10(ratio))


def magnitude_grid(grid: GridResult, reference: tuple[int, float] = REFERENCE_CELL) -> dict[Scenario, int]:
    """``floor(log10(fastest time / fastest time of the reference cell))``, per seed."""
    fm = fastest_map(grid)
    out = {}
    for s, choice in fm.items():
        ref = Scenario(reference[0], reference[1], s.seed)
        if ref not in fm:
            raise IncompleteCell([(ref.label, "reference")])
        out[s] = order_of_magnitude(choice.total_time / fm[ref].total_time)
    return out


def speed_gain_grid(grid: GridResult, baseline, challenger) -> dict[Scenario, int | None]:
    """``floor(log10(T_baseline / T_challenger))`` per scenario.

    ``challenger`` is a method, ``"fastest"`` or ``"second"``; with
    ``"second"`` the second-fastest method is compared against the fastest,
    so ``baseline`` is ignored. Baseline times of unconverged runs are
    partial costs and so understate the gain. Scenarios lacking a fastest or
    second-fastest method map to ``None``.
    """
    if isinstance(challenger, str) and challenger.lower() in ("fastest", "second"):
        mode = challenger.lower()
        fm = fastest_map(grid)
        base = None if mode == "second" else Method.parse(baseline)
        out = {}
        for s, choice in fm.items():
            if mode == "second":
                num = choice.second_time
            else:
                num = grid.cells[s][base].total_time
            ratio = num / choice.total_time
            out[s] = order_of_magnitude(ratio) if math.isfinite(ratio) else None
        return out
    base, chal = Method.parse(baseline), Method.parse(challenger)
    _require(grid, (base, chal))
    return {s: order_of_magnitude(grid.cells[s][base].total_time / grid.cells[s][chal].total_time)
            for s in grid.scenarios()}
