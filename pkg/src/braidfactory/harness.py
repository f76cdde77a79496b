"""Experiment runner: procedure sweeps, correlation studies, comparisons.

Procedures mirror the factory-design comparison: Random (seeded random
placement), Line (hand-style linear layout), FD (force-directed
annealing from the linear layout), GP (recursive graph partitioning
embedding) and HS (hierarchical stitching).  Every run is a pure
function of its parameters; results are emitted as CSV/JSON rows and
per-procedure plot series.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import protocol as P
from . import interaction as I
from . import layout as L
from . import meshsim as M
from .anneal import ForceParams, anneal
from .partition import embed
from .stitch import StitchParams, stitch_factory

PROCEDURES = ("Random", "Line", "FD", "GP", "HS")

CSV_COLUMNS = [
    "k", "l", "procedure", "reuse", "seed", "latency", "area", "volume",
    "physical_volume", "crossings", "avg_edge_length", "critical_path",
    "runtime_ms", "error",
]


@dataclass
class ExperimentSpec:
    points: list[tuple[int, int]]
    procedures: list[str]
    policies: list[P.ReusePolicy] = field(default_factory=lambda: [P.ReusePolicy.NO_REUSE])
    seeds: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5])
    eps_inject: float = 1e-3
    out_dir: str | None = None
    workers: int = 1
    fd_max_iters: int | None = None
    fd_move_budget: int | None = None
    stitch_method: str = "FD"
    midpoint_mode: str = "annealed"
    midpoint_iters: int = 30
    injection_cost: int = 2
    corr_samples: int = 50

    def validate(self):
        if not self.points or not self.procedures:
            raise ValueError("spec needs points and procedures")
        if not self.seeds:
            raise ValueError("spec needs at least one seed")
        for proc in self.procedures:
            if proc not in PROCEDURES:
                raise ValueError(f"unknown procedure {proc!r}")


@dataclass
class ResultRow:
    k: int
    l: int
    procedure: str
    reuse: str
    seed: int
    latency: int = 0
    area: int = 0
    volume: int = 0
    physical_volume: int = 0
    crossings: int = 0
    avg_edge_length: float = 0.0
    critical_path: int = 0
    runtime_ms: int = 0
    error: str = ""
    best: bool = False


GP_SLACK = 1.1  # routing slack for the partitioning grid


def square_grid_side(n_qubits: int, margin: int = 1, slack: float = GP_SLACK) -> int:
    return math.ceil(math.sqrt(n_qubits * slack)) + 2 * margin


def _fd_params(n: int, seed: int, spec: ExperimentSpec) -> ForceParams:
    iters = spec.fd_max_iters
    if iters is None:
        iters = 120 if n <= 200 else (60 if n <= 1200 else 36)
    budget = spec.fd_move_budget
    if budget is None and n > 1200:
        budget = 512
    return ForceParams(max_iters=iters, move_budget=budget, seed=seed)


def run_cell(
    k: int,
    l: int,
    procedure: str,
    policy: P.ReusePolicy,
    seed: int,
    spec: ExperimentSpec,
) -> ResultRow:
    """Build, map, simulate and measure one experiment cell."""
    reuse_tag = "R" if policy is P.ReusePolicy.REUSE else "NR"
    row = ResultRow(k=k, l=l, procedure=procedure, reuse=reuse_tag, seed=seed)
    t0 = time.perf_counter()
    try:
        cfg = P.FactoryConfig(k, l, spec.eps_inject, reuse_policy=policy, seed=seed)
        hints = None
        if procedure == "HS":
            plan = stitch_factory(cfg, StitchParams(
                method=spec.stitch_method,
                midpoint_mode=spec.midpoint_mode,
                midpoint_iters=spec.midpoint_iters,
                seed=seed,
            ))
            circuit, mapping, hints = plan.circuit, plan.mapping, plan.hints
        else:
            circuit = P.build_factory(cfg)
            n = circuit.n_qubits
            if procedure == "Random":
                # random placement over the hand layout's machine footprint
                line = L.linear_mapping(circuit)
                mapping = L.random_mapping(circuit, line.width, line.height, seed=seed)
            elif procedure == "Line":
                mapping = L.linear_mapping(circuit)
            elif procedure == "FD":
                mapping = anneal(
                    L.linear_mapping(circuit), circuit, _fd_params(n, seed, spec)
                )
            elif procedure == "GP":
                side = math.ceil(math.sqrt(n * GP_SLACK))
                inner = embed(I.from_circuit(circuit), side, side)
                mapping = L.GridMapping(
                    side + 2, side + 2,
                    {q: (x + 1, y + 1) for q, (x, y) in inner.placement.items()},
                )
                from .layout import _place_barrier_controls

                _place_barrier_controls(mapping, circuit)
            else:
                raise ValueError(procedure)
        policy_sim = M.SimPolicy(injection_cost=spec.injection_cost)
        sim = M.simulate(circuit, mapping, hints=hints, policy=policy_sim)
        model = P.build_error_model(cfg)
        sim = M.report(sim, cfg, model)
        graph = I.from_circuit(circuit, injection_cost=spec.injection_cost)
        row.latency = sim.latency
        row.area = sim.area
        row.volume = sim.volume
        row.physical_volume = sim.physical_volume or 0
        row.crossings = L.crossing_count(mapping, graph)
        row.avg_edge_length = round(L.edge_length(mapping, graph), 6)
        row.critical_path = I.critical_path(circuit)
    except Exception as exc:  # per-cell failure: record, keep sweeping
        row.error = f"{type(exc).__name__}: {exc}"
    row.runtime_ms = int((time.perf_counter() - t0) * 1000)
    return row


def _cell_args(spec: ExperimentSpec):
    for (k, l) in spec.points:
        for proc in spec.procedures:
            for policy in spec.policies:
                for seed in spec.seeds:
                    yield (k, l, proc, policy, seed)


def _run_one(args):
    k, l, proc, policy, seed, spec = args
    return run_cell(k, l, proc, policy, seed, spec)


def run(spec: ExperimentSpec) -> list[ResultRow]:
    """Execute the sweep; rows sorted canonically, best seed flagged."""
    spec.validate()
    jobs = [(k, l, proc, policy, seed, spec) for (k, l, proc, policy, seed) in _cell_args(spec)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_run_one, jobs))
    else:
        rows = [_run_one(j) for j in jobs]
    rows.sort(key=lambda r: (r.k, r.l, r.procedure, r.reuse, r.seed))
    by_cell: dict[tuple, ResultRow] = {}
    for row in rows:
        if row.error:
            continue
        key = (row.k, row.l, row.procedure, row.reuse)
        if key not in by_cell or row.volume < by_cell[key].volume:
            by_cell[key] = row
    for row in by_cell.values():
        row.best = True
    return rows


# ---------------------------------------------------------------------------
# correlation study
# ---------------------------------------------------------------------------


def pearson(xs, ys) -> float | None:
    """Pearson r, or None when either side has zero variance."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) < 2 or float(x.std()) == 0.0 or float(y.std()) == 0.0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


def correlation_study(
    k: int,
    l: int = 1,
    n_samples: int = 50,
    seed: int = 0,
    eps_inject: float = 1e-3,
    injection_cost: int = 2,
) -> dict[str, float | None]:
    """Metric-vs-latency Pearson correlations over random mappings."""
    if n_samples < 10:
        raise ValueError("need at least 10 samples")
    cfg = P.FactoryConfig(k, l, eps_inject)
    circuit = P.build_factory(cfg)
    graph = I.from_circuit(circuit, injection_cost=injection_cost)
    side = square_grid_side(circuit.n_qubits)
    lat, lens, spaces, crosses = [], [], [], []
    for s in range(n_samples):
        mapping = L.random_mapping(circuit, side, side, seed=seed + s)
        rep = M.simulate(circuit, mapping, policy=M.SimPolicy(injection_cost=injection_cost))
        lat.append(rep.latency)
        lens.append(L.edge_length(mapping, graph))
        spaces.append(L.edge_spacing(mapping, graph))
        crosses.append(L.crossing_count(mapping, graph))
    return {
        "length": pearson(lens, lat),
        "spacing": pearson(spaces, lat),
        "crossings": pearson(crosses, lat),
        "n": n_samples,
    }


# ---------------------------------------------------------------------------
# comparisons and emission
# ---------------------------------------------------------------------------


def best_rows(rows: list[ResultRow]) -> dict[tuple, ResultRow]:
    """Minimum-volume row per (k, l, procedure), policies and seeds pooled."""
    best: dict[tuple, ResultRow] = {}
    for row in rows:
        if row.error:
            continue
        key = (row.k, row.l, row.procedure)
        if key not in best or row.volume < best[key].volume:
            best[key] = row
    return best


def compare(rows: list[ResultRow], baseline: str, target: str) -> dict:
    """Volume ratios baseline/target per point plus the geometric mean.

    Points missing either procedure are listed under ``missing``.
    """
    best = best_rows(rows)
    points = sorted({(r.k, r.l) for r in rows})
    ratios = {}
    missing = []
    for (k, l) in points:
        b = best.get((k, l, baseline))
        t = best.get((k, l, target))
        if b is None or t is None or t.volume == 0:
            missing.append((k, l))
            continue
        ratios[(k, l)] = b.volume / t.volume
    gm = math.exp(sum(math.log(v) for v in ratios.values()) / len(ratios)) if ratios else None
    return {"ratios": ratios, "geomean": gm, "missing": missing}


def rows_to_csv(rows: list[ResultRow], include_runtime: bool = True) -> str:
    cols = [c for c in CSV_COLUMNS if include_runtime or c != "runtime_ms"]
    lines = [",".join(cols)]
    for r in rows:
        d = asdict(r)
        lines.append(",".join(str(d[c]) for c in cols))
    return "\n".join(lines) + "\n"


def rows_to_json(rows: list[ResultRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=1, sort_keys=True) + "\n"


def rows_from_json(text: str) -> list[ResultRow]:
    return [ResultRow(**d) for d in json.loads(text)]


def emit(rows: list[ResultRow], fmt: str, out_dir: str, include_runtime: bool = True) -> list[str]:
    """Write results; returns the created file paths."""
    if not rows:
        raise ValueError("no rows to emit")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt == "csv":
        path = out / "results.csv"
        path.write_text(rows_to_csv(rows, include_runtime))
        written.append(str(path))
    elif fmt == "json":
        path = out / "results.json"
        path.write_text(rows_to_json(rows))
        written.append(str(path))
    elif fmt == "plotdata":
        best = best_rows(rows)
        levels = sorted({l for (_k, l, _p) in best})
        procs = sorted({p for (_k, _l, p) in best})
        for proc in procs:
            for l in levels:
                series = sorted(
                    (k, row.volume)
                    for (k, ll, p), row in best.items()
                    if p == proc and ll == l
                )
                if not series:
                    continue
                path = out / f"volume_l{l}_{proc}.dat"
                path.write_text(
                    "\n".join(f"{k} {v}" for k, v in series) + "\n"
                )
                written.append(str(path))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return written
