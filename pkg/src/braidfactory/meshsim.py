"""Cycle-accurate braid scheduling and routing on a 2-D tile mesh.

Each timestep, pending gates are scanned in program order; a gate is
ready once every earlier gate sharing an operand has completed.  A ready
gate claims a 4-connected path between its operand cells (braids extend
any length in one timestep) unless some cell of every candidate path is
already claimed, in which case the gate stalls and retries next
timestep.

Injections execute as ``injection_cost`` consecutive braids (expected
cost 2) between the same endpoints: the claimed path is held for that
many consecutive timesteps and the gate completes with the last braid.
A multi-target CNOT claims one path visiting control then targets in
nearest-neighbor order.  Barriers list every qubit, so they complete
alone.  Latency is the timestep count; reports are bit-identical across
repeated runs.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .protocol import Circuit, FactoryConfig, ErrorModel, GateKind, INJECT_KINDS, round_area
from .layout import GridMapping


class RoutingError(RuntimeError):
    """A gate cannot be routed even on an otherwise empty mesh."""


@dataclass(frozen=True)
class SimPolicy:
    injection_cost: int = 2
    stochastic_injection: bool = False
    seed: int = 0
    record_trace: bool = False
    debug_checks: bool = False
    blocked_cells: frozenset[tuple[int, int]] = frozenset()


@dataclass
class TraceRow:
    timestep: int
    gate_index: int
    kind: str
    path_length: int
    stalled: bool


@dataclass
class SimReport:
    latency: int
    stalls: int
    area: int
    volume: int
    width: int
    height: int
    round_latencies: list[int] = field(default_factory=list)
    perm_latencies: list[int] = field(default_factory=list)
    barrier_steps: list[int] = field(default_factory=list)
    gate_completion: list[int] = field(default_factory=list)
    physical_volume: int | None = None
    trace: list[TraceRow] | None = None


# ---------------------------------------------------------------------------
# routing
# ---------------------------------------------------------------------------


class _Mesh:
    """BFS router over a W x H grid with per-timestep cell occupancy."""

    def __init__(self, width: int, height: int, blocked: frozenset[tuple[int, int]] = frozenset()):
        self.width = width
        self.height = height
        n = width * height
        self.occ = bytearray(n)
        for (x, y) in blocked:
            self.occ[y * width + x] = 1
        self.blocked_count = len(blocked)
        self.visited = [0] * n
        self.parent = [0] * n
        self.gen = 0
        self.xcoord = [c % width for c in range(n)]

    def bfs(self, src: int, dst: int) -> list[int] | None:
        """Shortest free path src -> dst; neighbor order E,S,W,N."""
        occ = self.occ
        if occ[src] or occ[dst]:
            return None
        if src == dst:
            return [src]
        self.gen += 1
        gen = self.gen
        visited, parent, xcoord = self.visited, self.parent, self.xcoord
        w = self.width
        n = len(occ)
        visited[src] = gen
        parent[src] = -1
        dq = deque((src,))
        while dq:
            c = dq.popleft()
            x = xcoord[c]
            # E, S, W, N
            nb = c + 1
            if x + 1 < w and visited[nb] != gen and not occ[nb]:
                visited[nb] = gen
                parent[nb] = c
                if nb == dst:
                    return self._backtrack(nb)
                dq.append(nb)
            nb = c + w
            if nb < n and visited[nb] != gen and not occ[nb]:
                visited[nb] = gen
                parent[nb] = c
                if nb == dst:
                    return self._backtrack(nb)
                dq.append(nb)
            nb = c - 1
            if x > 0 and visited[nb] != gen and not occ[nb]:
                visited[nb] = gen
                parent[nb] = c
                if nb == dst:
                    return self._backtrack(nb)
                dq.append(nb)
            nb = c - w
            if nb >= 0 and visited[nb] != gen and not occ[nb]:
                visited[nb] = gen
                parent[nb] = c
                if nb == dst:
                    return self._backtrack(nb)
                dq.append(nb)
        return None

    def _backtrack(self, dst: int) -> list[int]:
        path = [dst]
        parent = self.parent
        c = parent[dst]
        while c != -1:
            path.append(c)
            c = parent[c]
        path.reverse()
        return path

    def route_chain(self, stops: list[int]) -> list[int] | None:
        """Concatenated shortest paths through the given cell stops."""
        path = [stops[0]]
        for nxt in stops[1:]:
            seg = self.bfs(path[-1], nxt)
            if seg is None:
                return None
            path.extend(seg[1:])
        return path


def route(
    width: int,
    height: int,
    occupied: set[tuple[int, int]],
    src_cells,
    dst_cells,
    midpoint: tuple[int, int] | None = None,
) -> list[tuple[int, int]] | None:
    """Standalone routing query used by tests and tooling.

    Finds one path visiting the first source cell, every further source
    cell, the optional midpoint, then every destination cell, via
    successive shortest free segments.  Returns None when blocked.
    """
    mesh = _Mesh(width, height, frozenset(occupied))
    to_idx = lambda cell: cell[1] * width + cell[0]
    stops = [to_idx(c) for c in src_cells]
    if midpoint is not None:
        stops.append(to_idx(midpoint))
    stops.extend(to_idx(c) for c in dst_cells)
    path = mesh.route_chain(stops)
    if path is None:
        return None
    return [(c % width, c // width) for c in path]


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------


def _dependencies(circuit: Circuit) -> tuple[list[int], list[list[int]]]:
    """Per-qubit chaining: gate preds/succs realizing the data-hazard rule."""
    last: dict[int, int] = {}
    npred = [0] * len(circuit.gates)
    succs: list[list[int]] = [[] for _ in circuit.gates]
    for i, gate in enumerate(circuit.gates):
        preds = {last[q] for q in gate.ops if q in last}
        npred[i] = len(preds)
        for p in preds:
            succs[p].append(i)
        for q in gate.ops:
            last[q] = i
    return npred, succs


def simulate(
    circuit: Circuit,
    mapping: GridMapping,
    hints: dict[int, tuple[int, int]] | None = None,
    policy: SimPolicy | None = None,
) -> SimReport:
    """Run the mapped circuit; returns latency/area/volume and stall counts.

    ``hints`` maps gate index -> midpoint cell: the braid is routed
    source -> midpoint -> destination as one claimed path.
    """
    policy = policy or SimPolicy()
    hints = hints or {}
    mapping.validate(circuit)
    width, height = mapping.width, mapping.height
    mesh = _Mesh(width, height, policy.blocked_cells)
    cell_idx = {q: y * width + x for q, (x, y) in mapping.placement.items()}

    gates = circuit.gates
    n_gates = len(gates)
    npred, succs = _dependencies(circuit)

    rng = np.random.default_rng(policy.seed) if policy.stochastic_injection else None
    remaining = [1] * n_gates
    for i, gate in enumerate(gates):
        if gate.kind in INJECT_KINDS:
            remaining[i] = int(rng.geometric(0.5)) if rng is not None else policy.injection_cost

    gate_cells: list[list[int]] = []
    for gate in gates:
        seen: set[int] = set()
        cells = []
        for q in gate.ops:
            c = cell_idx[q]
            if c not in seen:
                seen.add(c)
                cells.append(c)
        gate_cells.append(cells)

    ready: list[int] = [i for i in range(n_gates) if npred[i] == 0]
    heapq.heapify(ready)
    completed = [0] * n_gates
    done = 0
    stalls = 0
    t = 0
    trace: list[TraceRow] | None = [] if policy.record_trace else None
    barrier_steps: list[int] = []
    occ = mesh.occ
    # multi-braid gates hold their path until they finish: expiry -> cells/gates
    release_at: dict[int, list[int]] = {}
    finish_at: dict[int, list[int]] = {}
    holds_active = 0

    while done < n_gates:
        t += 1
        executed_any = False
        current = []
        while ready:
            current.append(heapq.heappop(ready))
        claimed_sets = [] if policy.debug_checks else None
        for g in current:
            gate = gates[g]
            kind = gate.kind
            cells = gate_cells[g]
            path: list[int] | None
            if kind is GateKind.BARRIER:
                # depends on every listed qubit, so it runs by itself
                path = cells
            elif len(cells) == 1:
                path = None if occ[cells[0]] else [cells[0]]
            elif kind is GateKind.CXX:
                stops = [cells[0]] + _nearest_order(cells[0], cells[1:], width)
                path = mesh.route_chain(stops)
            else:
                mid = hints.get(g)
                if mid is None:
                    path = mesh.bfs(cells[0], cells[1])
                else:
                    path = mesh.route_chain([cells[0], mid[1] * width + mid[0], cells[1]])
            if path is None:
                if holds_active == 0 and not executed_any and mesh.blocked_count == 0:
                    raise RoutingError(
                        f"gate {g} ({kind.value}) unroutable on an empty "
                        f"{width}x{height} mesh"
                    )
                stalls += 1
                heapq.heappush(ready, g)
                if trace is not None:
                    trace.append(TraceRow(t, g, kind.value, 0, True))
                continue
            executed_any = True
            pset = set(path)
            if claimed_sets is not None:
                for other in claimed_sets:
                    if other & pset:
                        raise AssertionError(f"braid overlap at timestep {t}")
                claimed_sets.append(pset)
            newly = [c for c in pset if not occ[c]]
            for c in newly:
                occ[c] = 1
            end = t + remaining[g] - 1
            release_at.setdefault(end, []).extend(newly)
            finish_at.setdefault(end, []).append(g)
            if end > t:
                holds_active += 1
            if trace is not None:
                trace.append(TraceRow(t, g, kind.value, len(path), False))
        if not executed_any and holds_active == 0 and current:
            raise RoutingError(f"no braid routable at timestep {t}: mesh deadlocked")
        for g in finish_at.pop(t, ()):  # gates finishing this timestep
            if remaining[g] > 1:
                holds_active -= 1
            completed[g] = t
            done += 1
            if gates[g].kind is GateKind.BARRIER:
                barrier_steps.append(t)
            for s in succs[g]:
                npred[s] -= 1
                if npred[s] == 0:
                    heapq.heappush(ready, s)
        for c in release_at.pop(t, ()):
            occ[c] = 0

    report = SimReport(
        latency=t,
        stalls=stalls,
        area=width * height,
        volume=width * height * t,
        width=width,
        height=height,
        barrier_steps=barrier_steps,
        gate_completion=completed,
        trace=trace,
    )
    _attach_round_latencies(report, circuit)
    return report


def _nearest_order(start: int, targets: list[int], width: int) -> list[int]:
    """Greedy nearest-neighbor visiting order (squared Euclid, ties by cell)."""
    rest = list(targets)
    order = []
    cur = start
    while rest:
        cx, cy = cur % width, cur // width
        best = min(rest, key=lambda c: ((c % width - cx) ** 2 + (c // width - cy) ** 2, c))
        rest.remove(best)
        order.append(best)
        cur = best
    return order


def _attach_round_latencies(report: SimReport, circuit: Circuit) -> None:
    bounds = report.barrier_steps
    if not bounds:
        report.round_latencies = [report.latency]
        return
    rounds = []
    prev_end = 0
    for b in bounds:
        rounds.append(b - prev_end - 1)
        prev_end = b
    rounds.append(report.latency - prev_end)
    report.round_latencies = rounds
    # permutation step: inter-round injections consuming prior outputs
    perm = []
    for r, b in enumerate(bounds, start=1):
        last_perm = b
        for i, gate in enumerate(circuit.gates):
            if gate.xround and gate.round == r + 1:
                last_perm = max(last_perm, report.gate_completion[i])
        perm.append(last_perm - b)
    report.perm_latencies = perm


def report(
    sim: SimReport, config: FactoryConfig | None = None, error_model: ErrorModel | None = None
) -> SimReport:
    """Finalize a report; with an error model, adds physical volume.

    Physical volume charges each round's physical-qubit area for that
    round's latency (barrier steps excluded).
    """
    out = replace(sim)
    if config is not None and error_model is not None:
        phys = 0
        for r, lat in enumerate(sim.round_latencies, start=1):
            phys += round_area(config, error_model, r) * lat
        out.physical_volume = phys
    return out


def trace_to_csv(trace: list[TraceRow]) -> str:
    lines = ["timestep,gate_index,kind,path_length,stalled"]
    for row in trace:
        lines.append(
            f"{row.timestep},{row.gate_index},{row.kind},{row.path_length},{int(row.stalled)}"
        )
    return "\n".join(lines) + "\n"
