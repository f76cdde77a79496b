"""Program interaction graphs, ASAP layering and community structure.

Vertices are logical qubits, edges are braided two-qubit interactions.
Two views of the same circuit are used downstream: the whole-program
graph (global mapping procedures, congestion metrics) and the per-layer
subgraphs (dipole pole assignment), which are unions of vertex-disjoint
paths because no qubit can take part in two gates at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .protocol import Circuit, GateKind, INJECT_KINDS, Role


@dataclass
class EdgeData:
    mult: float
    times: list[int] = field(default_factory=list)


@dataclass
class InteractionGraph:
    """Undirected multigraph summary: edge key is the sorted qubit pair."""

    vertices: list[int]
    edges: dict[tuple[int, int], EdgeData]
    _index: dict[int, int] = field(default_factory=dict, repr=False)
    _arrays: tuple[np.ndarray, np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        if not self._index:
            self._index = {q: i for i, q in enumerate(self.vertices)}

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def m(self) -> int:
        return len(self.edges)

    def index_of(self, qubit: int) -> int:
        return self._index[qubit]

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u_idx, v_idx, mult) arrays in sorted edge-key order."""
        if self._arrays is None:
            keys = sorted(self.edges)
            u = np.fromiter((self._index[a] for a, _ in keys), dtype=np.int64, count=len(keys))
            v = np.fromiter((self._index[b] for _, b in keys), dtype=np.int64, count=len(keys))
            w = np.fromiter((self.edges[k].mult for k in keys), dtype=np.float64, count=len(keys))
            self._arrays = (u, v, w)
        return self._arrays

    def neighbors(self) -> dict[int, list[int]]:
        nbrs: dict[int, list[int]] = {q: [] for q in self.vertices}
        for a, b in self.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        return nbrs


@dataclass
class TimestepLayer:
    """Edges active in one ASAP timestep; the subgraph is disjoint paths."""

    index: int
    edges: list[tuple[int, int]]


def _gate_pairs(gate) -> list[tuple[int, int]]:
    """Braided endpoint pairs of a gate, in path form for multi-target gates."""
    if gate.kind is GateKind.CNOT or gate.kind in INJECT_KINDS:
        return [(gate.ops[0], gate.ops[1])]
    if gate.kind is GateKind.CXX:
        return list(zip(gate.ops, gate.ops[1:]))
    return []


def _gate_star_pairs(gate) -> list[tuple[int, int]]:
    """Braided endpoint pairs with CXX as control->target star edges."""
    if gate.kind is GateKind.CXX:
        c = gate.ops[0]
        return [(c, t) for t in gate.ops[1:]]
    return _gate_pairs(gate)


def layers(circuit: Circuit) -> list[TimestepLayer]:
    """ASAP leveling: a gate sits one layer after the latest earlier gate
    sharing any of its qubits.  Barriers touch every qubit, so everything
    after a barrier lands in strictly later layers."""
    last: dict[int, int] = {}
    out: list[TimestepLayer] = []
    for gate in circuit.gates:
        lvl = 1 + max((last.get(q, 0) for q in gate.ops), default=0)
        for q in gate.ops:
            last[q] = lvl
        while len(out) < lvl:
            out.append(TimestepLayer(len(out) + 1, []))
        if gate.kind is not GateKind.BARRIER:
            out[lvl - 1].edges.extend(_gate_pairs(gate))
    return out


def gate_layers(circuit: Circuit) -> list[int]:
    """ASAP layer index of every gate, parallel to circuit.gates."""
    last: dict[int, int] = {}
    lvls = []
    for gate in circuit.gates:
        lvl = 1 + max((last.get(q, 0) for q in gate.ops), default=0)
        for q in gate.ops:
            last[q] = lvl
        lvls.append(lvl)
    return lvls


def critical_path(circuit: Circuit) -> int:
    """Layer count: the data-dependency lower bound on simulated latency."""
    lvls = gate_layers(circuit)
    return max(lvls, default=0)


def from_circuit(
    circuit: Circuit,
    injection_cost: int = 2,
    include_barriers: bool = False,
    stochastic: bool = False,
    seed: int = 0,
) -> InteractionGraph:
    """Build the whole-program interaction graph.

    CNOT contributes one edge, CXX one edge per (control, target) pair,
    and each injection contributes ``injection_cost`` braids between the
    same endpoints (expected cost 2; set ``stochastic`` for seeded
    geometric retry counts instead).  Single-qubit gates and - unless
    requested - barriers contribute nothing.  Edge timestep annotations
    are the ASAP layers of the inducing gates.
    """
    rng = np.random.default_rng(seed) if stochastic else None
    vertices = circuit.data_qubit_ids()
    edges: dict[tuple[int, int], EdgeData] = {}
    lvls = gate_layers(circuit)
    for gate, lvl in zip(circuit.gates, lvls):
        if gate.kind is GateKind.BARRIER and not include_barriers:
            continue
        if gate.kind in INJECT_KINDS:
            cost = int(rng.geometric(0.5)) if rng is not None else injection_cost
        else:
            cost = 1
        for a, b in _gate_star_pairs(gate):
            key = (a, b) if a < b else (b, a)
            data = edges.get(key)
            if data is None:
                data = edges[key] = EdgeData(0.0)
            data.mult += cost
            data.times.append(lvl)
    if include_barriers:
        vertices = sorted(circuit.qubits)
    return InteractionGraph(vertices=vertices, edges=edges)


def structural_communities(circuit: Circuit) -> dict[int, int]:
    """Community hint from the generator: one label per (round, module)."""
    keys = sorted(circuit.modules)
    label = {key: i for i, key in enumerate(keys)}
    hint = {}
    for q, ref in circuit.qubits.items():
        if ref.role is Role.BARRIER_CTRL:
            continue
        hint[q] = label[(ref.round, ref.module)]
    return hint


def communities(
    graph: InteractionGraph,
    structural_hint: dict[int, int] | None = None,
    seed: int = 0,
    max_rounds: int = 100,
) -> dict[int, int]:
    """Vertex -> community id, ids contiguous from 0.

    With a structural hint (the generator knows module membership) the
    hint wins.  Otherwise seeded label propagation: sweep vertices in a
    shuffled order, adopting the multiplicity-weighted majority label of
    the neighborhood (ties to the smallest label) until stable.
    """
    if graph.n == 0:
        raise ValueError("communities of an empty graph")
    if structural_hint is not None:
        labels = {q: structural_hint[q] for q in graph.vertices}
        return _normalize(labels)

    rng = np.random.default_rng(seed)
    labels = {q: q for q in graph.vertices}
    nbr_w: dict[int, list[tuple[int, float]]] = {q: [] for q in graph.vertices}
    for (a, b), data in graph.edges.items():
        nbr_w[a].append((b, data.mult))
        nbr_w[b].append((a, data.mult))
    order = list(graph.vertices)
    for _ in range(max_rounds):
        rng.shuffle(order)
        changed = False
        for q in order:
            if not nbr_w[q]:
                continue
            weight: dict[int, float] = {}
            for nb, w in nbr_w[q]:
                lab = labels[nb]
                weight[lab] = weight.get(lab, 0.0) + w
            best = min(weight, key=lambda lab: (-weight[lab], lab))
            if best != labels[q]:
                labels[q] = best
                changed = True
        if not changed:
            break
    return _normalize(labels)


def _normalize(labels: dict[int, int]) -> dict[int, int]:
    remap: dict[int, int] = {}
    out = {}
    for q in sorted(labels):
        lab = labels[q]
        if lab not in remap:
            remap[lab] = len(remap)
        out[q] = remap[lab]
    return out


def to_edgelist_text(graph: InteractionGraph) -> str:
    """Edge-list export: ``u v multiplicity t1,t2,...`` per line."""
    lines = [f"graph v1 n={graph.n} m={graph.m}"]
    for (a, b) in sorted(graph.edges):
        data = graph.edges[(a, b)]
        times = ",".join(map(str, data.times))
        lines.append(f"{a} {b} {data.mult:g} {times}")
    return "\n".join(lines) + "\n"
