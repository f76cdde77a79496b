"""Grid placements, baseline mappings, and the congestion heuristics.

A mapping is an injective assignment of logical qubits to cells of a
W x H tile grid.  Three metrics summarize how braid-friendly a mapping
is: average edge length (shorter braids overlap less), average edge
spacing (midpoint separation; farther apart is better) and the number
of edge crossings (the strongest latency predictor).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _geom
from .protocol import Circuit, Role
from .interaction import InteractionGraph


class MappingError(ValueError):
    pass


@dataclass
class GridMapping:
    width: int
    height: int
    placement: dict[int, tuple[int, int]]
    midpoints: dict[tuple[int, int], tuple[int, int]] = field(default_factory=dict)

    def cell(self, qubit: int) -> tuple[int, int]:
        return self.placement[qubit]

    @property
    def area(self) -> int:
        return self.width * self.height

    def validate(self, circuit: Circuit | None = None) -> None:
        seen: set[tuple[int, int]] = set()
        for q, (x, y) in self.placement.items():
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise MappingError(f"qubit {q} at {(x, y)} outside {self.width}x{self.height}")
            if (x, y) in seen:
                raise MappingError(f"cell {(x, y)} used twice")
            seen.add((x, y))
        for (x, y) in self.midpoints.values():
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise MappingError(f"midpoint {(x, y)} out of bounds")
        if circuit is not None:
            missing = [q for q in circuit.qubits if q not in self.placement]
            if missing:
                raise MappingError(f"{len(missing)} circuit qubits unplaced, e.g. {missing[:4]}")

    def positions(self, qubit_ids: list[int]) -> np.ndarray:
        return np.array([self.placement[q] for q in qubit_ids], dtype=np.int64)


@dataclass
class MetricReport:
    avg_edge_length: float
    avg_edge_spacing: float
    crossing_count: int


# ---------------------------------------------------------------------------
# baseline mappings
# ---------------------------------------------------------------------------

MODULE_BAND_HEIGHT = 3


def module_band_cells(k: int) -> dict[str, list[tuple[int, int]]]:
    """Relative cells of one module's 3-row band.

    Ancillas sit in a row with the outputs appended after them; each
    ancilla's injection raw pair sits directly above/below it; the tail
    raw states sit above the outputs.  Width 2k+5, height 3.
    """
    anc = [(i, 1) for i in range(k + 5)]
    out = [(k + 5 + p, 1) for p in range(k)]
    raw = []
    for j in range(2 * k + 8):
        raw.append((j // 2 + 1, 0 if j % 2 == 0 else 2))
    for i in range(k):
        # tail raws below the outputs: their injection braids then stay
        # clear of the output-to-ancilla tail chain braids
        raw.append((k + 5 + i, 2))
    return {"raw": raw, "anc": anc, "out": out}


def module_band_width(k: int) -> int:
    return 2 * k + 5


def linear_mapping(
    circuit: Circuit,
    max_width: int | None = None,
    module_gap: int = 1,
    band_gap: int = 1,
    margin: int = 1,
) -> GridMapping:
    """Deterministic hand-style layout.

    Modules tile left to right (wrapping into further band rows when a
    row would exceed ``max_width``, chosen near-square by default) and
    rounds stack top to bottom.  Under qubit reuse, later rounds reuse
    already-placed ids so the grid does not grow.  The grid is the tight
    bounding box plus a one-tile routing margin on each side.
    """
    placement: dict[int, tuple[int, int]] = {}
    if not circuit.modules:
        qubit_ids = circuit.data_qubit_ids()
        side = max(1, math.ceil(math.sqrt(len(qubit_ids))))
        for i, q in enumerate(qubit_ids):
            placement[q] = (i % side + margin, i // side + margin)
        return _finish_grid(placement, circuit, margin)

    k = circuit.capacity
    mw = module_band_width(k)
    rounds = sorted({r for (r, _m) in circuit.modules})
    band_height = {r: MODULE_BAND_HEIGHT if r == 1 else 1 for r in rounds}

    if max_width is None:
        total = 0
        for r in rounds:
            n_mod = circuit.module_count(r)
            if r > 1 and circuit.reuse.value == "reuse":
                continue
            total += n_mod * (mw + module_gap) * (band_height[r] + band_gap)
        max_width = max(mw, math.ceil(math.sqrt(total)))

    per_row = max(1, (max_width + module_gap) // (mw + module_gap))
    y_cursor = 0
    rel = module_band_cells(k)
    for r in rounds:
        n_mod = circuit.module_count(r)
        placed_rows = 0
        placed_new = False
        for m in range(n_mod):
            slots = circuit.modules[(r, m)]
            col, row = m % per_row, m // per_row
            x0 = col * (mw + module_gap)
            y0 = y_cursor + row * (band_height[r] + band_gap)
            if r == 1:
                for ids, key in ((slots.raw, "raw"), (slots.anc, "anc"), (slots.out, "out")):
                    for q, (dx, dy) in zip(ids, rel[key]):
                        placement[q] = (x0 + dx, y0 + dy)
                placed_new = True
            else:
                # raw slots are earlier-round outputs, already placed; under
                # reuse the ancilla/output ids are already placed as well
                new = [q for q in slots.anc + slots.out if q not in placement]
                for i, q in enumerate(new):
                    placement[q] = (x0 + i, y0)
                placed_new = placed_new or bool(new)
            if placed_new:
                placed_rows = max(placed_rows, row + 1)
        if placed_new:
            y_cursor += placed_rows * (band_height[r] + band_gap)
    return _finish_grid(placement, circuit, margin)


def _finish_grid(placement: dict[int, tuple[int, int]], circuit: Circuit, margin: int) -> GridMapping:
    xs = [c[0] for c in placement.values()]
    ys = [c[1] for c in placement.values()]
    min_x, min_y = min(xs), min(ys)
    shifted = {
        q: (c[0] - min_x + margin, c[1] - min_y + margin) for q, c in placement.items()
    }
    width = max(x for x, _ in shifted.values()) + 1 + margin
    height = max(y for _, y in shifted.values()) + 1 + margin
    mapping = GridMapping(width, height, shifted)
    _place_barrier_controls(mapping, circuit)
    return mapping


def _place_barrier_controls(mapping: GridMapping, circuit: Circuit) -> None:
    """Drop barrier control qubits onto free cells (scan order, margin first)."""
    ctrls = [q for q, ref in circuit.qubits.items() if ref.role is Role.BARRIER_CTRL]
    ctrls = [q for q in sorted(ctrls) if q not in mapping.placement]
    if not ctrls:
        return
    used = set(mapping.placement.values())
    free = (
        (x, y)
        for y in range(mapping.height)
        for x in range(mapping.width)
        if (x, y) not in used
    )
    for q in ctrls:
        try:
            mapping.placement[q] = next(free)
        except StopIteration:
            raise MappingError("no free cell for barrier control qubit")


def random_mapping(circuit: Circuit, width: int, height: int, seed: int) -> GridMapping:
    """Uniformly random injective placement; deterministic per seed."""
    qubit_ids = sorted(circuit.qubits)
    if width * height < len(qubit_ids):
        raise MappingError(
            f"grid {width}x{height} too small for {len(qubit_ids)} qubits"
        )
    rng = np.random.default_rng(seed)
    cells = rng.permutation(width * height)[: len(qubit_ids)]
    placement = {q: (int(c % width), int(c // width)) for q, c in zip(qubit_ids, cells)}
    return GridMapping(width, height, placement)


# ---------------------------------------------------------------------------
# congestion metrics
# ---------------------------------------------------------------------------


def _edge_geometry(mapping: GridMapping, graph: InteractionGraph):
    """(seg_a, seg_b, end_u, end_v, mult) arrays for the graph under mapping."""
    u, v, w = graph.edge_arrays()
    try:
        pos = mapping.positions(graph.vertices)
    except KeyError as exc:
        raise MappingError(f"edge endpoint not mapped: {exc}") from exc
    return pos[u], pos[v], u, v, w


def edge_length(mapping: GridMapping, graph: InteractionGraph) -> float:
    """Multiplicity-weighted mean Euclidean edge length in tile units."""
    if graph.m == 0:
        return 0.0
    a, b, _u, _v, w = _edge_geometry(mapping, graph)
    d = np.sqrt(((a - b) ** 2).sum(axis=1))
    return float((d * w).sum() / w.sum())


def edge_spacing(mapping: GridMapping, graph: InteractionGraph) -> float:
    """Mean distance between edge midpoints over distinct edge pairs."""
    if graph.m < 2:
        raise MappingError("edge spacing needs at least 2 edges")
    a, b, _u, _v, _w = _edge_geometry(mapping, graph)
    mids = (a + b) / 2.0
    n_pairs = graph.m * (graph.m - 1) // 2
    return _geom.pairwise_midpoint_distance_sum(mids) / n_pairs


def crossing_count(mapping: GridMapping, graph: InteractionGraph) -> int:
    """Unordered edge pairs whose closed segments intersect.

    Pairs sharing an endpoint qubit are excluded; collinear overlap and
    point contact both count.
    """
    if graph.m < 2:
        return 0
    a, b, u, v, _w = _edge_geometry(mapping, graph)
    return _geom.count_crossings(a, b, u, v)


def evaluate(mapping: GridMapping, graph: InteractionGraph) -> MetricReport:
    return MetricReport(
        avg_edge_length=edge_length(mapping, graph),
        avg_edge_spacing=edge_spacing(mapping, graph) if graph.m >= 2 else 0.0,
        crossing_count=crossing_count(mapping, graph),
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def serialize_mapping(mapping: GridMapping) -> str:
    lines = [f"grid {mapping.width} {mapping.height}"]
    for q in sorted(mapping.placement):
        x, y = mapping.placement[q]
        lines.append(f"{q} {x} {y}")
    for (u, v) in sorted(mapping.midpoints):
        x, y = mapping.midpoints[(u, v)]
        lines.append(f"mid {u} {v} {x} {y}")
    return "\n".join(lines) + "\n"


def parse_mapping(text: str) -> GridMapping:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] != "grid":
        raise MappingError("not a mapping file")
    mapping = GridMapping(int(head[1]), int(head[2]), {})
    for line in lines[1:]:
        toks = line.split()
        if toks[0] == "mid":
            mapping.midpoints[(int(toks[1]), int(toks[2]))] = (int(toks[3]), int(toks[4]))
        else:
            mapping.placement[int(toks[0])] = (int(toks[1]), int(toks[2]))
    return mapping
