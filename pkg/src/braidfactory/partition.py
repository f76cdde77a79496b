"""Multilevel recursive graph bisection paired with recursive grid bisection.

Coarsening contracts a greedy heavy-edge matching until the graph is
small; the coarsest graph is split by BFS region growth and the cut is
refined with Fiduccia-Mattheyses single-vertex moves, then projected
back level by level (one refinement pass per projection).  Embedding
recursively matches every graph bisection with a proportional split of
the grid rectangle along its longer axis.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

from .interaction import InteractionGraph
from .layout import GridMapping, MappingError

COARSEN_STOP_VERTICES = 24
COARSEN_STOP_RATIO = 0.9


class PartitionError(ValueError):
    pass


@dataclass
class WeightedGraph:
    """Vertices 0..n-1 with weights; undirected weighted edges."""

    n: int
    weights: list[float]
    edges: dict[tuple[int, int], float]

    @classmethod
    def from_interaction(cls, graph: InteractionGraph) -> "WeightedGraph":
        index = {q: i for i, q in enumerate(graph.vertices)}
        edges = {}
        for (a, b), data in graph.edges.items():
            ia, ib = index[a], index[b]
            key = (ia, ib) if ia < ib else (ib, ia)
            edges[key] = edges.get(key, 0.0) + data.mult
        return cls(len(graph.vertices), [1.0] * len(graph.vertices), edges)

    def adjacency(self) -> list[list[tuple[int, float]]]:
        adj: list[list[tuple[int, float]]] = [[] for _ in range(self.n)]
        for (a, b), w in self.edges.items():
            adj[a].append((b, w))
            adj[b].append((a, w))
        return adj

    def total_weight(self) -> float:
        return sum(self.weights)


@dataclass
class CoarseGraph:
    """One level of the coarsening hierarchy with its projection map."""

    level: int
    graph: WeightedGraph
    parent: list[int] | None = None  # finer vertex -> this level's vertex


@dataclass
class Bisection:
    side: list[int]  # 0 / 1 per vertex of the finest graph
    cut_weight: float
    balance: float

    def recomputed_cut(self, graph: WeightedGraph) -> float:
        return sum(w for (a, b), w in graph.edges.items() if self.side[a] != self.side[b])


def coarsen(graph: WeightedGraph, stats: dict | None = None) -> list[CoarseGraph]:
    """Heavy-edge-matching hierarchy, finest first.

    Matching greedily takes edges by descending weight (ties by the
    smaller endpoint pair); contraction sums vertex weights and merges
    parallel edges.  Stops below ``COARSEN_STOP_VERTICES`` vertices or
    when a step shrinks the graph by less than 10 percent.
    """
    levels = [CoarseGraph(0, graph)]
    current = graph
    while current.n >= COARSEN_STOP_VERTICES:
        order = sorted(current.edges.items(), key=lambda kv: (-kv[1], kv[0]))
        if stats is not None:
            stats["edge_visits"] = stats.get("edge_visits", 0) + len(order)
        matched = [False] * current.n
        mate = list(range(current.n))
        pairs = 0
        for (a, b), _w in order:
            if not matched[a] and not matched[b]:
                matched[a] = matched[b] = True
                mate[a] = b
                mate[b] = a
                pairs += 1
        if pairs == 0 or (current.n - pairs) > COARSEN_STOP_RATIO * current.n:
            break
        parent = [-1] * current.n
        nxt = 0
        for v in range(current.n):
            if parent[v] != -1:
                continue
            parent[v] = nxt
            if mate[v] != v:
                parent[mate[v]] = nxt
            nxt += 1
        weights = [0.0] * nxt
        for v in range(current.n):
            weights[parent[v]] += current.weights[v]
        edges: dict[tuple[int, int], float] = {}
        for (a, b), w in current.edges.items():
            ca, cb = parent[a], parent[b]
            if ca == cb:
                continue
            key = (ca, cb) if ca < cb else (cb, ca)
            edges[key] = edges.get(key, 0.0) + w
        current = WeightedGraph(nxt, weights, edges)
        levels.append(CoarseGraph(len(levels), current, parent))
    return levels


def _initial_split(graph: WeightedGraph) -> list[int]:
    """BFS region growth from the heaviest vertex until half weight."""
    from collections import deque

    total = graph.total_weight()
    adj = graph.adjacency()
    side = [1] * graph.n
    visited = [False] * graph.n
    acc = 0.0
    order = sorted(range(graph.n), key=lambda v: (-graph.weights[v], v))
    queue: deque[int] = deque()
    taken = 0
    while acc < total / 2 and taken < graph.n:
        if not queue:
            for v in order:
                if not visited[v]:
                    queue.append(v)
                    visited[v] = True
                    break
            else:
                break
        v = queue.popleft()
        side[v] = 0
        acc += graph.weights[v]
        taken += 1
        for nb, _w in sorted(adj[v]):
            if not visited[nb]:
                visited[nb] = True
                queue.append(nb)
    return side


def _fm_pass(
    graph: WeightedGraph,
    side: list[int],
    tolerance: float,
    stats: dict | None = None,
) -> float:
    """One Fiduccia-Mattheyses pass; returns the cut improvement.

    Every vertex moves at most once, balance-respecting, best gain first
    (ties by smallest id); afterwards the best prefix of moves is kept.
    """
    adj = graph.adjacency()
    total = graph.total_weight()
    limit = max(tolerance * total, max(graph.weights, default=0.0))
    wside = [0.0, 0.0]
    for v in range(graph.n):
        wside[side[v]] += graph.weights[v]
    gains = [0.0] * graph.n
    for v in range(graph.n):
        g = 0.0
        for nb, w in adj[v]:
            g += w if side[nb] != side[v] else -w
        gains[v] = g
    if stats is not None:
        stats["edge_visits"] = stats.get("edge_visits", 0) + 2 * len(graph.edges)
    heap = [(-gains[v], v) for v in range(graph.n)]
    heapq.heapify(heap)
    locked = [False] * graph.n
    moves: list[int] = []
    cum = 0.0
    best_cum = 0.0
    best_len = 0
    stale = set()
    while heap:
        ng, v = heapq.heappop(heap)
        if locked[v]:
            continue
        if -ng != gains[v]:
            continue  # stale entry
        src = side[v]
        new_imbalance = abs((wside[1 - src] + graph.weights[v]) - (wside[src] - graph.weights[v]))
        if new_imbalance > limit and new_imbalance > abs(wside[0] - wside[1]):
            continue
        locked[v] = True
        side[v] = 1 - src
        wside[src] -= graph.weights[v]
        wside[1 - src] += graph.weights[v]
        cum += gains[v]
        moves.append(v)
        if cum > best_cum + 1e-12:
            best_cum = cum
            best_len = len(moves)
        for nb, w in adj[v]:
            if locked[nb]:
                continue
            # v just joined side[v]: an edge to a same-side neighbor is no
            # longer cut (its gain drops); an opposite-side edge is now cut
            gains[nb] += -2 * w if side[nb] == side[v] else 2 * w
            heapq.heappush(heap, (-gains[nb], nb))
        if stats is not None:
            stats["edge_visits"] = stats.get("edge_visits", 0) + len(adj[v])
    for v in moves[best_len:]:
        side[v] = 1 - side[v]
    return best_cum


def bisect(
    levels: list[CoarseGraph],
    tolerance: float = 0.1,
    stats: dict | None = None,
) -> Bisection:
    """Split the hierarchy's finest graph into two balanced sides.

    The coarsest graph gets region growth plus FM passes to a fixed
    point; each projection to a finer level gets one FM pass.
    """
    coarsest = levels[-1].graph
    side = _initial_split(coarsest)
    for _ in range(50):  # cut strictly decreases per improving pass
        if _fm_pass(coarsest, side, tolerance, stats) <= 1e-12:
            break
    for lvl in range(len(levels) - 1, 0, -1):
        parent = levels[lvl].parent
        finer = levels[lvl - 1].graph
        side = [side[parent[v]] for v in range(finer.n)]
        _fm_pass(finer, side, tolerance, stats)
    finest = levels[0].graph
    cut = sum(w for (a, b), w in finest.edges.items() if side[a] != side[b])
    wside = [0.0, 0.0]
    for v in range(finest.n):
        wside[side[v]] += finest.weights[v]
    return Bisection(side=side, cut_weight=cut, balance=abs(wside[0] - wside[1]))


def bisect_graph(graph: WeightedGraph, tolerance: float = 0.1, stats: dict | None = None) -> Bisection:
    return bisect(coarsen(graph, stats), tolerance, stats)


# ---------------------------------------------------------------------------
# grid embedding
# ---------------------------------------------------------------------------


def embed(
    graph: InteractionGraph,
    grid_width: int,
    grid_height: int,
    tolerance: float = 0.1,
    stats: dict | None = None,
) -> GridMapping:
    """Recursive bisection embedding onto a width x height grid.

    Each graph bisection is matched by a split of the current rectangle
    along its longer axis, sized proportionally to the part weights and
    clamped so both sub-rectangles keep enough cells; the part holding
    the smallest vertex id takes the left/top piece.  Deterministic.
    """
    n = graph.n
    if grid_width * grid_height < n:
        raise PartitionError(f"grid {grid_width}x{grid_height} below capacity for {n} vertices")
    wg = WeightedGraph.from_interaction(graph)
    placement: dict[int, tuple[int, int]] = {}

    def rec(vertices: list[int], sub: WeightedGraph, rect: tuple[int, int, int, int]):
        x0, y0, w, h = rect
        if not vertices:
            return
        if len(vertices) == 1:
            placement[graph.vertices[vertices[0]]] = (x0, y0)
            return
        bis = bisect_graph(sub, tolerance, stats)
        idx_a = [i for i in range(sub.n) if bis.side[i] == 0]
        idx_b = [i for i in range(sub.n) if bis.side[i] == 1]
        if not idx_a or not idx_b:
            half = len(vertices) // 2
            idx_a, idx_b = list(range(half)), list(range(half, len(vertices)))
        part_a = [vertices[i] for i in idx_a]
        part_b = [vertices[i] for i in idx_b]
        if min(part_b) < min(part_a):
            part_a, part_b = part_b, part_a
            idx_a, idx_b = idx_b, idx_a
        na, nb = len(part_a), len(part_b)
        if w >= h:
            span, lateral = w, h
        else:
            span, lateral = h, w
        target = _feasible_part_size(na, na + nb, span, lateral)
        if target is None:
            raise PartitionError(
                f"infeasible split: {na}+{nb} vertices in {w}x{h} rectangle"
            )
        if target != na:
            # re-balance: discrete column split cannot honor the FM balance
            vpos = {v: i for i, v in enumerate(vertices)}
            part_a, part_b = _shift_vertices(sub, vertices, idx_a, idx_b, target)
            idx_a = [vpos[v] for v in part_a]
            idx_b = [vpos[v] for v in part_b]
            na, nb = len(part_a), len(part_b)
        frac = na / (na + nb)
        cut_lo = math.ceil(na / lateral)
        cut_hi = span - math.ceil(nb / lateral)
        cut = min(max(int(round(span * frac)), cut_lo), cut_hi)
        if w >= h:
            rect_a = (x0, y0, cut, h)
            rect_b = (x0 + cut, y0, w - cut, h)
        else:
            rect_a = (x0, y0, w, cut)
            rect_b = (x0, y0 + cut, w, h - cut)
        rec(part_a, _induced(sub, idx_a), rect_a)
        rec(part_b, _induced(sub, idx_b), rect_b)

    all_vertices = list(range(n))
    rec(all_vertices, wg, (0, 0, grid_width, grid_height))
    return GridMapping(grid_width, grid_height, placement)


def _feasible_part_size(na: int, n: int, span: int, lateral: int) -> int | None:
    """Closest part size to ``na`` whose column split fits the rectangle."""
    for delta in range(n):
        for cand in (na + delta, na - delta):
            if not 1 <= cand <= n - 1:
                continue
            if math.ceil(cand / lateral) <= span - math.ceil((n - cand) / lateral):
                return cand
    return None


def _shift_vertices(sub: WeightedGraph, vertices, idx_a, idx_b, target_a):
    """Move best-gain vertices between sides until |A| hits the target."""
    side = [0] * sub.n
    for i in idx_b:
        side[i] = 1
    adj = sub.adjacency()

    def gain(v):
        g = 0.0
        for nb, w in adj[v]:
            g += w if side[nb] != side[v] else -w
        return g

    count_a = len(idx_a)
    while count_a != target_a:
        src_side = 0 if count_a > target_a else 1
        cands = [i for i in range(sub.n) if side[i] == src_side]
        best = max(cands, key=lambda i: (gain(i), -i))
        side[best] = 1 - src_side
        count_a += -1 if src_side == 0 else 1
    part_a = [vertices[i] for i in range(sub.n) if side[i] == 0]
    part_b = [vertices[i] for i in range(sub.n) if side[i] == 1]
    return part_a, part_b


def _induced(graph: WeightedGraph, keep: list[int]) -> WeightedGraph:
    remap = {old: new for new, old in enumerate(keep)}
    weights = [graph.weights[old] for old in keep]
    edges: dict[tuple[int, int], float] = {}
    for (a, b), w in graph.edges.items():
        if a in remap and b in remap:
            ra, rb = remap[a], remap[b]
            key = (ra, rb) if ra < rb else (rb, ra)
            edges[key] = w
    return WeightedGraph(len(keep), weights, edges)
