"""Force-directed annealing of grid mappings.

Three force laws push vertices toward braid-friendly configurations:
neighborhood-centroid attraction (shortens edges), inverse-square
repulsion between edge midpoints (spreads edges out), and a magnetic
dipole model that rotates edges toward (anti-)parallel alignment to
remove crossings.  Poles are assigned by 2-coloring each timestep
layer, whose subgraph is always a union of disjoint paths.

The annealer proposes single-vertex moves along the net force and
accepts them when a weighted cost of average edge length, average edge
spacing and crossing count does not increase (optionally with a
simulated-annealing temperature).  When progress stalls it applies
community-level kicks, alternating between separating communities and
gathering the spatial clusters of each community.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.cluster.vq import kmeans2

from . import _geom
from .interaction import InteractionGraph, from_circuit, layers as circuit_layers
from .layout import GridMapping


@dataclass
class ForceParams:
    attraction_gain: float = 1.0
    repulsion_gain: float = 1.0
    dipole_gain: float = 1.0
    w_len: float = 1.0
    w_space: float = 1.0
    w_cross: float | None = None  # None: 2 x initial average edge length
    max_iters: int = 120
    convergence_window: int = 8
    temperature: float = 0.0
    cooling: float = 0.95
    sa_mode: bool = False
    seed: int = 0
    delta: float = 0.25  # singularity guard, tiles
    cutoff: float = 6.0  # dipole interaction radius, tiles
    move_radius: int = 3
    move_budget: int | None = None
    use_swaps: bool = False

    def validate(self):
        if not 0.0 < self.cooling < 1.0:
            raise ValueError(f"cooling must lie in (0,1), got {self.cooling}")
        for name in ("attraction_gain", "repulsion_gain", "dipole_gain",
                     "w_len", "w_space"):
            if getattr(self, name) < 0 or not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite and >= 0")


@dataclass
class ForceStats:
    repulsion_pairs: int = 0
    dipole_pairs: int = 0
    moves_accepted: int = 0
    kicks: int = 0


# ---------------------------------------------------------------------------
# force fields (arrays aligned with graph.vertices order)
# ---------------------------------------------------------------------------


def centroid_attraction(
    mapping: GridMapping, graph: InteractionGraph, params: ForceParams | None = None
) -> np.ndarray:
    """Pull each vertex toward the mean position of its distinct neighbors;
    magnitude proportional to the distance.  Isolated vertices feel nothing."""
    params = params or ForceParams()
    pos = mapping.positions(graph.vertices).astype(np.float64)
    u, v, _w = graph.edge_arrays()
    acc = np.zeros_like(pos)
    deg = np.zeros(len(pos))
    np.add.at(acc, u, pos[v])
    np.add.at(acc, v, pos[u])
    np.add.at(deg, u, 1.0)
    np.add.at(deg, v, 1.0)
    mask = deg > 0
    field = np.zeros_like(pos)
    field[mask] = params.attraction_gain * (acc[mask] / deg[mask, None] - pos[mask])
    return field


def edge_repulsion(
    mapping: GridMapping,
    graph: InteractionGraph,
    params: ForceParams | None = None,
    stats: ForceStats | None = None,
) -> np.ndarray:
    """Inverse-square repulsion between the midpoints of every edge pair,
    split half to each endpoint of the respective edges.

    Coincident midpoints are clamped at ``delta`` with a deterministic +x
    push on the lexicographically earlier edge.
    """
    params = params or ForceParams()
    pos = mapping.positions(graph.vertices).astype(np.float64)
    u, v, _w = graph.edge_arrays()
    m = len(u)
    field = np.zeros_like(pos)
    if m < 2:
        return field
    mids = (pos[u] + pos[v]) / 2.0
    gain = params.repulsion_gain
    delta = params.delta
    edge_force = np.zeros((m, 2))
    for i in range(m - 1):
        d = mids[i] - mids[i + 1 :]
        dist = np.sqrt((d * d).sum(axis=1))
        clamped = np.maximum(dist, delta)
        mag = gain / (clamped * clamped)
        dirs = np.empty_like(d)
        ok = dist > 1e-12
        dirs[ok] = d[ok] / dist[ok, None]
        dirs[~ok] = (1.0, 0.0)  # tie-break: push earlier edge along +x
        f = dirs * mag[:, None]
        edge_force[i] += f.sum(axis=0)
        edge_force[i + 1 :] -= f
    if stats is not None:
        stats.repulsion_pairs += m * (m - 1) // 2
    half = edge_force / 2.0
    np.add.at(field, u, half)
    np.add.at(field, v, half)
    return field


def _layer_poles(layer_edges: list[tuple[int, int]]) -> dict[int, int]:
    """2-color a union of disjoint paths; traversal starts at the smallest
    qubit id endpoint of each path (falling back to the smallest id on
    degenerate input).  Returns vertex -> color in {0, 1}."""
    adj: dict[int, list[int]] = {}
    for a, b in layer_edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    colors: dict[int, int] = {}
    ends = sorted(q for q, nbrs in adj.items() if len(nbrs) <= 1)
    for start in ends + sorted(adj):
        if start in colors:
            continue
        colors[start] = 0
        stack = [start]
        while stack:
            q = stack.pop()
            for nb in adj[q]:
                if nb not in colors:
                    colors[nb] = colors[q] ^ 1
                    stack.append(nb)
    return colors


def dipole_rotation(
    mapping: GridMapping,
    circuit,
    params: ForceParams | None = None,
    graph: InteractionGraph | None = None,
    layer_cache: list | None = None,
    stats: ForceStats | None = None,
) -> np.ndarray:
    """Pole forces from the per-layer dipole model.

    Within each timestep layer, opposite poles attract and identical
    poles repel with inverse-square magnitude, restricted to pairs
    within the cutoff radius and excluding a pole pair belonging to the
    same edge.  Contributions are summed over layers.
    """
    params = params or ForceParams()
    graph = graph if graph is not None else from_circuit(circuit)
    lyrs = layer_cache if layer_cache is not None else circuit_layers(circuit)
    pos = mapping.positions(graph.vertices).astype(np.float64)
    index = {q: i for i, q in enumerate(graph.vertices)}
    field = np.zeros_like(pos)
    gain, delta, cutoff = params.dipole_gain, params.delta, params.cutoff
    bin_size = max(1.0, cutoff)
    for layer in lyrs:
        edges = [e for e in layer.edges if e[0] in index and e[1] in index]
        if len(edges) < 2:
            continue
        colors = _layer_poles(edges)
        verts = sorted(colors)
        same_edge = {(min(a, b), max(a, b)) for a, b in edges}
        bins: dict[tuple[int, int], list[int]] = {}
        for q in verts:
            i = index[q]
            key = (int(pos[i, 0] // bin_size), int(pos[i, 1] // bin_size))
            bins.setdefault(key, []).append(q)
        for q in verts:
            i = index[q]
            bx, by = int(pos[i, 0] // bin_size), int(pos[i, 1] // bin_size)
            for nx in (bx - 1, bx, bx + 1):
                for ny in (by - 1, by, by + 1):
                    for p in bins.get((nx, ny), ()):  # noqa: B023
                        if p <= q:
                            continue
                        if (q, p) in same_edge or (p, q) in same_edge:
                            continue
                        j = index[p]
                        d = pos[i] - pos[j]
                        dist = math.hypot(d[0], d[1])
                        if dist > cutoff:
                            continue
                        mag = gain / max(dist, delta) ** 2
                        if dist > 1e-12:
                            direction = d / dist
                        else:
                            direction = np.array((1.0, 0.0))
                        sign = 1.0 if colors[q] == colors[p] else -1.0
                        field[i] += sign * mag * direction
                        field[j] -= sign * mag * direction
                        if stats is not None:
                            stats.dipole_pairs += 1
    return field


# ---------------------------------------------------------------------------
# community kicks
# ---------------------------------------------------------------------------


def _unit_step(vec: np.ndarray) -> tuple[int, int]:
    """Round a direction to a one-tile step (zero stays zero)."""
    n = math.hypot(vec[0], vec[1])
    if n < 1e-9:
        return (0, 0)
    return (int(round(vec[0] / n)), int(round(vec[1] / n)))


def _apply_translations(
    mapping: GridMapping, moves: dict[int, tuple[int, int]]
) -> GridMapping:
    """Translate qubits by per-qubit steps; colliding moves are dropped
    (processed in qubit id order)."""
    placement = dict(mapping.placement)
    occupied = set(placement.values())
    for q in sorted(moves):
        dx, dy = moves[q]
        if dx == 0 and dy == 0:
            continue
        x, y = placement[q]
        nx, ny = x + dx, y + dy
        if not (0 <= nx < mapping.width and 0 <= ny < mapping.height):
            continue
        if (nx, ny) in occupied:
            continue
        occupied.discard((x, y))
        occupied.add((nx, ny))
        placement[q] = (nx, ny)
    return GridMapping(mapping.width, mapping.height, placement, dict(mapping.midpoints))


def _spatial_clusters(points: np.ndarray, link_radius: float = 2.0) -> int:
    """Cluster count via the gap rule: points closer than ``link_radius``
    (Chebyshev) belong to one spatial cluster."""
    n = len(points)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        d = np.abs(points[i + 1 :] - points[i]).max(axis=1)
        for off in np.nonzero(d <= link_radius)[0]:
            ra, rb = find(i), find(i + 1 + int(off))
            if ra != rb:
                parent[rb] = ra
    return len({find(i) for i in range(n)})


def community_kick(
    mapping: GridMapping,
    partition: dict[int, int],
    mode: str,
    seed: int = 0,
) -> GridMapping:
    """One community-level transformation of the mapping.

    ``Separate``: push each community one tile away from the global
    centroid along its own centroid direction (degenerate directions
    split deterministically along +/-x by community index).
    ``Gather``: per community, locate its spatial clusters (k-means with
    the gap-derived cluster count) and pull every cluster one tile
    toward their mutual centroid.
    """
    if mode not in ("Separate", "Gather"):
        raise ValueError(f"unknown kick mode {mode!r}")
    groups: dict[int, list[int]] = {}
    for q, c in partition.items():
        if q in mapping.placement:
            groups.setdefault(c, []).append(q)
    moves: dict[int, tuple[int, int]] = {}
    if mode == "Separate":
        all_pos = np.array([mapping.placement[q] for qs in groups.values() for q in qs], float)
        center = all_pos.mean(axis=0)
        for idx, comm in enumerate(sorted(groups)):
            qs = sorted(groups[comm])
            cpos = np.array([mapping.placement[q] for q in qs], float)
            direction = cpos.mean(axis=0) - center
            step = _unit_step(direction)
            if step == (0, 0):
                step = (1, 0) if idx % 2 == 0 else (-1, 0)
            for q in qs:
                moves[q] = step
    else:
        rng = np.random.default_rng(seed)
        for comm in sorted(groups):
            qs = sorted(groups[comm])
            pts = np.array([mapping.placement[q] for q in qs], float)
            n_clusters = _spatial_clusters(pts)
            if n_clusters <= 1 or len(qs) <= n_clusters:
                continue
            centroids, labels = kmeans2(
                pts, n_clusters, minit="++", seed=int(rng.integers(2**31))
            )
            mutual = centroids.mean(axis=0)
            for ci in range(n_clusters):
                step = _unit_step(mutual - centroids[ci])
                for q, lab in zip(qs, labels):
                    if lab == ci:
                        moves[q] = step
    return _apply_translations(mapping, moves)


# ---------------------------------------------------------------------------
# annealing loop
# ---------------------------------------------------------------------------


class _CostState:
    """Incrementally maintained mapping cost over the interaction graph."""

    def __init__(self, mapping: GridMapping, graph: InteractionGraph, params: ForceParams):
        self.graph = graph
        self.params = params
        self.u, self.v, self.w = graph.edge_arrays()
        self.m = len(self.u)
        self.n = graph.n
        self.pos = mapping.positions(graph.vertices).astype(np.float64)
        self.incident: list[list[int]] = [[] for _ in range(self.n)]
        for e in range(self.m):
            self.incident[self.u[e]].append(e)
            self.incident[self.v[e]].append(e)
        self.w_total = float(self.w.sum()) if self.m else 1.0
        self.n_pairs = self.m * (self.m - 1) // 2
        self._rebuild()
        if params.w_cross is None:
            self.w_cross = 2.0 * self.avg_len()
        else:
            self.w_cross = params.w_cross

    def _rebuild(self):
        pos, u, v = self.pos, self.u, self.v
        d = pos[u] - pos[v]
        self.lengths = np.sqrt((d * d).sum(axis=1))
        self.mids = (pos[u] + pos[v]) / 2.0
        self.len_sum = float((self.lengths * self.w).sum())
        self.space_sum = _geom.pairwise_midpoint_distance_sum(self.mids) if self.m >= 2 else 0.0
        ip = self.pos.astype(np.int64)
        self.seg_a = ip[u]
        self.seg_b = ip[v]
        self.crossings = _geom.count_crossings(self.seg_a, self.seg_b, u, v) if self.m >= 2 else 0

    def avg_len(self) -> float:
        return self.len_sum / self.w_total if self.m else 0.0

    def avg_space(self) -> float:
        return self.space_sum / self.n_pairs if self.n_pairs else 0.0

    def cost(self) -> float:
        p = self.params
        return (
            p.w_len * self.avg_len()
            - p.w_space * self.avg_space()
            + self.w_cross * self.crossings
        )

    def eval_move(self, vidx: int, new_xy: tuple[int, int]):
        """Return (delta_cost, undo_payload) without committing."""
        edges = self.incident[vidx]
        old_xy = self.pos[vidx].copy()
        other_mask = np.ones(self.m, dtype=bool)
        for e in edges:
            other_mask[e] = False

        d_len = 0.0
        d_space = 0.0
        d_cross = 0
        if edges:
            before_cross = 0
            for e in edges:
                before_cross += _geom.crossings_of_one(e, self.seg_a, self.seg_b, self.u, self.v)
            before_cross -= self._within_cross(edges)
            mids_other = self.mids[other_mask]
            for e in edges:
                diffs = mids_other - self.mids[e]
                d_space -= float(np.sqrt((diffs * diffs).sum(axis=1)).sum())
            d_space -= self._within_space(edges, self.mids)

            new_pos = self.pos.copy()
            new_pos[vidx] = new_xy
            new_lengths = {}
            new_mids = self.mids.copy()
            seg_a2 = self.seg_a.copy()
            seg_b2 = self.seg_b.copy()
            ip = np.array(new_xy, dtype=np.int64)
            for e in edges:
                a, b = self.u[e], self.v[e]
                dvec = new_pos[a] - new_pos[b]
                nl = math.hypot(dvec[0], dvec[1])
                new_lengths[e] = nl
                d_len += (nl - self.lengths[e]) * self.w[e]
                new_mids[e] = (new_pos[a] + new_pos[b]) / 2.0
                if a == vidx:
                    seg_a2[e] = ip
                else:
                    seg_b2[e] = ip
            after_cross = 0
            for e in edges:
                after_cross += _geom.crossings_of_one(e, seg_a2, seg_b2, self.u, self.v)
            after_cross -= self._within_cross(edges, seg_a2, seg_b2)
            mids_other2 = new_mids[other_mask]
            for e in edges:
                diffs = mids_other2 - new_mids[e]
                d_space += float(np.sqrt((diffs * diffs).sum(axis=1)).sum())
            d_space += self._within_space(edges, new_mids)
            d_cross = after_cross - before_cross
            payload = (new_lengths, new_mids, seg_a2, seg_b2)
        else:
            payload = ({}, None, None, None)

        p = self.params
        delta = (
            p.w_len * d_len / self.w_total
            - (p.w_space * d_space / self.n_pairs if self.n_pairs else 0.0)
            + self.w_cross * d_cross
        )
        return delta, (vidx, old_xy, new_xy, d_len, d_space, d_cross, payload)

    def _within_cross(self, edges, seg_a=None, seg_b=None) -> int:
        seg_a = self.seg_a if seg_a is None else seg_a
        seg_b = self.seg_b if seg_b is None else seg_b
        total = 0
        for i, e in enumerate(edges):
            for f in edges[i + 1 :]:
                if (
                    self.u[e] == self.u[f] or self.u[e] == self.v[f]
                    or self.v[e] == self.u[f] or self.v[e] == self.v[f]
                ):
                    continue
                hit = _geom.segments_intersect(seg_a[e], seg_b[e], seg_a[f], seg_b[f])
                total += int(hit)
        return total

    def _within_space(self, edges, mids) -> float:
        total = 0.0
        for i, e in enumerate(edges):
            for f in edges[i + 1 :]:
                d = mids[e] - mids[f]
                total += math.hypot(d[0], d[1])
        return total

    def commit(self, undo):
        vidx, _old, new_xy, d_len, d_space, d_cross, payload = undo
        new_lengths, new_mids, seg_a2, seg_b2 = payload
        self.pos[vidx] = new_xy
        for e, nl in new_lengths.items():
            self.lengths[e] = nl
        if new_mids is not None:
            self.mids = new_mids
            self.seg_a = seg_a2
            self.seg_b = seg_b2
        self.len_sum += d_len
        self.space_sum += d_space
        self.crossings += d_cross


_OFFSETS_CACHE: dict[int, list[tuple[int, int]]] = {}


def _move_offsets(radius: int) -> list[tuple[int, int]]:
    offs = _OFFSETS_CACHE.get(radius)
    if offs is None:
        offs = [
            (dx, dy)
            for dx in range(-radius, radius + 1)
            for dy in range(-radius, radius + 1)
            if 0 < dx * dx + dy * dy <= radius * radius
        ]
        offs.sort(key=lambda o: (o[0] * o[0] + o[1] * o[1], o[1], o[0]))
        _OFFSETS_CACHE[radius] = offs
    return offs


def anneal(
    mapping: GridMapping,
    circuit,
    params: ForceParams | None = None,
    graph: InteractionGraph | None = None,
    partition: dict[int, int] | None = None,
    stats: ForceStats | None = None,
    trace: list | None = None,
    frozen: set[int] | None = None,
) -> GridMapping:
    """Force-directed transformation of ``mapping``; greedy mode never
    returns a mapping costlier than the input (exact recomputation at
    both ends decides).

    Vertices are visited in descending net-force magnitude; each
    proposes a move to the nearest free cell within a +/-45 degree cone
    of its force, radius ``move_radius``.  ``trace``, when provided,
    collects (iteration, cost, crossings) rows.
    """
    params = params or ForceParams()
    params.validate()
    graph = graph if graph is not None else from_circuit(circuit)
    if graph.m == 0 or graph.n == 0:
        return GridMapping(mapping.width, mapping.height, dict(mapping.placement),
                           dict(mapping.midpoints))
    layer_cache = circuit_layers(circuit) if circuit is not None else []
    if partition is None:
        if circuit is not None and getattr(circuit, "modules", None):
            from .interaction import structural_communities

            partition = structural_communities(circuit)
        else:
            from .interaction import communities

            partition = communities(graph, seed=params.seed)
    rng = np.random.default_rng(params.seed)
    stats = stats if stats is not None else ForceStats()

    state = _CostState(mapping, graph, params)
    work = GridMapping(mapping.width, mapping.height, dict(mapping.placement),
                       dict(mapping.midpoints))
    occupied = set(work.placement.values())
    initial_cost = state.cost()
    best_cost = initial_cost
    best_placement = dict(work.placement)
    cos45 = math.sqrt(0.5) - 1e-9
    offsets = _move_offsets(params.move_radius)
    stall_iters = 0
    kick_mode = "Separate"
    temperature = params.temperature

    for it in range(params.max_iters):
        field = centroid_attraction(work, graph, params)
        field += edge_repulsion(work, graph, params, stats=stats)
        if layer_cache:
            field += dipole_rotation(work, circuit, params, graph=graph,
                                     layer_cache=layer_cache, stats=stats)
        mags = np.sqrt((field * field).sum(axis=1))
        order = np.argsort(-mags, kind="stable")
        if params.move_budget is not None:
            order = order[: params.move_budget]
        accepted_any = False
        for vidx in order:
            fx, fy = field[vidx]
            fmag = mags[vidx]
            if fmag < 1e-9:
                continue
            q = graph.vertices[vidx]
            if frozen is not None and q in frozen:
                continue
            x, y = work.placement[q]
            chosen = None
            best_align = -2.0
            best_d2 = None
            for dx, dy in offsets:
                d2 = dx * dx + dy * dy
                if best_d2 is not None and d2 > best_d2:
                    break  # offsets sorted by distance: nearest candidate wins
                align = (dx * fx + dy * fy) / (math.hypot(dx, dy) * fmag)
                if align < cos45:
                    continue
                nx, ny = x + dx, y + dy
                if not (0 <= nx < work.width and 0 <= ny < work.height):
                    continue
                if (nx, ny) in occupied:
                    continue
                if best_d2 is None or align > best_align:
                    chosen = (nx, ny)
                    best_d2 = d2
                    best_align = align
            if chosen is None and params.use_swaps:
                # fall back to swapping with the nearest in-cone occupant
                for dx, dy in offsets:
                    align = (dx * fx + dy * fy) / (math.hypot(dx, dy) * fmag)
                    if align < cos45:
                        continue
                    nx, ny = x + dx, y + dy
                    if 0 <= nx < work.width and 0 <= ny < work.height and (nx, ny) in occupied:
                        if _try_swap(state, work, graph, occupied, q, (nx, ny), params,
                                     temperature, rng):
                            accepted_any = True
                            stats.moves_accepted += 1
                        break
                continue
            if chosen is None:
                continue
            delta, undo = state.eval_move(int(vidx), chosen)
            accept = delta <= 1e-12
            if not accept and params.sa_mode and temperature > 1e-12:
                accept = rng.random() < math.exp(-delta / temperature)
            if accept:
                state.commit(undo)
                occupied.discard((x, y))
                occupied.add(chosen)
                work.placement[q] = chosen
                accepted_any = True
                stats.moves_accepted += 1
        cur = state.cost()
        if cur < best_cost - 1e-12:
            best_cost = cur
            best_placement = dict(work.placement)
        if trace is not None:
            trace.append((it, cur, state.crossings))
        if params.sa_mode:
            temperature *= params.cooling
        if accepted_any:
            stall_iters = 0
        else:
            stall_iters += 1
            if stall_iters >= params.convergence_window:
                movable = {q: c for q, c in partition.items()
                           if frozen is None or q not in frozen}
                work = community_kick(work, movable, kick_mode, seed=params.seed + it)
                kick_mode = "Gather" if kick_mode == "Separate" else "Separate"
                occupied = set(work.placement.values())
                state = _CostState(work, graph, params)
                state.w_cross = (
                    params.w_cross if params.w_cross is not None else state.w_cross
                )
                stats.kicks += 1
                stall_iters = 0

    # exact end-to-end comparison: never return something worse (greedy)
    final = GridMapping(mapping.width, mapping.height, best_placement, dict(mapping.midpoints))
    if not params.sa_mode:
        exact_final = _CostState(final, graph, params)
        exact_final.w_cross = state.w_cross
        exact_init = _CostState(mapping, graph, params)
        exact_init.w_cross = state.w_cross
        if exact_final.cost() > exact_init.cost() + 1e-9:
            return GridMapping(mapping.width, mapping.height, dict(mapping.placement),
                               dict(mapping.midpoints))
    return final


def _try_swap(state, work, graph, occupied, q, target, params, temperature, rng) -> bool:
    inv = {cell: qq for qq, cell in work.placement.items()}
    other = inv.get(target)
    if other is None or other == q:
        return False
    vi = graph.index_of(q) if q in graph._index else None
    vj = graph.index_of(other) if other in graph._index else None
    if vi is None or vj is None:
        return False
    src = work.placement[q]
    d1, undo1 = state.eval_move(vi, target)
    state.commit(undo1)
    d2, undo2 = state.eval_move(vj, src)
    total = d1 + d2
    accept = total <= 1e-12
    if not accept and params.sa_mode and temperature > 1e-12:
        accept = rng.random() < math.exp(-total / temperature)
    if accept:
        state.commit(undo2)
        work.placement[q] = target
        work.placement[other] = src
        return True
    # roll back the first half
    _d, undo_back = state.eval_move(vi, tuple(int(c) for c in undo1[1]))
    state.commit(undo_back)
    return False
