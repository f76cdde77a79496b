"""Hierarchical stitching of multi-level factory mappings.

Modules within a round never interact, and every round's modules share
one schedule, so a single near-optimal module embedding is replicated
across the round and the fragments are concatenated.  Round boundaries
are then joined in three steps: fragment placement for the next round
(reusing measured tiles when the policy allows), minimum-distance
reassignment of output ports to input slots, and optional intermediate
destinations for the permutation braids, placed by the force-directed
machinery over a virtual midpoint graph.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import protocol as P
from .anneal import ForceParams, anneal
from .interaction import from_circuit
from .layout import GridMapping, MappingError, linear_mapping, module_band_cells
from .partition import embed

log = logging.getLogger(__name__)

BRUTE_FORCE_SLOT_LIMIT = 6


class StitchError(RuntimeError):
    pass


@dataclass
class StitchParams:
    method: str = "FD"  # module embedding: FD (band layout + anneal) or GP
    midpoint_mode: str = "annealed"  # none | valiant | annealed
    fragment_anneal_iters: int = 0
    midpoint_iters: int = 30
    seed: int = 0
    module_gap: int = 1
    band_gap: int = 1
    margin: int = 1
    assignment_rounds: int = 3


@dataclass
class StitchPlan:
    config: P.FactoryConfig
    circuit: P.Circuit
    mapping: GridMapping
    fragments: dict[int, dict[tuple[str, int], tuple[int, int]]]  # round -> slot -> rel cell
    origins: dict[tuple[int, int], tuple[int, int]]  # (round, module) -> anchor
    assignments: dict[int, dict[tuple[int, int], tuple[int, int]]]
    hints: dict[int, tuple[int, int]]
    policy: P.ReusePolicy
    reuse_expanded: bool = False

    def validate(self) -> None:
        self.mapping.validate(self.circuit)
        P.validate_circuit(self.circuit)
        for (x, y) in self.hints.values():
            if not (0 <= x < self.mapping.width and 0 <= y < self.mapping.height):
                raise MappingError(f"midpoint {(x, y)} out of bounds")


# ---------------------------------------------------------------------------
# per-round fragments
# ---------------------------------------------------------------------------


def embed_round(
    circuit: P.Circuit, round_index: int, method: str = "FD",
    seed: int = 0, anneal_iters: int = 0,
) -> dict[tuple[str, int], tuple[int, int]]:
    """Relative slot layout of one module of the given round.

    Every module of a round shares this fragment (identical schedules),
    so it is computed once on a standalone module circuit.  Keys are
    (role, slot index); rounds past the first only carry ancilla and
    output slots, their raw inputs living with the previous round.
    """
    k = circuit.capacity
    module = P.build_module(k)
    slots = module.modules[(1, 0)]
    if method == "FD":
        frag = linear_mapping(module, margin=0)
        if anneal_iters > 0:
            frag = anneal(frag, module,
                          ForceParams(max_iters=anneal_iters, seed=seed))
    elif method == "GP":
        graph = from_circuit(module)
        side = math.ceil(math.sqrt(graph.n))
        frag = embed(graph, side, math.ceil(graph.n / side))
        for q, ref in module.qubits.items():
            if q not in frag.placement:
                frag.placement[q] = _first_free(frag)
    else:
        raise StitchError(f"unknown embed method {method!r}")
    rel: dict[tuple[str, int], tuple[int, int]] = {}
    for role, ids in (("raw", slots.raw), ("anc", slots.anc), ("out", slots.out)):
        for i, q in enumerate(ids):
            if round_index == 1 or role != "raw":
                rel[(role, i)] = frag.placement[q]
    return rel


def _first_free(mapping: GridMapping) -> tuple[int, int]:
    used = set(mapping.placement.values())
    for y in range(mapping.height):
        for x in range(mapping.width):
            if (x, y) not in used:
                return (x, y)
    raise MappingError("fragment has no free cell")


def _fragment_extent(rel: dict) -> tuple[int, int]:
    w = max(x for x, _ in rel.values()) + 1
    h = max(y for _, y in rel.values()) + 1
    return w, h


# ---------------------------------------------------------------------------
# port assignment
# ---------------------------------------------------------------------------


def slot_consumer_anc(k: int, slot: int) -> int:
    """Ancilla slot index consuming raw slot ``slot`` of a capacity-k module."""
    if slot < 2 * (k + 4):
        return slot // 2 + 1
    return 5 + (slot - (2 * k + 8))


def assign_ports(
    port_cells: dict[tuple[int, int], tuple[int, int]],
    slot_cells: dict[tuple[int, int], tuple[int, int]],
    sources_of: dict[int, list[int]],
    rounds: int = 3,
) -> dict[tuple[int, int], tuple[int, int]]:
    """Minimum-total-distance matching of output ports onto input slots.

    A destination module may take at most one state from any source
    module, and slot (d, j) may only be fed from a source in
    ``sources_of[d]``.  Tiny instances are solved by exhaustive search;
    larger ones by alternating exact assignment solves: per-source
    (which port serves which destination) and per-destination (which
    slot takes which source), which never increases the total distance.
    Deterministic; ties break on (source id, dest id).
    """
    ports = sorted(port_cells)
    slots = sorted(slot_cells)
    if len(ports) != len(slots):
        raise StitchError(f"{len(ports)} ports vs {len(slots)} slots")
    for d, srcs in sources_of.items():
        need = sum(1 for (dd, _j) in slots if dd == d)
        if need != len(srcs):
            raise StitchError(f"dest {d} needs {need} states but has {len(srcs)} sources")
        if len(set(srcs)) != len(srcs):
            raise StitchError(f"dest {d} lists a source twice")
    if len(slots) <= BRUTE_FORCE_SLOT_LIMIT:
        return _assign_brute(ports, slots, port_cells, slot_cells, sources_of)
    return _assign_alternating(ports, slots, port_cells, slot_cells, sources_of, rounds)


def _dist(a: tuple[int, int], b: tuple[int, int]) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def _assign_brute(ports, slots, port_cells, slot_cells, sources_of):
    best_cost = math.inf
    best = None
    n = len(slots)

    def rec(i, used_ports, used_pairs, acc, cur):
        nonlocal best_cost, best
        if acc >= best_cost:
            return
        if i == n:
            best_cost = acc
            best = dict(cur)
            return
        d, j = slots[i]
        for s, p in ports:
            if (s, p) in used_ports or (s, d) in used_pairs:
                continue
            if s not in sources_of[d]:
                continue
            used_ports.add((s, p))
            used_pairs.add((s, d))
            cur[(s, p)] = (d, j)
            rec(i + 1, used_ports, used_pairs, acc + _dist(port_cells[(s, p)], slot_cells[(d, j)]), cur)
            del cur[(s, p)]
            used_ports.discard((s, p))
            used_pairs.discard((s, d))

    rec(0, set(), set(), 0.0, {})
    if best is None:
        raise StitchError("infeasible port wiring")
    return best


def _assign_alternating(ports, slots, port_cells, slot_cells, sources_of, rounds):
    src_ports: dict[int, list[int]] = {}
    for s, p in ports:
        src_ports.setdefault(s, []).append(p)
    dst_slots: dict[int, list[int]] = {}
    for d, j in slots:
        dst_slots.setdefault(d, []).append(j)
    dests_of_src: dict[int, list[int]] = {}
    for d in sorted(sources_of):
        for s in sources_of[d]:
            dests_of_src.setdefault(s, []).append(d)
    for s in sorted(src_ports):
        if len(src_ports[s]) != len(dests_of_src.get(s, [])):
            raise StitchError(f"source {s}: {len(src_ports[s])} ports vs "
                              f"{len(dests_of_src.get(s, []))} destinations")
    # tau: per dest, source -> slot; sigma: per source, dest -> port
    tau = {d: dict(zip(sorted(sources_of[d]), sorted(dst_slots[d]))) for d in sorted(dst_slots)}
    sigma = {s: dict(zip(sorted(dests_of_src[s]), sorted(src_ports[s]))) for s in sorted(src_ports)}
    for _ in range(rounds):
        for s in sorted(src_ports):
            ds = sorted(dests_of_src[s])
            ps = sorted(src_ports[s])
            cost = np.array([[_dist(port_cells[(s, p)], slot_cells[(d, tau[d][s])])
                              for d in ds] for p in ps])
            rows, cols = linear_sum_assignment(cost)
            sigma[s] = {ds[c]: ps[r] for r, c in zip(rows, cols)}
        for d in sorted(dst_slots):
            ss = sorted(sources_of[d])
            js = sorted(dst_slots[d])
            cost = np.array([[_dist(port_cells[(s, sigma[s][d])], slot_cells[(d, j)])
                              for j in js] for s in ss])
            rows, cols = linear_sum_assignment(cost)
            tau[d] = {ss[r]: js[c] for r, c in zip(rows, cols)}
    out = {}
    for d in sorted(dst_slots):
        for s in sorted(sources_of[d]):
            out[(s, sigma[s][d])] = (d, tau[d][s])
    return out


def assignment_cost(assignment, port_cells, slot_cells) -> float:
    return sum(_dist(port_cells[sp], slot_cells[dj]) for sp, dj in assignment.items())


# ---------------------------------------------------------------------------
# stitching pipeline
# ---------------------------------------------------------------------------


def stitch_factory(config: P.FactoryConfig, params: StitchParams | None = None) -> StitchPlan:
    """Plan a full hierarchical mapping for the configured factory.

    Rounds are embedded by fragment replication; each boundary is joined
    by fragment placement under the reuse policy, minimum-distance port
    reassignment, and midpoint optimization, in that order.
    """
    params = params or StitchParams()
    config.validate()
    circuit = P.build_factory(
        P.FactoryConfig(config.capacity_k, config.levels_l, config.eps_inject,
                        config.target_error, P.ReusePolicy.NO_REUSE, config.seed)
    )
    k, levels = config.capacity_k, config.levels_l
    reuse = config.reuse_policy is P.ReusePolicy.REUSE

    fragments = {r: embed_round(circuit, r, params.method, params.seed,
                                params.fragment_anneal_iters)
                 for r in range(1, levels + 1)}

    placement: dict[int, tuple[int, int]] = {}
    origins: dict[tuple[int, int], tuple[int, int]] = {}
    binding: dict[int, int] = {}
    reuse_expanded = False

    # round 1: near-square tiling of identical fragments
    frag1 = fragments[1]
    fw, fh = _fragment_extent(frag1)
    m1 = circuit.module_count(1)
    # near-square block by area: fragments are wide bands, so fewer columns
    cols = round(math.sqrt(m1 * (fh + params.band_gap) / (fw + params.module_gap)))
    cols = max(1, min(m1, cols))
    for m in range(m1):
        col, row = m % cols, m // cols
        origin = (col * (fw + params.module_gap), row * (fh + params.band_gap))
        origins[(1, m)] = origin
        slots = circuit.modules[(1, m)]
        for (role, i), (dx, dy) in frag1.items():
            q = getattr(slots, role)[i]
            placement[q] = (origin[0] + dx, origin[1] + dy)

    block_w = cols * (fw + params.module_gap) - params.module_gap
    block_h = math.ceil(m1 / cols) * (fh + params.band_gap) - params.band_gap
    grid_w, grid_h = block_w, block_h

    # later rounds: place fragments over measured tiles (reuse) or below
    for r in range(2, levels + 1):
        frag = fragments[r]
        n_mod = circuit.module_count(r)
        dead, live = _liveness(circuit, placement, binding, r)
        if reuse:
            taken: set[tuple[int, int]] = set()
            placed = 0
            for m in range(n_mod):
                anchor = _scan_anchor(frag, grid_w, grid_h, placement, dead, live, taken)
                if anchor is None:
                    break
                origins[(r, m)] = anchor
                _bind_fragment(circuit, placement, binding, frag, anchor, r, m, dead, taken)
                placed += 1
            if placed < n_mod:
                log.warning("reuse placement infeasible for round %d: expanding grid", r)
                reuse_expanded = True
                grid_h = _append_round(circuit, placement, origins, frag, r, placed,
                                       n_mod, grid_w, grid_h, params)
        else:
            grid_h = _append_round(circuit, placement, origins, frag, r, 0, n_mod,
                                   grid_w, grid_h, params)
        grid_w = max(grid_w, max(x for x, _ in placement.values()) + 1)
        grid_h = max(grid_h, max(y for _, y in placement.values()) + 1)

    if binding:
        # flatten donor chains (round r+1 slot bound onto a bound slot)
        flat = {}
        for q, donor in binding.items():
            while donor in binding:
                donor = binding[donor]
            flat[q] = donor
        circuit = P.rebind_reuse(circuit, flat)

    margin = params.margin
    mapping = GridMapping(
        grid_w + 2 * margin,
        grid_h + 2 * margin,
        {q: (x + margin, y + margin) for q, (x, y) in placement.items()
         if q in circuit.qubits},
    )
    _place_controls(mapping, circuit)

    # boundaries: port reassignment then midpoints
    assignments: dict[int, dict] = {}
    hints: dict[int, tuple[int, int]] = {}
    for r in range(1, levels):
        assignment = _optimize_boundary(circuit, mapping, r)
        circuit = P.apply_port_assignment(circuit, r, assignment)
        assignments[r] = assignment
    if params.midpoint_mode != "none" and levels > 1:
        hints = optimize_midpoints(circuit, mapping, params)
        for g_idx, cell in hints.items():
            gate = circuit.gates[g_idx]
            mapping.midpoints[(gate.ops[0], gate.ops[1])] = cell

    plan = StitchPlan(
        config=config,
        circuit=circuit,
        mapping=mapping,
        fragments=fragments,
        origins=origins,
        assignments=assignments,
        hints=hints,
        policy=config.reuse_policy,
        reuse_expanded=reuse_expanded,
    )
    plan.validate()
    return plan


def _liveness(circuit, placement, binding, upto_round):
    """Cells of measured (reusable) vs surviving qubits before ``upto_round``.

    Outputs of round upto_round-1 survive into the new round; earlier
    outputs were consumed and measured.  Raw and ancilla qubits of all
    previous rounds are measured by their own round's end.  Already-bound
    donors are not offered again.
    """
    dead: dict[tuple[int, int], int] = {}
    live: set[tuple[int, int]] = set()
    bound_donors = set(binding.values())

    def cell_of(q):
        while q in binding:
            q = binding[q]
        return placement.get(q)

    for (r, m), slots in circuit.modules.items():
        if r >= upto_round:
            continue
        for q in slots.raw + slots.anc:
            cell = cell_of(q)
            root = q
            while root in binding:
                root = binding[root]
            if cell is not None and root not in bound_donors:
                dead[cell] = root
        for q in slots.out:
            cell = cell_of(q)
            if cell is not None:
                if r == upto_round - 1:
                    live.add(cell)
                else:
                    root = q
                    while root in binding:
                        root = binding[root]
                    if root not in bound_donors:
                        dead.setdefault(cell, root)
    for cell in live:
        dead.pop(cell, None)
    return dead, live


def _scan_anchor(frag, grid_w, grid_h, placement, dead, live, taken):
    cells = [c for key, c in frag.items()]
    fw, fh = _fragment_extent(frag)
    occupied_live = live
    for y in range(grid_h - fh + 1):
        for x in range(grid_w - fw + 1):
            ok = True
            for (dx, dy) in cells:
                cell = (x + dx, y + dy)
                if cell in occupied_live or cell in taken:
                    ok = False
                    break
            if ok:
                return (x, y)
    return None


def _bind_fragment(circuit, placement, binding, frag, anchor, r, m, dead, taken):
    slots = circuit.modules[(r, m)]
    for (role, i), (dx, dy) in frag.items():
        q = getattr(slots, role)[i]
        cell = (anchor[0] + dx, anchor[1] + dy)
        taken.add(cell)
        donor = dead.get(cell)
        if donor is not None:
            binding[q] = donor
            dead.pop(cell)
        else:
            placement[q] = cell


def _append_round(circuit, placement, origins, frag, r, start, n_mod, grid_w, grid_h, params):
    fw, fh = _fragment_extent(frag)
    n_rest = n_mod - start
    cols = max(1, min(n_rest, grid_w // (fw + params.module_gap)) or 1)
    y0 = grid_h + params.band_gap
    for idx, m in enumerate(range(start, n_mod)):
        col, row = idx % cols, idx // cols
        origin = (col * (fw + params.module_gap), y0 + row * (fh + params.band_gap))
        origins[(r, m)] = origin
        slots = circuit.modules[(r, m)]
        for (role, i), (dx, dy) in frag.items():
            q = getattr(slots, role)[i]
            placement[q] = (origin[0] + dx, origin[1] + dy)
    rows = math.ceil(n_rest / cols)
    return y0 + rows * (fh + params.band_gap) - params.band_gap


def _place_controls(mapping: GridMapping, circuit: P.Circuit) -> None:
    from .layout import _place_barrier_controls

    _place_barrier_controls(mapping, circuit)


def _optimize_boundary(circuit: P.Circuit, mapping: GridMapping, boundary: int):
    k = circuit.capacity
    n_src = circuit.module_count(boundary)
    n_dst = circuit.module_count(boundary + 1)
    port_cells = {}
    for s in range(n_src):
        for p in range(k):
            port_cells[(s, p)] = mapping.placement[circuit.output_id(boundary, s, p)]
    slot_cells = {}
    sources_of: dict[int, list[int]] = {d: [] for d in range(n_dst)}
    for d in range(n_dst):
        slots = circuit.modules[(boundary + 1, d)]
        for j in range(3 * k + 8):
            anc_q = slots.anc[slot_consumer_anc(k, j)]
            slot_cells[(d, j)] = mapping.placement[anc_q]
            sources_of[d].append(circuit.port_wiring[(boundary + 1, d, j)][0])
    return assign_ports(port_cells, slot_cells, sources_of)


# ---------------------------------------------------------------------------
# midpoints
# ---------------------------------------------------------------------------


def permutation_edges(circuit: P.Circuit) -> list[tuple[int, int, int]]:
    """(gate index, source qubit, dest qubit) of inter-round injections."""
    return [
        (i, g.ops[0], g.ops[1])
        for i, g in enumerate(circuit.gates)
        if g.xround and g.kind in P.INJECT_KINDS
    ]


def optimize_midpoints(
    circuit: P.Circuit,
    mapping: GridMapping,
    params: StitchParams | None = None,
) -> dict[int, tuple[int, int]]:
    """Intermediate destinations for every permutation braid.

    Valiant-style random waypoints in each edge's inflated bounding box,
    optionally annealed on a virtual graph whose movable vertices are
    the midpoints (endpoints frozen): centroid attraction pulls a
    midpoint onto its own edge segment while edge repulsion and dipole
    rotation spread the permutation braids apart.
    """
    params = params or StitchParams()
    edges = permutation_edges(circuit)
    if not edges:
        return {}
    rng = np.random.default_rng(params.seed)
    next_id = max(circuit.qubits) + 1
    vqubits: dict[int, P.QubitRef] = {}
    vgates: list[P.Gate] = []
    vplace: dict[int, tuple[int, int]] = {}
    occupied: set[tuple[int, int]] = set()
    mid_of_gate: dict[int, int] = {}
    endpoints: set[int] = set()
    for (g_idx, src, dst) in edges:
        for q in (src, dst):
            if q not in vqubits:
                vqubits[q] = circuit.qubits[q]
                vplace[q] = mapping.placement[q]
                occupied.add(vplace[q])
                endpoints.add(q)
    for (g_idx, src, dst) in edges:
        mid = next_id
        next_id += 1
        vqubits[mid] = P.QubitRef(mid, P.Role.ANCILLA, circuit.qubits[dst].round, -2)
        mid_of_gate[g_idx] = mid
        cell = _valiant_cell(vplace[src], vplace[dst], mapping, occupied, rng)
        vplace[mid] = cell
        occupied.add(cell)
        vgates.append(P.Gate(P.GateKind.CNOT, (src, mid)))
        vgates.append(P.Gate(P.GateKind.CNOT, (mid, dst)))
    if params.midpoint_mode == "annealed" and params.midpoint_iters > 0:
        vcirc = P.Circuit(gates=vgates, qubits=vqubits)
        vmap = GridMapping(mapping.width, mapping.height, vplace)
        fp = ForceParams(max_iters=params.midpoint_iters, seed=params.seed,
                         convergence_window=5)
        vmap = anneal(vmap, vcirc, fp, frozen=endpoints)
        vplace = vmap.placement
    return {g_idx: vplace[mid] for g_idx, mid in mid_of_gate.items()}


def _valiant_cell(src, dst, mapping, occupied, rng, inflate: int = 2):
    x0 = max(0, min(src[0], dst[0]) - inflate)
    x1 = min(mapping.width - 1, max(src[0], dst[0]) + inflate)
    y0 = max(0, min(src[1], dst[1]) - inflate)
    y1 = min(mapping.height - 1, max(src[1], dst[1]) + inflate)
    for _ in range(64):
        cell = (int(rng.integers(x0, x1 + 1)), int(rng.integers(y0, y1 + 1)))
        if cell not in occupied:
            return cell
    for y in range(y0, y1 + 1):
        for x in range(x0, x1 + 1):
            if (x, y) not in occupied:
                return (x, y)
    return ((src[0] + dst[0]) // 2, (src[1] + dst[1]) // 2)
