import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from braidfactory import protocol as P
from braidfactory import interaction as I
from braidfactory import layout as L

from oracles import crossing_oracle


def graph_from_pairs(pairs):
    qubits = {}
    gates = []
    for a, b in pairs:
        qubits.setdefault(a, P.QubitRef(a, P.Role.ANCILLA))
        qubits.setdefault(b, P.QubitRef(b, P.Role.ANCILLA))
        gates.append(P.Gate(P.GateKind.CNOT, (a, b)))
    return I.from_circuit(P.Circuit(gates=gates, qubits=qubits))


def mapping_of(positions, width=None, height=None):
    w = width or max(x for x, _ in positions.values()) + 1
    h = height or max(y for _, y in positions.values()) + 1
    return L.GridMapping(w, h, dict(positions))


# ---------------------------------------------------------------------------
# linear mapping
# ---------------------------------------------------------------------------


def test_linear_k2_band_structure():
    c = P.build_module(2)
    m = L.linear_mapping(c)
    m.validate(c)
    rows = {y for _, y in m.placement.values()}
    assert len(rows) == 3  # 3-row band
    assert m.height <= 5
    anc_cells = [m.placement[q] for q in c.modules[(1, 0)].anc]
    ys = {y for _, y in anc_cells}
    assert len(ys) == 1  # contiguous ancilla row
    xs = sorted(x for x, _ in anc_cells)
    assert xs == list(range(xs[0], xs[0] + 7))
    # outputs appended after the ancillas in the same row
    out_cells = [m.placement[q] for q in c.modules[(1, 0)].out]
    assert all(y == anc_cells[0][1] for _, y in out_cells)
    assert min(x for x, _ in out_cells) > max(xs)
    # injection pairs adjacent above/below their ancilla
    for j in range(1, 7):
        ax, ay = m.placement[c.modules[(1, 0)].anc[j]]
        even = m.placement[c.modules[(1, 0)].raw[2 * j - 2]]
        odd = m.placement[c.modules[(1, 0)].raw[2 * j - 1]]
        assert {even, odd} == {(ax, ay - 1), (ax, ay + 1)}


def test_linear_single_qubit_margin():
    c = P.Circuit(gates=[P.Gate(P.GateKind.H, (0,))], qubits={0: P.QubitRef(0, P.Role.ANCILLA)})
    m = L.linear_mapping(c)
    assert (m.width, m.height) == (3, 3)
    assert m.placement[0] == (1, 1)


def test_linear_modules_left_to_right():
    c = P.build_factory(P.FactoryConfig(capacity_k=2, levels_l=2))
    m = L.linear_mapping(c)
    m.validate(c)
    m0 = [m.placement[q] for q in c.modules[(1, 0)].anc]
    m1 = [m.placement[q] for q in c.modules[(1, 1)].anc]
    assert min(x for x, _ in m1) > max(x for x, _ in m0)


def test_linear_reuse_smaller_grid():
    nr = L.linear_mapping(P.build_factory(P.FactoryConfig(capacity_k=2, levels_l=2)))
    ru = L.linear_mapping(
        P.build_factory(
            P.FactoryConfig(capacity_k=2, levels_l=2, reuse_policy=P.ReusePolicy.REUSE)
        )
    )
    assert ru.area < nr.area


def test_linear_deterministic():
    c = P.build_factory(P.FactoryConfig(capacity_k=2, levels_l=2))
    assert L.linear_mapping(c).placement == L.linear_mapping(c).placement


# ---------------------------------------------------------------------------
# random mapping
# ---------------------------------------------------------------------------


def test_random_mapping_deterministic():
    c = P.build_module(2)
    a = L.random_mapping(c, 6, 6, seed=9)
    b = L.random_mapping(c, 6, 6, seed=9)
    assert a.placement == b.placement
    a.validate(c)


def test_random_mapping_full_grid_is_permutation():
    c = P.build_module(2)  # 23 qubits
    m = L.random_mapping(c, 23, 1, seed=1)
    assert sorted(m.placement.values()) == [(x, 0) for x in range(23)]


def test_random_mapping_rejects_small_grid():
    c = P.build_module(2)
    with pytest.raises(L.MappingError):
        L.random_mapping(c, 4, 5, seed=0)


def test_random_mapping_uniform_chi_square():
    """Occupancy frequency of each cell within 5 sigma of uniform."""
    c = P.build_module(1)  # 18 qubits
    w = h = 6
    counts = np.zeros(w * h)
    n_seeds = 1000
    for seed in range(n_seeds):
        m = L.random_mapping(c, w, h, seed=seed)
        for (x, y) in m.placement.values():
            counts[y * w + x] += 1
    p = 18 / 36
    sigma = math.sqrt(n_seeds * p * (1 - p))
    assert np.all(np.abs(counts - n_seeds * p) <= 5 * sigma)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def test_edge_length_345():
    g = graph_from_pairs([(0, 1)])
    m = mapping_of({0: (0, 0), 1: (3, 4)})
    assert L.edge_length(m, g) == pytest.approx(5.0)


def test_edge_length_adjacent_min():
    g = graph_from_pairs([(0, 1)])
    m = mapping_of({0: (0, 0), 1: (0, 1)})
    assert L.edge_length(m, g) == pytest.approx(1.0)


def test_edge_length_k4_enumeration():
    g = graph_from_pairs([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
    m = mapping_of({0: (0, 0), 1: (1, 0), 2: (0, 1), 3: (1, 1)})
    expected = (4 * 1.0 + 2 * math.sqrt(2)) / 6
    assert L.edge_length(m, g) == pytest.approx(expected)


def test_edge_length_multiplicity_weighted():
    qubits = {i: P.QubitRef(i, P.Role.ANCILLA) for i in range(3)}
    gates = [P.Gate(P.GateKind.CNOT, (0, 1)), P.Gate(P.GateKind.CNOT, (0, 1)),
             P.Gate(P.GateKind.CNOT, (1, 2))]
    g = I.from_circuit(P.Circuit(gates=gates, qubits=qubits))
    m = mapping_of({0: (0, 0), 1: (1, 0), 2: (4, 0)})
    assert L.edge_length(m, g) == pytest.approx((2 * 1.0 + 3.0) / 3)


def test_edge_spacing_parallel_rows():
    g = graph_from_pairs([(0, 1), (2, 3)])
    m = mapping_of({0: (0, 0), 1: (1, 0), 2: (0, 1), 3: (1, 1)})
    assert L.edge_spacing(m, g) == pytest.approx(1.0)


def test_edge_spacing_shared_midpoint():
    g = graph_from_pairs([(0, 1), (2, 3)])
    m = mapping_of({0: (0, 0), 1: (2, 2), 2: (2, 0), 3: (0, 2)})
    assert L.edge_spacing(m, g) == pytest.approx(0.0)


def test_edge_spacing_three_edges():
    g = graph_from_pairs([(0, 1), (2, 3), (4, 5)])
    m = mapping_of({0: (0, 0), 1: (2, 0), 2: (0, 1), 3: (2, 1), 4: (0, 4), 5: (2, 4)})
    # midpoints (1,0), (1,1), (1,4): pair distances 1, 4, 3
    assert L.edge_spacing(m, g) == pytest.approx((1 + 4 + 3) / 3)


def test_edge_spacing_needs_two_edges():
    g = graph_from_pairs([(0, 1)])
    m = mapping_of({0: (0, 0), 1: (1, 0)})
    with pytest.raises(L.MappingError):
        L.edge_spacing(m, g)


def test_crossing_x_configuration():
    g = graph_from_pairs([(0, 1), (2, 3)])
    m = mapping_of({0: (0, 0), 1: (2, 2), 2: (0, 2), 3: (2, 0)})
    assert L.crossing_count(m, g) == 1


def test_crossing_parallel_zero():
    g = graph_from_pairs([(0, 1), (2, 3)])
    m = mapping_of({0: (0, 0), 1: (3, 0), 2: (0, 2), 3: (3, 2)})
    assert L.crossing_count(m, g) == 0


def test_crossing_shared_endpoint_excluded():
    g = graph_from_pairs([(0, 1), (0, 2)])
    m = mapping_of({0: (0, 0), 1: (2, 0), 2: (0, 2)})
    assert L.crossing_count(m, g) == 0


def test_crossing_collinear_overlap_counts():
    g = graph_from_pairs([(0, 1), (2, 3)])
    m = mapping_of({0: (0, 0), 1: (3, 0), 2: (1, 0), 3: (5, 0)})
    assert L.crossing_count(m, g) == 1


@pytest.mark.parametrize("seed", range(20))
def test_crossing_matches_geometric_oracle(seed):
    rng = np.random.default_rng(seed)
    n = 12
    cells = rng.permutation(100)[:n]
    pos = {i: (int(c % 10), int(c // 10)) for i, c in enumerate(cells)}
    pairs = set()
    while len(pairs) < 20:
        a, b = rng.integers(0, n, size=2)
        if a != b:
            pairs.add((min(a, b), max(a, b)))
    g = graph_from_pairs(sorted(pairs))
    m = mapping_of(pos)
    segments = [(pos[a], pos[b], a, b) for a, b in sorted(pairs)]
    assert L.crossing_count(m, g) == crossing_oracle(segments)


@given(st.integers(min_value=-7, max_value=7), st.integers(min_value=-7, max_value=7))
@settings(max_examples=30, deadline=None)
def test_translation_invariance(dx, dy):
    g = graph_from_pairs([(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)])
    base = {0: (0, 0), 1: (3, 1), 2: (1, 4), 3: (4, 4)}
    m1 = L.GridMapping(20, 20, {q: (x + 8, y + 8) for q, (x, y) in base.items()})
    m2 = L.GridMapping(20, 20, {q: (x + 8 + dx, y + 8 + dy) for q, (x, y) in base.items()})
    assert L.edge_length(m1, g) == pytest.approx(L.edge_length(m2, g))
    assert L.edge_spacing(m1, g) == pytest.approx(L.edge_spacing(m2, g))
    assert L.crossing_count(m1, g) == L.crossing_count(m2, g)


def test_crossing_edge_order_invariance():
    pairs = [(0, 1), (2, 3), (4, 5), (1, 4)]
    pos = {0: (0, 0), 1: (4, 4), 2: (0, 4), 3: (4, 0), 4: (2, 0), 5: (2, 4)}
    m = mapping_of(pos)
    counts = {L.crossing_count(m, graph_from_pairs(order))
              for order in ([pairs[i] for i in perm] for perm in
                            [(0, 1, 2, 3), (3, 2, 1, 0), (1, 3, 0, 2)])}
    assert len(counts) == 1


def test_mapping_serialization_roundtrip():
    m = L.GridMapping(5, 4, {0: (1, 1), 7: (2, 3)}, midpoints={(0, 7): (2, 2)})
    back = L.parse_mapping(L.serialize_mapping(m))
    assert back.width == 5 and back.height == 4
    assert back.placement == m.placement
    assert back.midpoints == m.midpoints


def test_mapping_validation():
    with pytest.raises(L.MappingError):
        L.GridMapping(2, 2, {0: (0, 0), 1: (0, 0)}).validate()
    with pytest.raises(L.MappingError):
        L.GridMapping(2, 2, {0: (5, 0)}).validate()
