import networkx as nx
import pytest
from hypothesis import given, settings, strategies as st

from braidfactory import protocol as P
from braidfactory import interaction as I

from oracles import longest_chain, longest_chain_layers


def tiny_circuit(gate_specs):
    """Circuit from (kind, ops) pairs over auto-registered ancilla qubits."""
    qubits = {}
    gates = []
    for kind, ops in gate_specs:
        for q in ops:
            qubits.setdefault(q, P.QubitRef(q, P.Role.ANCILLA))
        gates.append(P.Gate(kind, tuple(ops)))
    return P.Circuit(gates=gates, qubits=qubits)


def to_networkx(graph):
    g = nx.Graph()
    g.add_nodes_from(graph.vertices)
    g.add_edges_from(graph.edges)
    return g


def test_single_cnot_edge():
    c = tiny_circuit([(P.GateKind.CNOT, (0, 1))])
    g = I.from_circuit(c)
    assert len(g.edges) == 1
    assert g.edges[(0, 1)].mult == 1


def test_injection_multiplicity():
    c = tiny_circuit([(P.GateKind.INJECT_T, (0, 1))])
    assert I.from_circuit(c).edges[(0, 1)].mult == 2
    assert I.from_circuit(c, injection_cost=1).edges[(0, 1)].mult == 1


def test_stochastic_injection_seeded():
    c = tiny_circuit([(P.GateKind.INJECT_T, (i, i + 1)) for i in range(0, 40, 2)])
    a = I.from_circuit(c, stochastic=True, seed=7)
    b = I.from_circuit(c, stochastic=True, seed=7)
    assert {k: e.mult for k, e in a.edges.items()} == {k: e.mult for k, e in b.edges.items()}
    mults = [e.mult for e in a.edges.values()]
    assert all(m >= 1 for m in mults)
    assert any(m != 2 for m in mults)  # geometric, not constant


def test_cxx_star_edges():
    c = tiny_circuit([(P.GateKind.CXX, (0, 1, 2, 3))])
    g = I.from_circuit(c)
    assert set(g.edges) == {(0, 1), (0, 2), (0, 3)}


def test_single_qubit_and_barrier_no_edges():
    c = tiny_circuit([
        (P.GateKind.H, (0,)),
        (P.GateKind.MEAS_X, (1,)),
        (P.GateKind.BARRIER, (2, 0, 1)),
    ])
    assert I.from_circuit(c).m == 0


def test_module_graph_planar():
    g = I.from_circuit(P.build_module(8))
    ok, _ = nx.check_planarity(to_networkx(g))
    assert ok


def test_factory_graph_nonplanar():
    c = P.build_factory(P.FactoryConfig(capacity_k=4, levels_l=2))
    g = I.from_circuit(c)
    ok, _ = nx.check_planarity(to_networkx(g))
    assert not ok


def test_layers_shared_qubit():
    c = tiny_circuit([(P.GateKind.CNOT, (0, 1)), (P.GateKind.CNOT, (1, 2))])
    assert I.gate_layers(c) == [1, 2]


def test_layers_disjoint():
    c = tiny_circuit([(P.GateKind.CNOT, (0, 1)), (P.GateKind.CNOT, (2, 3))])
    assert I.gate_layers(c) == [1, 1]


@pytest.mark.parametrize("k", [1, 2, 4, 8])
def test_layers_match_longest_chain_oracle(k):
    c = P.build_module(k)
    ops = [g.ops for g in c.gates]
    assert I.gate_layers(c) == longest_chain_layers(ops)
    assert I.critical_path(c) == longest_chain(ops)


def test_critical_path_edges():
    assert I.critical_path(P.Circuit(gates=[], qubits={})) == 0
    assert I.critical_path(tiny_circuit([(P.GateKind.H, (0,))])) == 1


def test_layer_legality_and_path_structure():
    c = P.build_factory(P.FactoryConfig(capacity_k=3, levels_l=2))
    lvls = I.gate_layers(c)
    by_layer = {}
    for gate, lvl in zip(c.gates, lvls):
        by_layer.setdefault(lvl, []).append(gate)
    for lvl, gates in by_layer.items():
        seen = set()
        for gate in gates:
            assert not (seen & set(gate.ops)), f"layer {lvl} shares a qubit"
            seen.update(gate.ops)
    # per-layer subgraph is disjoint paths: degree <= 2 and acyclic
    for layer in I.layers(c):
        if not layer.edges:
            continue
        g = nx.Graph(layer.edges)
        assert max(dict(g.degree).values()) <= 2
        assert nx.is_forest(g)


def test_barrier_forces_later_layers():
    c = P.build_factory(P.FactoryConfig(capacity_k=2, levels_l=2))
    lvls = I.gate_layers(c)
    b_idx = c.round_boundaries[0]
    for i in range(b_idx + 1, len(c.gates)):
        assert lvls[i] > lvls[b_idx]


def test_communities_structural_hint():
    c = P.build_factory(P.FactoryConfig(capacity_k=4, levels_l=2))
    g = I.from_circuit(c)
    hint = I.structural_communities(c)
    comm = I.communities(g, structural_hint=hint)
    assert len(set(comm.values())) == 24  # 20 + 4 modules
    for (rnd, mod), slots in c.modules.items():
        labels = {comm[q] for q in slots.anc}
        assert len(labels) == 1


def test_communities_two_triangles():
    c = tiny_circuit([
        (P.GateKind.CNOT, (0, 1)), (P.GateKind.CNOT, (1, 2)), (P.GateKind.CNOT, (2, 0)),
        (P.GateKind.CNOT, (10, 11)), (P.GateKind.CNOT, (11, 12)), (P.GateKind.CNOT, (12, 10)),
    ])
    comm = I.communities(I.from_circuit(c), seed=3)
    assert len(set(comm.values())) == 2
    assert comm[0] == comm[1] == comm[2]
    assert comm[10] == comm[11] == comm[12]


def test_communities_single_edge():
    c = tiny_circuit([(P.GateKind.CNOT, (0, 1))])
    comm = I.communities(I.from_circuit(c), seed=0)
    assert comm[0] == comm[1]


def test_communities_deterministic():
    c = P.build_module(4)
    g = I.from_circuit(c)
    assert I.communities(g, seed=5) == I.communities(g, seed=5)


def test_from_circuit_deterministic():
    c = P.build_factory(P.FactoryConfig(capacity_k=2, levels_l=2))
    a, b = I.from_circuit(c), I.from_circuit(c)
    assert sorted(a.edges) == sorted(b.edges)
    assert all(a.edges[k].mult == b.edges[k].mult for k in a.edges)


def test_edge_times_are_layers():
    c = tiny_circuit([(P.GateKind.CNOT, (0, 1)), (P.GateKind.CNOT, (1, 2)),
                      (P.GateKind.CNOT, (0, 1))])
    g = I.from_circuit(c)
    assert g.edges[(0, 1)].times == [1, 3]
    assert g.edges[(0, 1)].mult == 2
    assert g.edges[(1, 2)].times == [2]


def test_edgelist_export():
    c = tiny_circuit([(P.GateKind.CNOT, (0, 1))])
    text = I.to_edgelist_text(I.from_circuit(c))
    assert text.splitlines()[1] == "0 1 1 1"
