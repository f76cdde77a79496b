"""Gate-level synthesis of Bravyi-Haah block-code distillation factories.

A single module distills 3k+8 raw magic states into k higher-fidelity
states using k+5 ancillas (5k+13 data qubits total).  Multi-level
factories compose modules recursively: round r of an l-level factory
holds (3k+8)^(l-r) * k^(r-1) modules, and every module of round r+1
consumes one output state from each of 3k+8 distinct round-r modules.
Rounds are separated by barrier gates so the scheduler cannot move
gates across round boundaries.

The module also carries the analytic error / yield / area model:
per-round output error, first-order success probability, per-round
surface-code distances, and the physical-qubit area law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum


class ProtocolError(ValueError):
    """Invalid factory configuration or circuit construction request."""


class YieldThresholdError(ProtocolError):
    """Injected error rate too high for a positive success probability."""


class DistanceInfeasibleError(ProtocolError):
    """No odd code distance <= 99 meets the requested error budget."""


class ReusePolicy(str, Enum):
    REUSE = "reuse"
    NO_REUSE = "noreuse"


class Role(str, Enum):
    RAW = "raw"
    ANCILLA = "ancilla"
    OUTPUT = "output"
    BARRIER_CTRL = "barrier"


class GateKind(str, Enum):
    INIT = "INIT"
    H = "H"
    CNOT = "CNOT"
    CXX = "CXX"
    INJECT_T = "INJT"
    INJECT_TDAG = "INJTD"
    MEAS_X = "MEASX"
    BARRIER = "BARRIER"


INJECT_KINDS = (GateKind.INJECT_T, GateKind.INJECT_TDAG)
SINGLE_QUBIT_KINDS = (GateKind.INIT, GateKind.H, GateKind.MEAS_X)


@dataclass(frozen=True)
class QubitRef:
    """A logical qubit: identity plus its structural home in the factory.

    ``port`` is meaningful only for OUTPUT qubits (position among the k
    output states of the owning module).  Under qubit reuse an id keeps
    the ref of its first definition.
    """

    id: int
    role: Role
    round: int = 1
    module: int = 0
    port: int = 0


@dataclass(frozen=True)
class Gate:
    """One gate of the IR.  ``ops`` are qubit ids, control first.

    ``xround`` marks injections whose source is a previous round's
    output state (the inter-round permutation braids).
    """

    kind: GateKind
    ops: tuple[int, ...]
    round: int = 1
    module: int = 0
    xround: bool = False


@dataclass(frozen=True)
class ModuleSlots:
    """Slot-ordered qubit ids of one module (raw / ancilla / output)."""

    round: int
    module: int
    raw: tuple[int, ...]
    anc: tuple[int, ...]
    out: tuple[int, ...]


@dataclass
class FactoryConfig:
    capacity_k: int
    levels_l: int = 1
    eps_inject: float = 1e-3
    target_error: float = 1e-12
    reuse_policy: ReusePolicy = ReusePolicy.NO_REUSE
    seed: int = 0

    def validate(self) -> None:
        if self.capacity_k < 1:
            raise ProtocolError(f"capacity_k must be >= 1, got {self.capacity_k}")
        if self.levels_l < 1:
            raise ProtocolError(f"levels_l must be >= 1, got {self.levels_l}")
        if not 0.0 < self.eps_inject < 1.0:
            raise ProtocolError(f"eps_inject must lie in (0,1), got {self.eps_inject}")
        if not 0.0 < self.target_error < 1.0:
            raise ProtocolError(f"target_error must lie in (0,1), got {self.target_error}")
        thresh = 1.0 / (3 * self.capacity_k + 8)
        if self.eps_inject >= thresh:
            raise YieldThresholdError(
                f"eps_inject={self.eps_inject} >= yield threshold 1/(3k+8)={thresh:.6g}"
            )


@dataclass
class Circuit:
    """Ordered gate sequence over a qubit registry.

    ``port_wiring`` maps (round, dest module, raw slot) -> (source
    module, source port) for every round boundary; ``round_boundaries``
    lists the gate indices of the barriers separating rounds.
    """

    gates: list[Gate]
    qubits: dict[int, QubitRef]
    round_boundaries: list[int] = field(default_factory=list)
    port_wiring: dict[tuple[int, int, int], tuple[int, int]] = field(default_factory=dict)
    modules: dict[tuple[int, int], ModuleSlots] = field(default_factory=dict)
    capacity: int = 0
    levels: int = 1
    reuse: ReusePolicy = ReusePolicy.NO_REUSE

    @property
    def n_qubits(self) -> int:
        return len(self.qubits)

    def data_qubit_ids(self) -> list[int]:
        return sorted(q for q, ref in self.qubits.items() if ref.role is not Role.BARRIER_CTRL)

    def qubit_ids_by_role(self, role: Role) -> list[int]:
        return sorted(q for q, ref in self.qubits.items() if ref.role is role)

    def module_count(self, round_index: int) -> int:
        return sum(1 for (r, _m) in self.modules if r == round_index)

    def output_id(self, round_index: int, module: int, port: int) -> int:
        return self.modules[(round_index, module)].out[port]


def module_qubit_counts(k: int) -> tuple[int, int, int]:
    """(raw, ancilla, output) qubit counts of one capacity-k module."""
    return 3 * k + 8, k + 5, k


def modules_in_round(k: int, levels: int, round_index: int) -> int:
    return (3 * k + 8) ** (levels - round_index) * k ** (round_index - 1)


# ---------------------------------------------------------------------------
# circuit construction
# ---------------------------------------------------------------------------


def _emit_module_gates(gates: list[Gate], slots: ModuleSlots, k: int, xround: bool) -> None:
    """Append one module's gate sequence, following the distillation listing.

    Order: Hadamards on 3 ancillas and the k outputs, the two-CNOT chain,
    a k-target fan-out from ancilla 0, the k-iteration tail loop, the T
    injection sweep, a (k+4)-target fan-out, the T-dagger sweep, and X
    measurement of every ancilla.  Raw state j is consumed exactly once:
    slots 2i-2 / 2i-1 by the two sweeps on ancilla i, slots 2k+8+i by the
    tail on ancilla 5+i.
    """
    raw, anc, out = slots.raw, slots.anc, slots.out
    rnd, mod = slots.round, slots.module

    def g(kind: GateKind, *ops: int) -> None:
        gates.append(Gate(kind, ops, rnd, mod))

    def inj(kind: GateKind, src: int, dst: int) -> None:
        gates.append(Gate(kind, (src, dst), rnd, mod, xround))

    for i in range(3):
        g(GateKind.H, anc[i])
    for i in range(k):
        g(GateKind.H, out[i])
    g(GateKind.CNOT, anc[1], anc[3])
    g(GateKind.CNOT, anc[2], anc[4])
    g(GateKind.CXX, anc[0], *anc[1 : k + 1])
    for i in range(k):  # tail loop
        g(GateKind.CNOT, out[i], anc[5 + i])
        inj(GateKind.INJECT_T, raw[2 * k + 8 + i], anc[5 + i])
        g(GateKind.CNOT, anc[5 + i], anc[4 + i])
        g(GateKind.CNOT, anc[3 + i], anc[5 + i])
        g(GateKind.CNOT, anc[4 + i], anc[3 + i])
    for i in range(1, k + 5):
        inj(GateKind.INJECT_T, raw[2 * i - 2], anc[i])
    g(GateKind.CXX, anc[0], *anc[1 : k + 5])
    for i in range(1, k + 5):
        inj(GateKind.INJECT_TDAG, raw[2 * i - 1], anc[i])
    for i in range(k + 5):
        g(GateKind.MEAS_X, anc[i])


def build_module(k: int) -> Circuit:
    """Single Bravyi-Haah module distilling 3k+8 raw states into k outputs."""
    if k < 1:
        raise ProtocolError(f"module capacity must be >= 1, got {k}")
    cfg = FactoryConfig(capacity_k=k, levels_l=1, eps_inject=1e-6)
    return build_factory(cfg)


def build_factory(config: FactoryConfig) -> Circuit:
    """Multi-level block-code factory circuit for the given configuration.

    Round r holds (3k+8)^(l-r) * k^(r-1) modules.  The raw inputs of a
    round r >= 2 module are output qubits of round r-1, wired so that a
    destination module receives at most one state from any single source
    module.  A barrier gate (control qubit plus every data qubit of the
    machine) separates consecutive rounds.  Under ``ReusePolicy.REUSE``
    the ancilla and output slots of round r+1 module j reuse measured
    qubit ids of round-r module j; under NO_REUSE every round gets fresh
    ids.  Construction is a pure function of the config.
    """
    config.validate()
    k, levels = config.capacity_k, config.levels_l
    n_raw, n_anc, n_out = module_qubit_counts(k)
    reuse = config.reuse_policy is ReusePolicy.REUSE

    qubits: dict[int, QubitRef] = {}
    modules: dict[tuple[int, int], ModuleSlots] = {}
    wiring: dict[tuple[int, int, int], tuple[int, int]] = {}
    next_id = 0

    def fresh(role: Role, rnd: int, mod: int, port: int = 0) -> int:
        nonlocal next_id
        qid = next_id
        next_id += 1
        qubits[qid] = QubitRef(qid, role, rnd, mod, port)
        return qid

    for rnd in range(1, levels + 1):
        m_count = modules_in_round(k, levels, rnd)
        prev_count = modules_in_round(k, levels, rnd - 1) if rnd > 1 else 0
        for mod in range(m_count):
            if rnd == 1:
                raw = tuple(fresh(Role.RAW, rnd, mod) for _ in range(n_raw))
            else:
                raw = []
                for slot in range(n_raw):
                    h = mod * n_raw + slot
                    src_mod, src_port = h % prev_count, h // prev_count
                    raw.append(modules[(rnd - 1, src_mod)].out[src_port])
                    wiring[(rnd, mod, slot)] = (src_mod, src_port)
                raw = tuple(raw)
            if rnd > 1 and reuse:
                # reuse the last modules of the previous round: under the
                # hand layout those sit in the bottom band, like a fresh row
                donor = modules[(rnd - 1, prev_count - m_count + mod)]
                anc = donor.anc
                out = donor.raw[:n_out]
            else:
                anc = tuple(fresh(Role.ANCILLA, rnd, mod) for _ in range(n_anc))
                out = tuple(fresh(Role.OUTPUT, rnd, mod, p) for p in range(n_out))
            modules[(rnd, mod)] = ModuleSlots(rnd, mod, raw, anc, out)

    barrier_ctrls = [fresh(Role.BARRIER_CTRL, rnd, -1) for rnd in range(1, levels)]
    data_ids = tuple(q for q, ref in sorted(qubits.items()) if ref.role is not Role.BARRIER_CTRL)

    gates: list[Gate] = []
    round_boundaries: list[int] = []
    for rnd in range(1, levels + 1):
        for mod in range(modules_in_round(k, levels, rnd)):
            _emit_module_gates(gates, modules[(rnd, mod)], k, xround=rnd > 1)
        if rnd < levels:
            round_boundaries.append(len(gates))
            gates.append(Gate(GateKind.BARRIER, (barrier_ctrls[rnd - 1],) + data_ids, rnd, -1))

    return Circuit(
        gates=gates,
        qubits=qubits,
        round_boundaries=round_boundaries,
        port_wiring=wiring,
        modules=modules,
        capacity=k,
        levels=levels,
        reuse=config.reuse_policy,
    )


def rebind_reuse(circuit: Circuit, binding: dict[int, int]) -> Circuit:
    """Substitute fresh qubit ids with reused (measured) ids.

    ``binding`` maps a fresh ancilla/output id of some round r >= 2 onto
    a qubit id that is dead by the start of round r: any non-output id
    of an earlier round, or an output id measured at least one round
    earlier.  Returns a new circuit; the input is left untouched.
    """
    for new_id, old_id in binding.items():
        new_ref, old_ref = circuit.qubits[new_id], circuit.qubits[old_id]
        if old_ref.role is Role.OUTPUT and old_ref.round >= new_ref.round - 1:
            raise ProtocolError(
                f"cannot reuse output qubit {old_id} (round {old_ref.round}) "
                f"for round {new_ref.round}: still live"
            )
        if old_ref.round >= new_ref.round:
            raise ProtocolError(f"reuse donor {old_id} is not from an earlier round")

    def sub(q: int) -> int:
        return binding.get(q, q)

    gates = []
    for gate in circuit.gates:
        ops = tuple(sub(q) for q in gate.ops)
        if gate.kind is GateKind.BARRIER:
            seen: set[int] = set()
            ops = tuple(q for q in ops if not (q in seen or seen.add(q)))
        gates.append(replace(gate, ops=ops))
    qubits = {q: ref for q, ref in circuit.qubits.items() if q not in binding}
    modules = {
        key: ModuleSlots(
            slots.round,
            slots.module,
            tuple(sub(q) for q in slots.raw),
            tuple(sub(q) for q in slots.anc),
            tuple(sub(q) for q in slots.out),
        )
        for key, slots in circuit.modules.items()
    }
    return replace(circuit, gates=gates, qubits=qubits, modules=modules, reuse=ReusePolicy.REUSE)


def apply_port_assignment(
    circuit: Circuit,
    boundary_round: int,
    assignment: dict[tuple[int, int], tuple[int, int]],
) -> Circuit:
    """Rewire the boundary between ``boundary_round`` and the next round.

    ``assignment`` maps (source module, source port) -> (dest module,
    raw slot).  Every output of the source round must be consumed
    exactly once and a destination module may take at most one state
    from any source module.  Injection gates of the destination round
    are rewritten to reference the newly assigned output qubits.
    """
    rnd = boundary_round + 1
    k = circuit.capacity
    n_raw = 3 * k + 8
    n_src = circuit.module_count(boundary_round)
    n_dst = circuit.module_count(rnd)
    if len(assignment) != n_src * k:
        raise ProtocolError(
            f"assignment covers {len(assignment)} ports, expected {n_src * k}"
        )
    per_pair: set[tuple[int, int]] = set()
    slot_to_src: dict[tuple[int, int], tuple[int, int]] = {}
    for (s_mod, s_port), (d_mod, d_slot) in assignment.items():
        if not (0 <= s_mod < n_src and 0 <= s_port < k):
            raise ProtocolError(f"bad source port ({s_mod},{s_port})")
        if not (0 <= d_mod < n_dst and 0 <= d_slot < n_raw):
            raise ProtocolError(f"bad destination slot ({d_mod},{d_slot})")
        if (s_mod, d_mod) in per_pair:
            raise ProtocolError(
                f"destination module {d_mod} takes two states from source module {s_mod}"
            )
        per_pair.add((s_mod, d_mod))
        if (d_mod, d_slot) in slot_to_src:
            raise ProtocolError(f"slot ({d_mod},{d_slot}) assigned twice")
        slot_to_src[(d_mod, d_slot)] = (s_mod, s_port)

    wiring = dict(circuit.port_wiring)
    modules = dict(circuit.modules)
    sub_by_module: dict[int, dict[int, int]] = {}
    for d_mod in range(n_dst):
        slots = modules[(rnd, d_mod)]
        new_raw = []
        sub: dict[int, int] = {}
        for j in range(n_raw):
            s_mod, s_port = slot_to_src[(d_mod, j)]
            new_q = circuit.output_id(boundary_round, s_mod, s_port)
            old_q = slots.raw[j]
            new_raw.append(new_q)
            if new_q != old_q:
                sub[old_q] = new_q
            wiring[(rnd, d_mod, j)] = (s_mod, s_port)
        modules[(rnd, d_mod)] = replace(slots, raw=tuple(new_raw))
        sub_by_module[d_mod] = sub

    gates = []
    for gate in circuit.gates:
        if gate.round == rnd and gate.kind in INJECT_KINDS and gate.xround:
            sub = sub_by_module.get(gate.module, {})
            src = sub.get(gate.ops[0], gate.ops[0])
            gates.append(replace(gate, ops=(src, gate.ops[1])))
        else:
            gates.append(gate)
    return replace(circuit, gates=gates, port_wiring=wiring, modules=modules)


def validate_circuit(circuit: Circuit) -> None:
    """Check registry/gate/wiring invariants; raise ProtocolError on failure."""
    for idx, gate in enumerate(circuit.gates):
        for q in gate.ops:
            if q not in circuit.qubits:
                raise ProtocolError(f"gate {idx} references unknown qubit {q}")
        if gate.kind is GateKind.CNOT and (len(gate.ops) != 2 or gate.ops[0] == gate.ops[1]):
            raise ProtocolError(f"gate {idx}: CNOT needs 2 distinct operands")
        if gate.kind in INJECT_KINDS and (len(gate.ops) != 2 or gate.ops[0] == gate.ops[1]):
            raise ProtocolError(f"gate {idx}: injection needs 2 distinct operands")
        if gate.kind is GateKind.CXX:
            if len(gate.ops) < 2 or len(set(gate.ops)) != len(gate.ops):
                raise ProtocolError(f"gate {idx}: CXX needs a control and distinct targets")
        if gate.kind in SINGLE_QUBIT_KINDS and len(gate.ops) != 1:
            raise ProtocolError(f"gate {idx}: {gate.kind.value} takes one operand")
    pair_counts: dict[tuple[int, int, int], int] = {}
    for (rnd, d_mod, _slot), (s_mod, _port) in circuit.port_wiring.items():
        key = (rnd, d_mod, s_mod)
        pair_counts[key] = pair_counts.get(key, 0) + 1
        if pair_counts[key] > 1:
            raise ProtocolError(
                f"round {rnd} module {d_mod} takes {pair_counts[key]} states "
                f"from source module {s_mod}"
            )


# ---------------------------------------------------------------------------
# analytic model
# ---------------------------------------------------------------------------


@dataclass
class ErrorModel:
    """Per-round error rates, code distances and success probabilities."""

    eps_by_round: list[float]
    d_by_round: list[int]
    success_by_round: list[float]
    groups: list[int]
    modules_per_group: list[int]


def round_error(eps_in: float, k: int) -> float:
    """Output error rate of one distillation round: (1+3k) * eps_in^2."""
    if not 0.0 <= eps_in < 1.0:
        raise ProtocolError(f"eps_in must lie in [0,1), got {eps_in}")
    if k < 1:
        raise ProtocolError(f"k must be >= 1, got {k}")
    return (1 + 3 * k) * eps_in * eps_in


def success_probability(eps_in: float, k: int) -> float:
    """First-order module success probability 1 - (3k+8) * eps_in."""
    if k < 1:
        raise ProtocolError(f"k must be >= 1, got {k}")
    if eps_in < 0.0:
        raise ProtocolError(f"eps_in must be >= 0, got {eps_in}")
    if eps_in >= 1.0 / (3 * k + 8):
        raise YieldThresholdError(
            f"eps_in={eps_in} at or above yield threshold 1/(3k+8)={1.0 / (3 * k + 8):.6g}"
        )
    return 1.0 - (3 * k + 8) * eps_in


def code_distance(eps_budget: float, eps_phys: float, max_distance: int = 99) -> int:
    """Smallest odd d >= 3 with d * (100*eps_phys)^((d+1)/2) <= eps_budget."""
    if eps_budget <= 0.0:
        raise ProtocolError(f"eps_budget must be > 0, got {eps_budget}")
    if not 0.0 < eps_phys < 1e-2:
        raise ProtocolError(f"eps_phys must lie in (0, 1e-2), got {eps_phys}")
    base = 100.0 * eps_phys
    for d in range(3, max_distance + 1, 2):
        if d * base ** ((d + 1) / 2) <= eps_budget:
            return d
    raise DistanceInfeasibleError(
        f"no odd distance <= {max_distance} meets budget {eps_budget} at eps_phys {eps_phys}"
    )


def build_error_model(
    config: FactoryConfig, distance_overrides: list[int] | None = None
) -> ErrorModel:
    """Iterate the round-error recursion and size each round's code distance.

    Round r's fabric must protect states at the post-round fidelity, so
    d_r = code_distance(eps_r, eps_inject); pass ``distance_overrides``
    to substitute a different per-round budget rule.
    """
    config.validate()
    k = config.capacity_k
    eps = config.eps_inject
    eps_by_round: list[float] = []
    success: list[float] = []
    for _r in range(config.levels_l):
        success.append(success_probability(eps, k))
        eps = round_error(eps, k)
        eps_by_round.append(eps)
    if any(b >= a for a, b in zip(eps_by_round, eps_by_round[1:])):
        raise ProtocolError("round errors are not strictly decreasing")
    if distance_overrides is not None:
        if len(distance_overrides) != config.levels_l:
            raise ProtocolError("need one distance override per round")
        d_by_round = list(distance_overrides)
        if any(d < 3 or d % 2 == 0 for d in d_by_round):
            raise ProtocolError("distances must be odd and >= 3")
    else:
        d_by_round = [code_distance(e, config.eps_inject) for e in eps_by_round]
    return ErrorModel(
        eps_by_round=eps_by_round,
        d_by_round=d_by_round,
        success_by_round=success,
        groups=[3 * k + 8] * config.levels_l,
        modules_per_group=[k] * config.levels_l,
    )


def round_area(config: FactoryConfig, model: ErrorModel, r: int) -> int:
    """Physical qubits of round r: m^(r-1) * g^(l-r) * (5k+13) * d_r^2."""
    if not 1 <= r <= config.levels_l:
        raise ProtocolError(f"round {r} outside 1..{config.levels_l}")
    k = config.capacity_k
    m = model.modules_per_group[r - 1]
    g = model.groups[r - 1]
    d = model.d_by_round[r - 1]
    return m ** (r - 1) * g ** (config.levels_l - r) * (5 * k + 13) * d * d


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def serialize_circuit(circuit: Circuit) -> str:
    """Line-oriented text form: registry headers then one gate per line."""
    lines = [
        "circuit v1",
        f"meta capacity={circuit.capacity} levels={circuit.levels} reuse={circuit.reuse.value}",
    ]
    for q in sorted(circuit.qubits):
        ref = circuit.qubits[q]
        lines.append(f"qubit {q} {ref.role.value} {ref.round} {ref.module} {ref.port}")
    for (rnd, mod), slots in sorted(circuit.modules.items()):
        raw = ",".join(map(str, slots.raw))
        anc = ",".join(map(str, slots.anc))
        out = ",".join(map(str, slots.out))
        lines.append(f"modslots {rnd} {mod} raw={raw} anc={anc} out={out}")
    for (rnd, d_mod, slot), (s_mod, port) in sorted(circuit.port_wiring.items()):
        lines.append(f"wire {rnd} {d_mod} {slot} {s_mod} {port}")
    for gate in circuit.gates:
        ops = " ".join(map(str, gate.ops))
        flag = " xround" if gate.xround else ""
        lines.append(f"{gate.kind.value} {ops} # round={gate.round} module={gate.module}{flag}")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> Circuit:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "circuit v1":
        raise ProtocolError("not a circuit v1 file")
    meta = dict(tok.split("=") for tok in lines[1].split()[1:])
    qubits: dict[int, QubitRef] = {}
    modules: dict[tuple[int, int], ModuleSlots] = {}
    wiring: dict[tuple[int, int, int], tuple[int, int]] = {}
    gates: list[Gate] = []
    boundaries: list[int] = []
    for line in lines[2:]:
        head, *rest = line.split()
        if head == "qubit":
            qid, role, rnd, mod, port = rest
            qubits[int(qid)] = QubitRef(int(qid), Role(role), int(rnd), int(mod), int(port))
        elif head == "modslots":
            rnd, mod = int(rest[0]), int(rest[1])
            parts = dict(tok.split("=") for tok in rest[2:])
            modules[(rnd, mod)] = ModuleSlots(
                rnd,
                mod,
                tuple(int(x) for x in parts["raw"].split(",") if x),
                tuple(int(x) for x in parts["anc"].split(",") if x),
                tuple(int(x) for x in parts["out"].split(",") if x),
            )
        elif head == "wire":
            rnd, d_mod, slot, s_mod, port = map(int, rest)
            wiring[(rnd, d_mod, slot)] = (s_mod, port)
        else:
            body, _, annot = line.partition("#")
            toks = body.split()
            kind = GateKind(toks[0])
            ops = tuple(int(x) for x in toks[1:])
            fields = dict(tok.split("=") for tok in annot.split() if "=" in tok)
            xround = "xround" in annot.split()
            if kind is GateKind.BARRIER:
                boundaries.append(len(gates))
            gates.append(
                Gate(kind, ops, int(fields.get("round", 1)), int(fields.get("module", 0)), xround)
            )
    return Circuit(
        gates=gates,
        qubits=qubits,
        round_boundaries=boundaries,
        port_wiring=wiring,
        modules=modules,
        capacity=int(meta.get("capacity", 0)),
        levels=int(meta.get("levels", 1)),
        reuse=ReusePolicy(meta.get("reuse", "noreuse")),
    )
