import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qramsim.circuits import build_circuit, build_fanout_circuit, build_bb_circuit
from qramsim.fidelity import state_before_copy
from qramsim.montecarlo import uniform_query
from qramsim.oracle import DenseState, dense_unitary_sim
from qramsim.sparse import (
    Gate,
    GateKind,
    SparseState,
    WireLayout,
    apply_gate,
    apply_gates,
    encode_bit,
    entanglement_entropy,
    inner_product,
    make_state,
    reduced_density_matrix,
)


def qubits(k):
    return (2,) * k


def test_make_state_single_label():
    s = make_state(qubits(3), [((0, 1, 0), 1.0)])
    assert len(s) == 1
    assert s.norm() == pytest.approx(1.0)


def test_make_state_merges_duplicates():
    s = make_state(qubits(2), [((1, 0), 0.5), ((1, 0), 0.5)])
    assert len(s) == 1
    assert s.amps[0] == pytest.approx(1.0)


def test_make_state_uniform_superposition():
    s = make_state(qubits(2), [((i >> 1, i & 1), 0.5) for i in range(4)])
    assert len(s) == 4
    assert s.norm() == pytest.approx(1.0, abs=1e-12)


def test_make_state_rejects_bad_input():
    with pytest.raises(ValueError):
        make_state(qubits(2), [])
    with pytest.raises(ValueError):
        make_state(qubits(2), [((2, 0), 1.0)])
    with pytest.raises(ValueError):
        make_state(qubits(2), [((0, 0, 0), 1.0)])


def test_routing_is_trivial_on_wait_router():
    # router in |W>, incident qutrit carries |1>, both outputs empty
    dims = (3, 3, 3, 3)
    s = make_state(dims, [((0, 2, 0, 0), 1.0)])
    route = [Gate(GateKind.CSWAP, (0, 1, 2), control_value=1), Gate(GateKind.CSWAP, (0, 1, 3), control_value=2)]
    out = apply_gates(s, route)
    assert out.as_dict() == s.as_dict()


def test_cswap_routes_right_when_router_is_one():
    dims = (3, 3, 3)
    s = make_state(dims, [((2, 1, 0), 1.0)])
    out = apply_gate(s, Gate(GateKind.CSWAP, (0, 1, 2), control_value=2))
    assert list(out.as_dict()) == [(2, 0, 1)]


def test_z_phase_on_bus():
    s = make_state(qubits(2), [((0, 1), 1.0)])
    out = apply_gate(s, Gate(GateKind.Z, (1,)))
    assert out.as_dict() == {(0, 1): pytest.approx(-1.0)}


def test_xtilde_fixes_wait():
    s = make_state((3,), [((0,), 0.6), ((1,), 0.8)])
    out = apply_gate(s, Gate(GateKind.XTILDE, (0,)))
    assert out.as_dict() == pytest.approx({(0,): 0.6, (2,): 0.8})


def test_gate_errors():
    s = make_state(qubits(2), [((0, 0), 1.0)])
    with pytest.raises(ValueError):
        apply_gate(s, Gate(GateKind.XTILDE, (0,)))
    with pytest.raises(ValueError):
        apply_gate(s, Gate(GateKind.X, (5,)))


def test_inner_product_examples():
    bell = make_state(qubits(2), [((0, 0), 1.0), ((1, 1), 1.0)])
    zero = make_state(qubits(2), [((0, 0), 1.0)])
    one = make_state(qubits(2), [((0, 1), 1.0)])
    assert inner_product(bell, bell) == pytest.approx(1.0)
    assert inner_product(zero, one) == 0
    assert inner_product(bell, zero) == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(ValueError):
        inner_product(zero, make_state((3, 3), [((0, 0), 1.0)]))


def test_reduced_density_matrix_product_state():
    s = make_state(qubits(3), [((0, 1, 0), 1.0), ((0, 0, 1), 1.0)])
    assert np.allclose(reduced_density_matrix(s, 0), np.diag([1, 0]))


def test_fanout_routers_maximally_mixed_before_copy():
    c = build_fanout_circuit(3)
    s = state_before_copy(c, [0] * 8, uniform_query(8))
    for w in c.layout.reg("router_internal"):
        assert np.allclose(reduced_density_matrix(s, w), np.eye(2) / 2, atol=1e-12)


def test_bb3_root_rdm_matches_dense_oracle():
    c = build_bb_circuit(2, "three")
    s = state_before_copy(c, [0] * 4, uniform_query(4))
    root = c.layout.router_index[(0, 0)]
    rho = reduced_density_matrix(s, root)
    assert np.allclose(rho, np.diag([0, 0.5, 0.5]), atol=1e-12)
    psi = DenseState.from_sparse(s).psi
    moved = np.moveaxis(psi, root, 0).reshape(3, -1)
    assert np.allclose(moved @ moved.conj().T, rho, atol=1e-10)


def test_entanglement_entropy_examples():
    assert entanglement_entropy(np.diag([1.0, 0, 0])) == pytest.approx(0.0, abs=1e-12)
    assert entanglement_entropy(np.diag([0.5, 0.5])) == pytest.approx(1.0)
    assert entanglement_entropy(np.diag([0.5, 0.25, 0.25])) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        entanglement_entropy(np.array([[0.5, 0.5], [0.0, 0.5]]))


def _local_gates():
    yield Gate(GateKind.X, (0,)), (2,)
    yield Gate(GateKind.Z, (0,)), (2,)
    yield Gate(GateKind.XTILDE, (0,)), (3,)
    for d in (2, 3):
        yield Gate(GateKind.SWAP, (0, 1)), (d, d)
        for cv in range(d):
            yield Gate(GateKind.CSWAP, (0, 1, 2), control_value=cv), (d, d, d)
            yield Gate(GateKind.CNOT, (0, 1), control_value=cv), (d, d)
    yield Gate(GateKind.MCX, (0, 1, 2), pattern=(1, 0)), (2, 2, 2)
    yield Gate(GateKind.CSWAP, (1, 2, 3), control_value=2, controls=((0, 1),)), (2, 3, 3, 3)


@pytest.mark.parametrize("gate,dims", list(_local_gates()), ids=lambda x: str(getattr(x, "kind", x)))
def test_every_gate_is_a_phased_permutation(gate, dims):
    seen = set()
    for lab in itertools.product(*(range(d) for d in dims)):
        out = apply_gate(make_state(dims, [(lab, 1.0)]), gate)
        assert len(out) == 1
        assert abs(abs(out.amps[0]) - 1) < 1e-15
        seen.add(tuple(out.labels[0]))
    assert len(seen) == math.prod(dims)


def test_sparse_matches_dense_statevector_bb2_n2():
    c = build_circuit("BB2", 2)
    rng = np.random.default_rng(3)
    amps = [(i, a) for i, a in enumerate(rng.normal(size=4) + 1j * rng.normal(size=4))]
    nrm = math.sqrt(sum(abs(a) ** 2 for _, a in amps))
    amps = [(i, a / nrm) for i, a in amps]
    data = [1, 0, 0, 1]
    init = c.initial_state(amps)
    sparse = init
    for _, layers in c.bound_blocks(data):
        sparse = apply_gates(sparse, [g for layer in layers for g in layer])
    dense = dense_unitary_sim(c, DenseState.from_sparse(init), data)
    assert dense.max_deviation(sparse) <= 1e-10


@pytest.mark.parametrize("name", ["FANOUT", "BB2", "BB3", "QROM", "HYBRID_BB3"])
def test_term_count_stays_below_4N(name):
    n = 4
    c = build_circuit(name, n, 2 if name.startswith("HYBRID") else 0)
    state = c.initial_state(uniform_query(c.N))
    worst = len(state)
    for _, layers in c.bound_blocks([1, 0] * (c.N // 2)):
        for layer in layers:
            state = apply_gates(state, layer)
            worst = max(worst, len(state))
    assert worst <= 4 * c.N


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_norm_preserved_over_long_random_gate_sequences(seed):
    rng = np.random.default_rng(seed)
    dims = (3,) * 5
    labels = {tuple(int(v) for v in rng.integers(0, 3, size=5)) for _ in range(6)}
    amps = rng.normal(size=len(labels)) + 1j * rng.normal(size=len(labels))
    s = make_state(dims, list(zip(labels, amps)))
    gates = []
    for _ in range(2000):
        a, b, cw = (int(x) for x in rng.choice(5, size=3, replace=False))
        kind = rng.integers(3)
        if kind == 0:
            gates.append(Gate(GateKind.CSWAP, (cw, a, b), control_value=int(rng.integers(3))))
        elif kind == 1:
            gates.append(Gate(GateKind.XTILDE, (a,)))
        else:
            gates.append(Gate(GateKind.CNOT, (cw, a), control_value=int(rng.integers(3))))
    out = apply_gates(s, gates)
    assert abs(out.norm() - 1) <= 1e-10
    assert len(out) == len(s)


def test_encode_bit():
    assert encode_bit(0, 3) == 1 and encode_bit(1, 3) == 2
    assert encode_bit(1, 2) == 1


def test_wire_layout_registers_cover_every_wire():
    c = build_bb_circuit(3, "three")
    lay: WireLayout = c.layout
    wires = sorted(w for ws in lay.registers.values() for w in ws)
    assert wires == list(range(len(lay.wire_dims)))
    assert len(lay.router_index) == 2**3 - 1
    assert set(lay.router_index.values()) == set(lay.reg("router_internal"))
    assert set(lay.wire_dims) == {3}
    assert isinstance(c.initial_state(uniform_query(8)), SparseState)
