import numpy as np
import pytest

from qramsim.channels import make_channel
from qramsim.circuits import Block, Circuit, build_circuit
from qramsim.experiments import check_density_enumeration, check_sparse_dense
from qramsim.montecarlo import enumerate_configs_fidelity, estimate_fidelity, uniform_query
from qramsim.oracle import DenseDensityMatrix, DenseState, dense_channel_sim, dense_unitary_sim, gate_matrix
from qramsim.sparse import Gate, GateKind, apply_gate, make_state


def test_identity_circuit_leaves_state_unchanged():
    c = build_circuit("BB2", 1)
    empty = Circuit(c.layout, [Block(())], c.noisy_wires, c.variant, c.copy_variant, c.n)
    init = DenseState.from_sparse(c.initial_state(uniform_query(2)))
    out = dense_unitary_sim(empty, init, [0, 1])
    assert np.array_equal(out.psi, init.psi)


@pytest.mark.parametrize("name,n", [("BB2", 2), ("BB3", 2), ("FANOUT", 2)])
def test_dense_matches_sparse_uniform_query(name, n):
    c = build_circuit(name, n)
    data = [1, 0, 0, 1]
    init = c.initial_state(uniform_query(4))
    sparse = init
    for _, layers in c.bound_blocks(data):
        for layer in layers:
            for g in layer:
                sparse = apply_gate(sparse, g)
    dense = dense_unitary_sim(c, DenseState.from_sparse(init), data)
    assert dense.max_deviation(sparse) <= 1e-10
    assert dense.norm() == pytest.approx(1.0, abs=1e-10)


def test_gate_matrices_are_permutations_with_phases():
    dims = (3, 3, 3, 2)
    gates = [
        Gate(GateKind.CSWAP, (0, 1, 2), control_value=2),
        Gate(GateKind.CNOT, (3, 0), control_value=1),
        Gate(GateKind.SWAP, (1, 2)),
        Gate(GateKind.MCX, (0, 1, 2), pattern=(1, 2)),
        Gate(GateKind.XTILDE, (2,), controls=((3, 1),)),
    ]
    for g in gates:
        _, u = gate_matrix(g, dims)
        assert np.allclose(u.conj().T @ u, np.eye(u.shape[0]))
        assert np.all((np.abs(u) > 0).sum(axis=0) == 1)


def test_dense_state_guard():
    with pytest.raises(ValueError):
        DenseState.from_sparse(build_circuit("BB3", 3).initial_state([(0, 1.0)]))


def test_zero_noise_gives_unit_fidelity():
    c = build_circuit("BB3", 1)
    dm, f = dense_channel_sim(c, make_channel("depolarizing", 3, 0.0), [0, 1], uniform_query(2))
    assert f == pytest.approx(1.0, abs=1e-12)
    assert dm.trace() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("kind", ["depolarizing", "bit_flip", "dephasing", "damping", "heating"])
def test_density_matrix_is_a_valid_state(kind):
    c = build_circuit("BB2", 2)
    dm, f = dense_channel_sim(c, make_channel(kind, 2, 0.1), [0, 1, 1, 0], uniform_query(4))
    assert abs(dm.trace() - 1) <= 1e-9
    assert dm.hermiticity_error() <= 1e-12
    assert dm.min_eigenvalue() >= -1e-10
    assert 0 <= f <= 1 + 1e-9


def test_fanout_dephasing_half():
    c = build_circuit("FANOUT", 1)
    ch = make_channel("dephasing", 2, 0.5)
    _, f = dense_channel_sim(c, ch, [1, 1], uniform_query(2))
    locs = [(k, r) for k in range(c.T) for r in c.noisy_wires]
    exact, _ = enumerate_configs_fidelity(c, ch, [1, 1], uniform_query(2), locs)
    assert f == pytest.approx(exact, abs=1e-9)
    est = estimate_fidelity(c, ch, [1, 1], samples=4000, master_seed=1)
    assert abs(est.mean_fidelity - f) <= 3 * est.std_error


def test_density_guard():
    c = build_circuit("BB2", 2)
    with pytest.raises(ValueError):
        dense_channel_sim(c, make_channel("depolarizing", 2, 0.1), [0, 1, 1, 0], uniform_query(4), guard=64)


def test_non_monomial_maps_are_rejected():
    dm = DenseDensityMatrix.from_sparse(make_state((2,), [((0,), 1.0)]))
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    with pytest.raises(ValueError):
        dm._apply_local_maps([0], [h])


def test_density_and_enumeration_agree():
    assert all(c.passed for c in check_density_enumeration())


def test_corrupted_gate_table_is_detected(monkeypatch):
    import qramsim.experiments as ex

    real = ex.apply_gates

    def corrupted(state, gates):
        flipped = [
            Gate(g.kind, g.wires, (g.control_value + 1) % 2, g.pattern, g.cell, g.controls)
            if g.kind is GateKind.CSWAP
            else g
            for g in gates
        ]
        return real(state, flipped)

    monkeypatch.setattr(ex, "apply_gates", corrupted)
    checks = check_sparse_dense(["BB2"], cases=4)
    assert not checks[0].passed
