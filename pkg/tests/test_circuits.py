import json
import math

import numpy as np
import pytest

from qramsim.circuits import (
    ClassicalData,
    CopyVariant,
    build_bb_circuit,
    build_circuit,
    build_double_query_circuit,
    build_fanout_circuit,
    build_hybrid_circuit,
    build_qrom_circuit,
    check_layers,
    ideal_output,
)
from qramsim.montecarlo import uniform_query
from qramsim.sparse import apply_gates, inner_product, make_state

TREE = ["BB3", "BB2", "BB3_MODIFIED", "BB2_MODIFIED", "FANOUT"]


def run(c, data, amps, init_label=None):
    state = c.initial_state(amps, init_label)
    for _, layers in c.bound_blocks(data):
        state = apply_gates(state, [g for layer in layers for g in layer])
    return state


def expected_final(c, data, amps, init_label=None):
    """ideal output on address and bus, every other wire back in its initial state."""
    init = c.initial_state([(0, 1.0)], init_label)
    out = list(c.output_wires)
    rest = [w for w in range(c.layout.n_wires) if w not in out]
    # initial amplitudes are real and positive, so the marginal fixes them
    rest_amp = {}
    for lab, a in zip(init.labels, init.amps):
        key = tuple(int(v) for v in lab[rest])
        rest_amp[key] = rest_amp.get(key, 0.0) + abs(a) ** 2
    ideal = ideal_output(amps, data, c)
    terms = []
    for key, p in rest_amp.items():
        for lab_i, a_i in zip(ideal.labels, ideal.amps):
            lab = np.zeros(c.layout.n_wires, dtype=int)
            lab[rest] = key
            lab[out] = lab_i
            terms.append((tuple(lab), math.sqrt(p) * a_i))
    return make_state(c.layout, terms, normalize=False)


def assert_round_trip(c, data, amps, init_label=None):
    final = run(c, data, amps, init_label)
    want = expected_final(c, data, amps, init_label)
    assert abs(inner_product(want, final)) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("n,T", [(1, 5), (2, 7), (3, 11), (4, 13), (5, 17), (6, 19), (7, 23), (8, 25)])
def test_bucket_brigade_noise_rounds(n, T):
    assert build_bb_circuit(n, "three").T == T
    assert build_bb_circuit(n, "two").T == T


def test_n3_schedule_has_eleven_rounds_with_one_copy_block():
    c = build_bb_circuit(3, "three")
    assert c.T == 11
    copies = [i for i, b in enumerate(c.blocks) if any(g.is_classical for g in b.gates())]
    assert copies == [5]


@pytest.mark.parametrize("name", TREE + ["QROM", "HYBRID_BB3", "HYBRID_FANOUT", "DOUBLE_QUERY_BB3"])
def test_layers_are_legal(name):
    c = build_circuit(name, 4, 2)
    check_layers(c.blocks)
    for b in c.blocks:
        assert sum(1 for layer in b.layers if any(g.kind.value == "CSWAP" for g in layer)) <= 4


@pytest.mark.parametrize("name", TREE)
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_round_trip_every_address(name, n):
    c = build_circuit(name, n)
    rng = np.random.default_rng(n)
    reps = 100 if n <= 3 else 10
    for _ in range(reps):
        data = ClassicalData.random(n, int(rng.integers(2**31)))
        # a uniform query covers every single address in one run: the output
        # is a product with the ancillas only if every branch is correct
        assert_round_trip(c, data, uniform_query(c.N))
    for i in range(c.N):
        assert_round_trip(c, data, [(i, 1.0)])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("sub", ["BB3", "BB2", "FANOUT"])
def test_hybrid_round_trip(n, sub):
    rng = np.random.default_rng(7)
    for m in range(n + 1):
        c = build_hybrid_circuit(n, m, sub)
        for _ in range(5):
            data = ClassicalData.random(n, int(rng.integers(2**31)))
            assert_round_trip(c, data, uniform_query(c.N))


def test_qrom_round_trip_and_examples():
    for n in range(1, 6):
        c = build_qrom_circuit(n)
        assert_round_trip(c, ClassicalData.random(n, n), uniform_query(c.N))
    c = build_qrom_circuit(2)
    blocks = c.bound_blocks([0, 0, 0, 0])
    assert sum(len(layer) for _, layers in blocks for layer in layers) == 0
    final = run(c, [1, 0, 1, 0], [(0, 1.0)])
    assert final.labels[0][c.bus_wire] == 1


def test_bb3_n3_returns_x2_for_address_010():
    c = build_bb_circuit(3, "three")
    data = [0, 0, 1, 0, 0, 0, 0, 0]
    final = run(c, data, [(2, 1.0)])
    assert len(final) == 1
    assert final.labels[0][c.bus_wire] == 2  # qutrit |1>
    data = [1, 1, 0, 1, 1, 1, 1, 1]
    assert run(c, data, [(2, 1.0)]).labels[0][c.bus_wire] == 1  # qutrit |0>


def test_fanout_n2_address_11():
    c = build_fanout_circuit(2)
    data = [0, 0, 0, 1]
    assert_round_trip(c, data, [(3, 1.0)])


def test_hybrid_n4_m2_bb3_address_0110():
    c = build_hybrid_circuit(4, 2, "BB3")
    for bit in (0, 1):
        data = [1 - bit] * 16
        data[6] = bit
        final = run(c, data, [(6, 1.0)])
        assert len(final) == 1
        assert final.labels[0][c.bus_wire] == bit + 1
        assert_round_trip(c, data, [(6, 1.0)])


@pytest.mark.parametrize("sub,plain", [("BB3", "BB3"), ("BB2", "BB2"), ("FANOUT", "FANOUT")])
def test_hybrid_with_one_block_is_the_plain_qram(sub, plain):
    h = build_hybrid_circuit(3, 0, sub)
    p = build_circuit(plain, 3)
    assert h.T == p.T
    assert h.gate_counts() == p.gate_counts()
    assert h.layout.wire_dims == p.layout.wire_dims
    data = ClassicalData.random(3, 1)
    a = run(h, data, uniform_query(8))
    b = run(p, data, uniform_query(8))
    assert a.as_dict() == pytest.approx(b.as_dict())


def test_hybrid_with_single_cell_blocks_is_qrom_like():
    c = build_hybrid_circuit(3, 3, "BB3")
    assert c.layout.reg("router_internal") == ()
    assert c.T == 8
    assert_round_trip(c, ClassicalData.random(3, 5), uniform_query(8))


@pytest.mark.parametrize("levels", ["three", "two"])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_double_query_from_random_initial_labels(levels, n):
    c = build_double_query_circuit(n, levels)
    rng = np.random.default_rng(42)
    for _ in range(20):
        data = ClassicalData.random(n, int(rng.integers(2**31)))
        init = c.random_tree_label(rng)
        assert_round_trip(c, data, uniform_query(c.N), init)


def test_double_query_clean_start_matches_single_query():
    data = ClassicalData.random(3, 9)
    single = build_bb_circuit(3, "three")
    double = build_double_query_circuit(3, "three")
    f1 = run(single, data, uniform_query(8))
    f2 = run(double, data, uniform_query(8))
    out1 = {tuple(lab[list(single.output_wires)]): a for lab, a in zip(f1.labels, f1.amps)}
    out2 = {tuple(lab[list(double.output_wires)]): a for lab, a in zip(f2.labels, f2.amps)}
    assert out1 == pytest.approx(out2)


def test_ideal_output_examples():
    c3 = build_bb_circuit(2, "three")
    c2 = build_bb_circuit(2, "two")
    data = [0, 1, 1, 0]
    s = ideal_output([(1, 1.0)], data, c3)
    assert len(s) == 1 and s.labels[0][-1] == 2
    s = ideal_output([(1, 1.0)], data, c2)
    assert sorted(s.amps.real) == pytest.approx([-1 / math.sqrt(2), 1 / math.sqrt(2)])
    assert len(ideal_output(uniform_query(4), data, c3)) == 4
    s = ideal_output(uniform_query(4), data, c2)
    assert len(s) == 8 and s.norm() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        ideal_output([(0, 0.5)], data, c3)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        build_bb_circuit(0)
    with pytest.raises(ValueError):
        build_bb_circuit(13)
    with pytest.raises(ValueError):
        build_bb_circuit(2, "two", copy_variant=CopyVariant.ZERO_XTILDE)
    with pytest.raises(ValueError):
        build_bb_circuit(2, "three", copy_variant=CopyVariant.PLUS_Z)
    with pytest.raises(ValueError):
        build_qrom_circuit(9)
    with pytest.raises(ValueError):
        build_hybrid_circuit(3, 4)
    with pytest.raises(ValueError):
        ClassicalData((0, 1, 1))


def test_summary_json():
    c = build_bb_circuit(3, "three")
    d = json.loads(c.summary_json())
    assert d["variant"] == "BB3" and d["n"] == 3 and d["T"] == 11
    assert d["registers"] == {"address": 3, "input_rail": 1, "bus": 1, "router_internal": 7, "router_output": 14}
    assert d["gates"]["CLASSICAL_XTILDE"] == 2**3  # one per bottom output mode


def test_noise_defaults():
    bb = build_bb_circuit(3, "three")
    assert set(bb.noisy_wires) == set(bb.layout.reg("router_internal"))
    q = build_qrom_circuit(3)
    assert set(q.noisy_wires) == set(q.address_wires) | {q.bus_wire}
