import numpy as np
import pytest

from qramsim.channels import (
    A1,
    A2,
    ChannelKind,
    KrausChannel,
    draw_indices,
    inject_error,
    kraus_probabilities,
    make_channel,
    sample_round,
    verify_channel,
)
from qramsim.circuits import build_bb_circuit, ideal_output
from qramsim.fidelity import config_fidelity, state_before_copy
from qramsim.montecarlo import uniform_query
from qramsim.sparse import apply_gates, make_state

KINDS = list(ChannelKind)
MIXED_UNITARY = {ChannelKind.DEPOLARIZING, ChannelKind.BIT_FLIP, ChannelKind.DEPHASING}


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("eps", [0.0, 1e-4, 0.1, 1.0])
def test_completeness(kind, dim, eps):
    ch = make_channel(kind, dim, eps)
    total = sum(k.conj().T @ k for k in ch.kraus)
    assert np.max(np.abs(total - np.eye(dim))) <= 1e-12


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("kind", KINDS)
def test_all_channels_basis_preserving_with_diagonal_weights(kind, dim):
    rep = verify_channel(make_channel(kind, dim, 0.1))
    assert rep.completeness_residual < 1e-12
    assert rep.basis_preserving and rep.diagonal_weights
    assert rep.sampler_supported
    assert rep.mixed_unitary == (kind in MIXED_UNITARY)


def test_qubit_dephasing_matches_definition():
    eps = 0.03
    ch = make_channel("dephasing", 2, eps)
    assert np.allclose(ch.kraus[0], np.sqrt(1 - eps) * np.eye(2))
    assert np.allclose(ch.kraus[1], np.sqrt(eps) * np.diag([1, -1]))
    assert ch.mixed_unitary and ch.diagonal_weights


def test_qutrit_depolarizing_uses_eight_weighted_products():
    eps = 0.2
    ch = make_channel("depolarizing", 3, eps)
    assert len(ch.kraus) == 9
    for k in ch.kraus[1:]:
        assert np.allclose(k.conj().T @ k, eps / 8 * np.eye(3))
    ops = {tuple(np.round(k / np.sqrt(eps / 8), 9).ravel()) for k in ch.kraus[1:]}
    expect = set()
    for a in range(3):
        for b in range(3):
            if a or b:
                m = np.linalg.matrix_power(A1, a) @ np.linalg.matrix_power(A2, b)
                expect.add(tuple(np.round(m, 9).ravel()))
    assert ops == expect


def test_qutrit_dephasing_definition():
    eps = 0.1
    ch = make_channel("dephasing", 3, eps)
    assert np.allclose(ch.kraus[1], np.sqrt(eps / 2) * A2)
    assert np.allclose(ch.kraus[2], np.sqrt(eps / 2) * A2 @ A2)


def test_epsilon_w_values():
    eps = 0.07
    assert make_channel("damping", 3, eps).epsilon_w == 0.0
    assert make_channel("heating", 3, eps).epsilon_w == pytest.approx(eps, abs=1e-15)
    for kind in MIXED_UNITARY:
        assert make_channel(kind, 3, eps).epsilon_w == pytest.approx(eps, abs=1e-15)


def test_printed_qutrit_bit_flip_is_incomplete():
    # two-operator set whose flip annihilates |W>; the missing weight is eps on |W>
    eps = 0.1
    k1 = np.zeros((3, 3), dtype=complex)
    k1[1, 2] = k1[2, 1] = np.sqrt(eps)
    broken = KrausChannel(3, [np.sqrt(1 - eps) * np.eye(3), k1], eps)
    assert verify_channel(broken).completeness_residual == pytest.approx(eps)


def test_missing_operator_residual():
    eps = 0.2
    ch = make_channel("dephasing", 2, eps)
    broken = KrausChannel(2, ch.kraus[:1], eps)
    assert verify_channel(broken).completeness_residual == pytest.approx(eps)


def test_non_diagonal_weights_rejected():
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    ch = KrausChannel(2, [np.sqrt(0.9) * np.eye(2), np.sqrt(0.1) * h], 0.1)
    rep = verify_channel(ch)
    assert not rep.sampler_supported
    s = make_state((2,), [((0,), 1.0)])
    with pytest.raises(ValueError):
        sample_round(s, [0], ch, np.random.default_rng(0))


def test_bit_flip_error_probability_is_state_independent():
    ch = make_channel("bit_flip", 2, 0.13)
    s = make_state((2, 2), [((0, 1), 0.6), ((1, 0), 0.8j)])
    assert kraus_probabilities(s, 0, ch) == pytest.approx([0.87, 0.13])


def test_damping_never_hits_wait():
    ch = make_channel("damping", 3, 0.5)
    s = make_state((3, 3), [((0, 1), 0.6), ((0, 2), 0.8)])
    p = kraus_probabilities(s, 0, ch)
    assert p[1] == 0 and p[2] == 0


def test_dephasing_on_wait_is_harmless():
    ch = make_channel("dephasing", 3, 0.3)
    s = make_state((3, 2), [((0, 0), 0.6), ((0, 1), 0.8)])
    out = inject_error(s, 0, 1, ch)
    assert abs(np.vdot(s.amps, out.amps)) == pytest.approx(1.0)


def test_identity_injection_leaves_state_unchanged():
    ch = make_channel("depolarizing", 3, 0.1)
    s = make_state((3, 3), [((1, 0), 0.6), ((2, 1), 0.8)])
    out = inject_error(s, 0, 0, ch)
    assert out.as_dict() == pytest.approx(s.as_dict())


def test_injection_annihilating_state_raises():
    ch = make_channel("damping", 3, 0.1)
    s = make_state((3,), [((0,), 1.0)])
    with pytest.raises(ValueError):
        inject_error(s, 0, 1, ch)


def test_flip_on_inactive_router_is_harmless_to_the_query():
    # with a single address, routers off the path sit in |W>; flipping them changes nothing
    c = build_bb_circuit(3, "three")
    data = [0, 1, 1, 0, 1, 0, 0, 1]
    amps = [(2, 1.0)]
    s = state_before_copy(c, data, amps)
    ch = make_channel("bit_flip", 3, 0.1)
    off_path = c.layout.router_index[(2, 3)]
    s2 = inject_error(s, off_path, 1, ch)
    assert s2.as_dict() == pytest.approx(s.as_dict())
    final = s2
    blocks = c.bound_blocks(data)
    started = False
    for b, (_, layers) in zip(c.blocks, blocks):
        if any(g.is_classical for g in b.gates()):
            started = True
        if started:
            final = apply_gates(final, [g for layer in layers for g in layer])
    assert config_fidelity(final, ideal_output(amps, data, c), c.output_wires) == pytest.approx(1.0)


def test_bit_flip_on_two_level_root_propagates():
    # a flip on the root of a two-level tree reroutes the bus; the query fails
    c = build_bb_circuit(2, "two")
    data = [0, 1, 1, 0]
    amps = [(0, 1.0)]
    s = state_before_copy(c, data, amps)
    ch = make_channel("bit_flip", 2, 0.1)
    s2 = inject_error(s, c.layout.router_index[(0, 0)], 1, ch)
    assert s2.as_dict() != s.as_dict()


def _round_events(seed, ch, state, wires):
    rng = np.random.default_rng(seed)
    return sample_round(state, wires, ch, rng)


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("kind", KINDS)
def test_sampler_frequencies(kind, dim):
    ch = make_channel(kind, dim, 0.3)
    rng = np.random.default_rng(1)
    labels = [tuple(int(v) for v in rng.integers(0, dim, size=3)) for _ in range(4)]
    amps = rng.normal(size=4) + 1j * rng.normal(size=4)
    state = make_state((dim,) * 3, list(zip(labels, amps)))
    p = np.array(kraus_probabilities(state, 1, ch))
    S = 100_000
    counts = np.zeros(ch.n_kraus)
    wires = np.array([1])
    for _ in range(S):
        ms = draw_indices(state.wl, state.amps, wires, ch, rng)
        counts[ms[0]] += 1
    sd = np.sqrt(S * p * (1 - p))
    assert np.all(np.abs(counts - S * p) <= 4 * sd + 1e-9)


def test_sample_round_is_deterministic():
    ch = make_channel("depolarizing", 3, 0.3)
    state = make_state((3,) * 4, [((1, 0, 2, 0), 0.6), ((2, 1, 0, 0), 0.8)])
    a = _round_events(5, ch, state, [0, 1, 2, 3])
    b = _round_events(5, ch, state, [0, 1, 2, 3])
    assert a[1] == b[1]
    assert a[0].as_dict() == b[0].as_dict()
    assert a[0].norm() == pytest.approx(1.0)
