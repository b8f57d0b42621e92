"""Kraus channels for qubit and qutrit wires, and an exact per-round sampler.

Qutrit matrices are written in the ``(W, 0, 1)`` basis order, matching the
label encoding of :mod:`qramsim.sparse`.

All channels here map each basis state to a multiple of a single basis
state (each Kraus operator has at most one nonzero entry per column), so a
Kraus operator is stored as a value map ``perm[m, v]`` plus a coefficient
``coef[m, v]``. Because every ``K_m^dag K_m`` is then diagonal, the Born
probability of a whole round configuration ``c = (m_r)`` is

    p(c) = sum_t |a_t|^2 prod_r W[m_r, v_tr],     W[m, v] = |coef[m, v]|^2,

i.e. a mixture over terms of independent per-wire distributions. The
sampler draws a term first and then every wire's index, which reproduces
``p(c)`` exactly.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .sparse import DROP_TOL, SparseState, merge_duplicates

OMEGA = np.exp(2j * np.pi / 3)
A1 = np.array([[0, 1, 0], [0, 0, 1], [1, 0, 0]], dtype=complex)
A2 = np.diag([1, OMEGA, OMEGA**2])

_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1, -1]).astype(complex)


class ChannelKind(str, enum.Enum):
    DEPOLARIZING = "DEPOLARIZING"
    BIT_FLIP = "BIT_FLIP"
    DEPHASING = "DEPHASING"
    DAMPING = "DAMPING"
    HEATING = "HEATING"


def _ket(d, i):
    v = np.zeros(d, dtype=complex)
    v[i] = 1
    return v


def _proj(d, i, j):
    return np.outer(_ket(d, i), _ket(d, j))


def _kraus_list(kind: ChannelKind, dim: int, eps: float) -> list[np.ndarray]:
    s = np.sqrt
    if dim == 2:
        I = np.eye(2, dtype=complex)
        if kind is ChannelKind.DEPOLARIZING:
            return [s(1 - eps) * I, s(eps / 3) * _X, s(eps / 3) * _Y, s(eps / 3) * _Z]
        if kind is ChannelKind.BIT_FLIP:
            return [s(1 - eps) * I, s(eps) * _X]
        if kind is ChannelKind.DEPHASING:
            return [s(1 - eps) * I, s(eps) * _Z]
        if kind is ChannelKind.DAMPING:
            return [_proj(2, 0, 0) + s(1 - eps) * _proj(2, 1, 1), s(eps) * _proj(2, 0, 1)]
        if kind is ChannelKind.HEATING:
            return [_proj(2, 1, 1) + s(1 - eps) * _proj(2, 0, 0), s(eps) * _proj(2, 1, 0)]
    elif dim == 3:
        I = np.eye(3, dtype=complex)
        w, z, o = 0, 1, 2
        if kind is ChannelKind.DEPOLARIZING:
            a1sq = A1 @ A1
            a2sq = A2 @ A2
            ops = [A1, A2, a1sq, a2sq, A1 @ A2, a1sq @ A2, A1 @ a2sq, a1sq @ a2sq]
            return [s(1 - eps) * I] + [s(eps / 8) * op for op in ops]
        if kind is ChannelKind.BIT_FLIP:
            # the flip fixes |W>; dropping that entry would leave the set
            # non-trace-preserving on |W>
            xt = _proj(3, w, w) + _proj(3, z, o) + _proj(3, o, z)
            return [s(1 - eps) * I, s(eps) * xt]
        if kind is ChannelKind.DEPHASING:
            return [s(1 - eps) * I, s(eps / 2) * A2, s(eps / 2) * (A2 @ A2)]
        if kind is ChannelKind.DAMPING:
            k0 = _proj(3, w, w) + s(1 - eps) * (_proj(3, z, z) + _proj(3, o, o))
            return [k0, s(eps) * _proj(3, w, z), s(eps) * _proj(3, w, o)]
        if kind is ChannelKind.HEATING:
            k0 = _proj(3, z, z) + _proj(3, o, o) + s(1 - eps) * _proj(3, w, w)
            return [k0, s(eps / 2) * _proj(3, z, w), s(eps / 2) * _proj(3, o, w)]
    raise ValueError(f"no {kind.value} channel for dimension {dim}")


@dataclass
class KrausChannel:
    """A single-wire channel given by Kraus matrices.

    ``kraus[0]`` is the no-error operator. The value-map form (``perm``,
    ``coef``, ``weights``) is only filled in for basis-preserving channels.
    """

    dim: int
    kraus: list[np.ndarray]
    epsilon: float
    kind: ChannelKind | None = None
    perm: np.ndarray = field(init=False, repr=False)
    coef: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    cum_weights: np.ndarray = field(init=False, repr=False)
    injective: np.ndarray = field(init=False, repr=False)
    k0_scalar: bool = field(init=False, repr=False)

    def __post_init__(self):
        self.kraus = [np.asarray(k, dtype=complex) for k in self.kraus]
        for k in self.kraus:
            if k.shape != (self.dim, self.dim):
                raise ValueError("Kraus matrix has the wrong shape")
        K, d = len(self.kraus), self.dim
        self.perm = np.tile(np.arange(d, dtype=np.uint8), (K, 1))
        self.coef = np.zeros((K, d), dtype=complex)
        if self.basis_preserving:
            for m, k in enumerate(self.kraus):
                for v in range(d):
                    col = k[:, v]
                    nz = np.flatnonzero(np.abs(col) > 0)
                    if nz.size:
                        self.perm[m, v] = nz[0]
                        self.coef[m, v] = col[nz[0]]
        self.weights = np.abs(self.coef) ** 2
        self.cum_weights = np.cumsum(self.weights, axis=0)
        self.injective = self._injective()
        k0 = self.kraus[0]
        # K_0 proportional to the identity can be skipped before renormalizing
        self.k0_scalar = bool(np.allclose(k0, k0[0, 0] * np.eye(d), atol=0))

    @property
    def n_kraus(self) -> int:
        return len(self.kraus)

    def completeness_residual(self) -> float:
        total = sum(k.conj().T @ k for k in self.kraus)
        return float(np.max(np.abs(total - np.eye(self.dim))))

    @property
    def basis_preserving(self) -> bool:
        return all(np.count_nonzero(np.abs(k) > 0, axis=0).max() <= 1 for k in self.kraus)

    @property
    def diagonal_weights(self) -> bool:
        for k in self.kraus:
            kk = k.conj().T @ k
            if np.max(np.abs(kk - np.diag(np.diag(kk)))) > 1e-12:
                return False
        return True

    @property
    def mixed_unitary(self) -> bool:
        def prop_identity(a):
            return np.allclose(a, a[0, 0] * np.eye(self.dim), atol=1e-12)

        if not prop_identity(self.kraus[0]):
            return False
        return all(prop_identity(k.conj().T @ k) for k in self.kraus[1:])

    @property
    def epsilon_w(self) -> float:
        k0 = self.kraus[0]
        return float(1.0 - np.real((k0.conj().T @ k0)[0, 0]))


    def _injective(self) -> np.ndarray:
        # per Kraus index: distinct surviving values stay distinct
        out = np.ones(self.n_kraus, dtype=bool)
        for m in range(self.n_kraus):
            live = self.perm[m][self.weights[m] > 0]
            out[m] = len(set(live.tolist())) == live.size
        return out

    def to_dict(self) -> dict:
        return {"kind": self.kind.value if self.kind else None, "dim": self.dim, "epsilon": self.epsilon}

    def describe(self) -> str:
        return f"{self.kind.value if self.kind else 'CUSTOM'}(d={self.dim}, eps={self.epsilon:g})"


def make_channel(kind: ChannelKind | str, dim: int, epsilon: float) -> KrausChannel:
    """Channel ``kind`` on a ``dim``-level wire with error rate ``epsilon``."""
    if not isinstance(kind, ChannelKind):
        kind = ChannelKind(str(kind).upper().replace("-", "_"))
    eps = float(epsilon)
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    return KrausChannel(dim, _kraus_list(kind, int(dim), eps), eps, kind)


@dataclass
class ChannelReport:
    completeness_residual: float
    basis_preserving: bool
    diagonal_weights: bool
    mixed_unitary: bool
    epsilon_w: float
    sampler_supported: bool


def verify_channel(ch: KrausChannel) -> ChannelReport:
    diag = ch.diagonal_weights
    bp = ch.basis_preserving
    return ChannelReport(
        completeness_residual=ch.completeness_residual(),
        basis_preserving=bp,
        diagonal_weights=diag,
        mixed_unitary=ch.mixed_unitary,
        epsilon_w=ch.epsilon_w,
        sampler_supported=diag and bp,
    )


@dataclass
class ErrorConfig:
    """Sampled non-identity Kraus applications.

    ``events`` holds ``(round, wire, m)`` with ``m > 0``, sorted.
    ``lambda_good`` is the probability weight of address branches none of
    whose routers were hit (tree circuits only).
    """

    events: list[tuple[int, int, int]] = field(default_factory=list)
    lambda_good: float | None = None

    def __post_init__(self):
        self.events = sorted((int(t), int(r), int(m)) for t, r, m in self.events)

    def to_json(self) -> str:
        return json.dumps({"events": self.events, "lambda_good": self.lambda_good})


def _require_sampler(ch: KrausChannel) -> None:
    if not (ch.basis_preserving and ch.diagonal_weights):
        raise ValueError("sampler needs a basis-preserving channel with diagonal K^dag K")


def apply_kraus(
    wl: np.ndarray,
    amps: np.ndarray,
    wires: np.ndarray,
    ms: np.ndarray,
    ch: KrausChannel,
) -> tuple[np.ndarray, np.ndarray]:
    """Apply ``K_{ms[i]}`` to ``wires[i]`` for every i (unnormalized).

    ``wl`` is a wire-major label array and is not modified. Zero amplitudes
    are dropped and colliding labels merged.
    """
    if len(wires) == 0:
        return wl, amps
    vals = wl[wires]
    mcol = ms[:, None]
    coef = np.prod(ch.coef[mcol, vals], axis=0)
    wl = wl.copy()
    wl[wires] = ch.perm[mcol, vals]
    amps = amps * coef
    keep = np.abs(amps) > 0
    if not keep.all():
        wl, amps = np.ascontiguousarray(wl[:, keep]), amps[keep]
    if not ch.injective[np.unique(ms)].all():
        wl, amps = merge_duplicates(wl, amps)
    return wl, amps


def normalize_prune(wl: np.ndarray, amps: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Normalize, drop amplitudes below the threshold, return the squared norm."""
    nrm2 = float(np.real(np.vdot(amps, amps)))
    if nrm2 <= 0.0:
        raise ValueError("Kraus operator annihilated the state")
    amps = amps / np.sqrt(nrm2)
    keep = np.abs(amps) >= DROP_TOL
    if not keep.all():
        wl, amps = np.ascontiguousarray(wl[:, keep]), amps[keep]
        amps = amps / np.linalg.norm(amps)
    return wl, amps, nrm2


def draw_term(amps: np.ndarray, rng: np.random.Generator, weights: np.ndarray | None = None) -> int:
    w = np.abs(amps) ** 2 if weights is None else weights
    cw = np.cumsum(w)
    return min(int(np.searchsorted(cw, rng.random() * cw[-1], side="right")), len(w) - 1)


def draw_indices(
    wl: np.ndarray,
    amps: np.ndarray,
    wires: np.ndarray,
    ch: KrausChannel,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw one Kraus index per wire from the exact joint Born distribution."""
    t = draw_term(amps, rng)
    vals = wl[wires, t]
    cum = ch.cum_weights[:, vals]  # (K, R)
    u = rng.random(len(wires)) * cum[-1]
    return np.count_nonzero(u[None, :] >= cum, axis=0).astype(np.intp)


def sample_round(
    state: SparseState,
    noisy_wires: Sequence[int],
    ch: KrausChannel,
    rng: np.random.Generator,
) -> tuple[SparseState, list[tuple[int, int]]]:
    """One noise round on ``noisy_wires``.

    Returns the renormalized post-measurement state and the list of
    ``(wire, m)`` with ``m > 0``.
    """
    _require_sampler(ch)
    if any(state.dims[w] != ch.dim for w in noisy_wires):
        raise ValueError("channel dimension does not match a noisy wire")
    if np.max(np.abs(ch.weights.sum(axis=0) - 1.0)) > 1e-9:
        raise ValueError("Kraus weights do not sum to one")
    wires = np.asarray(noisy_wires, dtype=np.intp)
    ms = draw_indices(state.wl, state.amps, wires, ch, rng)
    wl, amps = apply_kraus(state.wl, state.amps, wires, ms, ch)
    wl, amps, _ = normalize_prune(wl, amps)
    hits = [(int(w), int(m)) for w, m in zip(wires, ms) if m > 0]
    return SparseState.from_wires(wl, amps, state.dims), hits


def kraus_probabilities(state: SparseState, wire: int, ch: KrausChannel) -> np.ndarray:
    """Marginal ``p_m = Tr(K_m rho_r K_m^dag)`` for one wire."""
    w = np.abs(state.amps) ** 2
    return ch.weights[:, state.wl[wire]] @ w


def inject_error(state: SparseState, wire: int, kraus_index: int, ch: KrausChannel) -> SparseState:
    """Apply ``K_m`` to one wire and renormalize (deterministic test hook)."""
    _require_sampler(ch)
    if not 0 <= kraus_index < ch.n_kraus:
        raise ValueError(f"Kraus index {kraus_index} out of range")
    wl, amps = apply_kraus(state.wl, state.amps, np.array([wire]), np.array([kraus_index]), ch)
    if amps.size == 0:
        raise ValueError("Kraus operator annihilated the state")
    wl, amps, _ = normalize_prune(wl, amps)
    return SparseState.from_wires(wl, amps, state.dims)
