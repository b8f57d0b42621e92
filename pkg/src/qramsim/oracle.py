"""Brute-force reference simulators for small instances.

Gates are rebuilt here from explicit local matrices (controlled-SWAPs as
block matrices, flips as permutation matrices, and so on) rather than
through the vectorized kernel, so agreement with :mod:`qramsim.sparse`
is a genuine cross-check.

* :func:`dense_unitary_sim` evolves a full statevector (``prod(dims) <= 2**22``).
* :func:`dense_channel_sim` evolves an exact density matrix. It works on
  the set of basis labels reachable from the input under the circuit's
  gates and Kraus maps, which is far smaller than the full space for QRAM
  circuits (the full space of a 13-qubit tree would need a 8192 x 8192
  matrix).
* :func:`enumerate_configs_fidelity` sums ``p(c) F(c)`` over every error
  configuration on a restricted set of locations.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .channels import KrausChannel
from .circuits import Circuit, ClassicalData, ideal_output
from .montecarlo import enumerate_configs_fidelity
from .sparse import Gate, GateKind, SparseState

STATE_GUARD = 2**22
DENSITY_GUARD = 2048

_X2 = np.array([[0, 1], [1, 0]], dtype=complex)
_Z2 = np.diag([1.0, -1.0]).astype(complex)
_XT = np.array([[1, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)


def _swap_matrix(d: int) -> np.ndarray:
    m = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            m[j * d + i, i * d + j] = 1
    return m


def _controlled(u: np.ndarray, d_ctrl: int, value: int) -> np.ndarray:
    """``sum_v |v><v| (x) (u if v == value else I)``; the control is the first factor."""
    k = u.shape[0]
    out = np.zeros((d_ctrl * k, d_ctrl * k), dtype=complex)
    for v in range(d_ctrl):
        out[v * k : (v + 1) * k, v * k : (v + 1) * k] = u if v == value else np.eye(k)
    return out


def _flip(d: int) -> np.ndarray:
    return _X2 if d == 2 else _XT


def gate_matrix(gate: Gate, dims: Sequence[int]) -> tuple[tuple[int, ...], np.ndarray]:
    """Local matrix of a bound gate and the wires it acts on (in matrix order).

    Extra controls come first, then ``gate.wires``.
    """
    if gate.is_classical:
        raise ValueError("bind classical gates before building matrices")
    w = gate.wires
    k = gate.kind
    if k is GateKind.X:
        if dims[w[0]] != 2:
            raise ValueError("X acts on qubits")
        u = _X2
    elif k is GateKind.Z:
        if dims[w[0]] != 2:
            raise ValueError("Z acts on qubits")
        u = _Z2
    elif k is GateKind.XTILDE:
        if dims[w[0]] != 3:
            raise ValueError("XTILDE acts on qutrits")
        u = _XT
    elif k is GateKind.SWAP:
        u = _swap_matrix(dims[w[0]])
    elif k is GateKind.CSWAP:
        u = _controlled(_swap_matrix(dims[w[1]]), dims[w[0]], gate.control_value)
    elif k is GateKind.CNOT:
        u = _controlled(_flip(dims[w[1]]), dims[w[0]], gate.control_value)
    elif k is GateKind.MCX:
        u = _flip(dims[w[-1]])
        for wire, v in reversed(list(zip(w[:-1], gate.pattern))):
            u = _controlled(u, dims[wire], v)
    else:
        raise ValueError(f"unsupported gate kind {k}")
    for wire, v in reversed(gate.controls):
        u = _controlled(u, dims[wire], v)
    return tuple(wc for wc, _ in gate.controls) + w, u


class DenseState:
    """Full statevector stored as a tensor with one axis per wire."""

    def __init__(self, dims: Sequence[int], psi: np.ndarray):
        self.dims = tuple(int(d) for d in dims)
        total = math.prod(self.dims)
        if total > STATE_GUARD:
            raise ValueError(f"dense state of dimension {total} exceeds the guard {STATE_GUARD}")
        self.psi = np.asarray(psi, dtype=complex).reshape(self.dims)

    @classmethod
    def from_sparse(cls, state: SparseState) -> "DenseState":
        total = math.prod(state.dims)
        if total > STATE_GUARD:
            raise ValueError(f"dense state of dimension {total} exceeds the guard {STATE_GUARD}")
        psi = np.zeros(state.dims, dtype=complex)
        for lab, a in zip(state.labels, state.amps):
            psi[tuple(lab)] += a
        return cls(state.dims, psi)

    def norm(self) -> float:
        return float(np.linalg.norm(self.psi))

    def amplitude(self, label: Sequence[int]) -> complex:
        return complex(self.psi[tuple(label)])

    def max_deviation(self, state: SparseState) -> float:
        """Largest amplitude difference to a sparse state over the full space."""
        other = DenseState.from_sparse(state)
        return float(np.max(np.abs(self.psi - other.psi)))

    def apply(self, gate: Gate) -> None:
        wires, u = gate_matrix(gate, self.dims)
        k = len(wires)
        moved = np.moveaxis(self.psi, wires, range(k))
        shape = moved.shape
        out = u @ moved.reshape(u.shape[0], -1)
        self.psi = np.moveaxis(out.reshape(shape), range(k), wires)


def dense_unitary_sim(
    circuit: Circuit,
    initial: DenseState,
    data: ClassicalData | Sequence[int],
) -> DenseState:
    """Noiseless run of ``circuit`` on a full statevector."""
    out = DenseState(initial.dims, initial.psi.copy())
    for _, layers in circuit.bound_blocks(data):
        for layer in layers:
            for g in layer:
                out.apply(g)
    return out


def dense_fidelity(state: DenseState, circuit: Circuit, ideal: SparseState) -> float:
    """``<ideal| Tr_anc |psi><psi| |ideal>`` for a full statevector."""
    out = list(circuit.output_wires)
    k = len(out)
    moved = np.moveaxis(state.psi, out, range(k))
    d_out = math.prod(moved.shape[:k])
    mat = moved.reshape(d_out, -1)
    vec = np.zeros(moved.shape[:k], dtype=complex)
    for lab, a in zip(ideal.labels, ideal.amps):
        vec[tuple(lab)] = a
    proj = vec.reshape(-1).conj() @ mat
    return float(np.sum(np.abs(proj) ** 2))


# ---------------------------------------------------------------------------
# density matrix on the reachable basis
# ---------------------------------------------------------------------------


class DenseDensityMatrix:
    """Density matrix over an explicit list of basis labels.

    Attributes:
        basis: ``(D, wires)`` array of labels, one per row/column of ``rho``.
        rho: ``D x D`` complex matrix.
    """

    def __init__(self, dims: Sequence[int], basis: np.ndarray, rho: np.ndarray, guard: int = DENSITY_GUARD):
        if basis.shape[0] > guard:
            raise ValueError(f"density matrix dimension {basis.shape[0]} exceeds the guard {guard}")
        self.dims = tuple(dims)
        self.basis = basis
        self.rho = rho
        self.guard = guard

    @classmethod
    def from_sparse(cls, state: SparseState, guard: int = DENSITY_GUARD) -> "DenseDensityMatrix":
        basis = state.labels.astype(np.int64)
        return cls(state.dims, basis, np.outer(state.amps, state.amps.conj()), guard)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.rho)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh((self.rho + self.rho.conj().T) / 2).min())

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))

    def _apply_local_maps(self, wires: Sequence[int], mats: Sequence[np.ndarray]) -> None:
        """``rho -> sum_m K_m rho K_m^dag`` for local monomial matrices ``K_m``."""
        wires = list(wires)
        local_dims = [self.dims[w] for w in wires]
        strides = np.array([math.prod(local_dims[i + 1 :]) for i in range(len(wires))], dtype=np.int64)
        col = self.basis[:, wires] @ strides
        images, coefs = [], []
        for mat in mats:
            nz = np.abs(mat) > 0
            if (nz.sum(axis=0) > 1).any():
                raise ValueError("local map is not monomial; the reachable-basis oracle needs monomial maps")
            row_of = np.argmax(nz, axis=0)
            val_of = mat[row_of, np.arange(mat.shape[1])]
            rows = row_of[col]
            new = self.basis.copy()
            for i, w in enumerate(wires):
                new[:, w] = (rows // strides[i]) % local_dims[i]
            images.append(new)
            coefs.append(val_of[col])
        allimg = np.concatenate(images)
        live = np.concatenate(coefs) != 0
        new_basis, inv = np.unique(allimg[live], axis=0, return_inverse=True)
        inv = inv.ravel()
        if new_basis.shape[0] > self.guard:
            raise ValueError(f"reachable dimension {new_basis.shape[0]} exceeds the guard {self.guard}")
        D = self.dim
        out = np.zeros((new_basis.shape[0], new_basis.shape[0]), dtype=complex)
        idx_all = np.full(live.shape[0], -1)
        idx_all[live] = inv
        for m in range(len(mats)):
            idx = idx_all[m * D : (m + 1) * D]
            c = coefs[m]
            keep = np.flatnonzero(c != 0)
            if keep.size == 0:
                continue
            block = (c[keep, None] * self.rho[np.ix_(keep, keep)]) * c[keep].conj()[None, :]
            tgt = idx[keep]
            if np.unique(tgt).size == tgt.size:
                out[np.ix_(tgt, tgt)] += block
            else:
                np.add.at(out, (tgt[:, None], tgt[None, :]), block)
        self.basis = new_basis
        self.rho = out

    def apply_gate(self, gate: Gate) -> None:
        wires, u = gate_matrix(gate, self.dims)
        self._apply_local_maps(wires, [u])

    def apply_channel(self, wire: int, channel: KrausChannel) -> None:
        if self.dims[wire] != channel.dim:
            raise ValueError("channel dimension does not match the wire")
        self._apply_local_maps([wire], channel.kraus)

    def fidelity(self, circuit: Circuit, ideal: SparseState) -> float:
        """``<ideal| Tr_anc rho |ideal>``."""
        out = list(circuit.output_wires)
        anc = [w for w in range(len(self.dims)) if w not in out]
        ideal_map = {tuple(int(v) for v in lab): a for lab, a in zip(ideal.labels, ideal.amps)}
        u = np.array([ideal_map.get(tuple(int(v) for v in row[out]), 0.0) for row in self.basis])
        _, group = np.unique(self.basis[:, anc], axis=0, return_inverse=True)
        group = group.ravel()
        same = group[:, None] == group[None, :]
        return float(np.real(np.sum(np.conj(u)[:, None] * self.rho * u[None, :] * same)))


def dense_channel_sim(
    circuit: Circuit,
    channel: KrausChannel,
    data: ClassicalData | Sequence[int],
    address_amps: Sequence[tuple[int, complex]],
    noisy_wires: Sequence[int] | None = None,
    init_label: Sequence[int] | None = None,
    guard: int = DENSITY_GUARD,
) -> tuple[DenseDensityMatrix, float]:
    """Exact noisy run: the channel hits each noisy wire before every noisy block.

    Returns the final density matrix and the exact query fidelity.
    """
    noisy = tuple(circuit.noisy_wires if noisy_wires is None else noisy_wires)
    init = circuit.initial_state(address_amps, init_label)
    dm = DenseDensityMatrix.from_sparse(init, guard)
    for noise, layers in circuit.bound_blocks(data):
        if noise:
            for w in noisy:
                dm.apply_channel(w, channel)
        for layer in layers:
            for g in layer:
                dm.apply_gate(g)
    ideal = ideal_output(address_amps, data, circuit)
    return dm, dm.fidelity(circuit, ideal)


__all__ = [
    "DenseState",
    "DenseDensityMatrix",
    "dense_unitary_sim",
    "dense_channel_sim",
    "dense_fidelity",
    "enumerate_configs_fidelity",
    "gate_matrix",
]
