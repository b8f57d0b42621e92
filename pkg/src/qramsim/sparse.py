"""Sparse computational-basis state of a register of qubits and qutrits.

A state is stored as a 2D ``uint8`` label array (one row per basis term, one
column per wire) and a matching complex amplitude vector. Rows are kept
unique. Qutrit values use the convention ``0 = |W>``, ``1 = |0>``, ``2 = |1>``;
qubit values are ``0 = |0>``, ``1 = |1>``.

Every gate in this package is a permutation of basis labels times a unit
phase, so a gate never changes the number of terms.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

DROP_TOL = 1e-15
W, Q0, Q1 = 0, 1, 2  # qutrit values


class GateKind(str, enum.Enum):
    X = "X"
    Z = "Z"
    XTILDE = "XTILDE"
    SWAP = "SWAP"
    CSWAP = "CSWAP"
    CNOT = "CNOT"
    MCX = "MCX"
    CLASSICAL_Z = "CLASSICAL_Z"
    CLASSICAL_XTILDE = "CLASSICAL_XTILDE"


_CLASSICAL = {GateKind.CLASSICAL_Z: GateKind.Z, GateKind.CLASSICAL_XTILDE: GateKind.XTILDE}


@dataclass(frozen=True)
class Gate:
    """A basis-permuting gate.

    Wire conventions per kind:

    * ``X``, ``Z``, ``XTILDE``, ``CLASSICAL_*``: ``(target,)``
    * ``SWAP``: ``(a, b)``
    * ``CSWAP``: ``(control, a, b)`` swapping when control equals ``control_value``
    * ``CNOT``: ``(control, target)``; flips the target (X on a qubit,
      XTILDE on a qutrit) when control equals ``control_value``
    * ``MCX``: ``(c_1, ..., c_k, target)`` flipping when controls match ``pattern``

    ``cell`` marks a gate that is only present when bit ``cell`` of the
    classical memory is 1 (see :meth:`bind`). ``controls`` holds extra
    ``(wire, value)`` quantum controls, used by the hybrid architecture.
    """

    kind: GateKind
    wires: tuple[int, ...]
    control_value: int | None = None
    pattern: tuple[int, ...] | None = None
    cell: int | None = None
    controls: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", GateKind(self.kind))
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        arity = {GateKind.SWAP: 2, GateKind.CSWAP: 3, GateKind.CNOT: 2}.get(self.kind, 1)
        if self.kind is GateKind.MCX:
            if self.pattern is None or len(self.pattern) != len(self.wires) - 1:
                raise ValueError("MCX needs a pattern with one value per control")
        elif len(self.wires) != arity:
            raise ValueError(f"{self.kind.value} takes {arity} wires, got {len(self.wires)}")
        if self.kind in (GateKind.CSWAP, GateKind.CNOT) and self.control_value is None:
            raise ValueError(f"{self.kind.value} needs a control_value")
        if self.kind in _CLASSICAL and self.cell is None:
            raise ValueError(f"{self.kind.value} needs a memory cell")
        all_wires = list(self.wires) + [w for w, _ in self.controls]
        if len(set(all_wires)) != len(all_wires):
            raise ValueError(f"repeated wire in {self}")

    @property
    def is_classical(self) -> bool:
        return self.cell is not None

    def bind(self, data: Sequence[int]) -> "Gate | None":
        """Resolve a classically controlled gate against memory ``data``.

        Returns the plain gate when ``data[cell] == 1`` and ``None`` when it
        is 0. Gates without a cell are returned unchanged.
        """
        if self.cell is None:
            return self
        if int(data[self.cell]) == 0:
            return None
        return replace(self, kind=_CLASSICAL.get(self.kind, self.kind), cell=None)

    def touched(self) -> tuple[int, ...]:
        return self.wires + tuple(w for w, _ in self.controls)


@dataclass
class WireLayout:
    """Wire dimensions plus named registers.

    ``registers`` maps a register name to the tuple of wire indices it owns.
    ``router_index`` maps ``(level, k)`` to the router's internal wire, and
    ``router_outputs`` maps it to its ``(left, right)`` output wires.
    """

    wire_dims: tuple[int, ...]
    registers: dict[str, tuple[int, ...]] = field(default_factory=dict)
    router_index: dict[tuple[int, int], int] = field(default_factory=dict)
    router_outputs: dict[tuple[int, int], tuple[int, int]] = field(default_factory=dict)
    depth: int = 0

    def __post_init__(self):
        self.wire_dims = tuple(int(d) for d in self.wire_dims)
        for d in self.wire_dims:
            if d not in (2, 3):
                raise ValueError(f"wire dimension must be 2 or 3, got {d}")

    @property
    def n_wires(self) -> int:
        return len(self.wire_dims)

    def reg(self, name: str) -> tuple[int, ...]:
        return self.registers.get(name, ())

    def add_register(self, name: str, dims: Sequence[int]) -> tuple[int, ...]:
        start = len(self.wire_dims)
        self.wire_dims = self.wire_dims + tuple(int(d) for d in dims)
        wires = tuple(range(start, start + len(dims)))
        self.registers[name] = wires
        return wires

    def address_value(self, bits: int | Sequence[int]) -> np.ndarray:
        """Label values encoding an address, most significant bit first."""
        addr = self.reg("address")
        if isinstance(bits, (int, np.integer)):
            n = len(addr)
            bits = [(int(bits) >> (n - 1 - j)) & 1 for j in range(n)]
        offs = np.array([self.wire_dims[w] - 2 for w in addr], dtype=np.uint8)
        return np.asarray(bits, dtype=np.uint8) + offs


def encode_bit(bit: int, dim: int) -> int:
    """Label value of logical bit ``bit`` on a wire of dimension ``dim``."""
    return int(bit) + (1 if dim == 3 else 0)


class SparseState:
    """Sparse superposition of computational-basis labels.

    Labels are stored wire-major (``wl[wire, term]``) because gates select
    whole wires; :attr:`labels` gives the ``(terms, wires)`` view.

    Attributes:
        wl: ``(wires, terms)`` uint8 array; its columns are unique.
        amps: complex amplitudes, one per term.
        dims: wire dimensions.
    """

    __slots__ = ("wl", "amps", "dims")

    def __init__(self, labels: np.ndarray, amps: np.ndarray, dims: Sequence[int]):
        labels = np.asarray(labels, dtype=np.uint8)
        self.dims = tuple(int(d) for d in dims)
        if labels.ndim != 2 or labels.shape[1] != len(self.dims):
            raise ValueError("labels must be (terms, wires)")
        self.wl = np.ascontiguousarray(labels.T)
        self.amps = np.asarray(amps, dtype=np.complex128)
        if self.wl.shape[1] != self.amps.shape[0]:
            raise ValueError("labels and amplitudes disagree in length")

    @classmethod
    def from_wires(cls, wl: np.ndarray, amps: np.ndarray, dims: Sequence[int]) -> "SparseState":
        """Wrap a wire-major label array without copying."""
        st = cls.__new__(cls)
        st.wl = wl
        st.amps = amps
        st.dims = tuple(dims)
        return st

    @property
    def labels(self) -> np.ndarray:
        return self.wl.T

    def __len__(self) -> int:
        return self.amps.shape[0]

    def copy(self) -> "SparseState":
        return SparseState.from_wires(self.wl.copy(), self.amps.copy(), self.dims)

    @property
    def n_wires(self) -> int:
        return len(self.dims)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def normalized(self) -> "SparseState":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize a zero state")
        return SparseState.from_wires(self.wl, self.amps / nrm, self.dims)

    def as_dict(self) -> dict[tuple[int, ...], complex]:
        return {tuple(int(v) for v in row): complex(a) for row, a in zip(self.labels, self.amps)}

    def merged(self) -> "SparseState":
        wl, amps = merge_duplicates(self.wl, self.amps)
        return SparseState.from_wires(wl, amps, self.dims)

    def pruned(self, tol: float = DROP_TOL) -> "SparseState":
        keep = np.abs(self.amps) >= tol
        return SparseState.from_wires(np.ascontiguousarray(self.wl[:, keep]), self.amps[keep], self.dims)


def _row_keys(rows: np.ndarray) -> np.ndarray:
    """One hashable void scalar per row of a 2D uint8 array."""
    rows = np.ascontiguousarray(rows)
    return rows.view(np.dtype((np.void, rows.dtype.itemsize * rows.shape[1]))).ravel()


def merge_duplicates(wl: np.ndarray, amps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum amplitudes of repeated labels (wire-major input and output)."""
    if wl.shape[1] < 2:
        return wl, amps
    if wl.shape[0] == 0:
        return wl[:, :1], np.array([amps.sum()])
    _, first, inv = np.unique(_row_keys(wl.T), return_index=True, return_inverse=True)
    if first.shape[0] == wl.shape[1]:
        return wl, amps
    out = np.zeros(first.shape[0], dtype=np.complex128)
    np.add.at(out, inv.ravel(), amps)
    return np.ascontiguousarray(wl[:, first]), out


def make_state(
    layout: WireLayout | Sequence[int],
    terms: Mapping[tuple[int, ...], complex] | Iterable[tuple[Sequence[int], complex]],
    normalize: bool = True,
) -> SparseState:
    """Build a state from ``{label: amplitude}`` (or ``(label, amp)`` pairs).

    Repeated labels are summed and exact zeros dropped. Labels are checked
    against the wire dimensions.
    """
    dims = layout.wire_dims if isinstance(layout, WireLayout) else tuple(layout)
    items = list(terms.items()) if isinstance(terms, Mapping) else list(terms)
    if not items:
        raise ValueError("a state needs at least one term")
    labels = np.array([list(lab) for lab, _ in items], dtype=np.int64).reshape(len(items), -1)
    if labels.shape[1] != len(dims):
        raise ValueError(f"labels have {labels.shape[1]} wires, layout has {len(dims)}")
    if (labels < 0).any() or (labels >= np.asarray(dims)).any():
        raise ValueError("label value out of range for its wire dimension")
    amps = np.array([a for _, a in items], dtype=np.complex128)
    wl, amps = merge_duplicates(np.ascontiguousarray(labels.T.astype(np.uint8)), amps)
    state = SparseState.from_wires(wl, amps, dims).pruned()
    if len(state) == 0:
        raise ValueError("state has zero norm")
    return state.normalized() if normalize else state


# ---------------------------------------------------------------------------
# Vectorized gate kernel
# ---------------------------------------------------------------------------

_FLIP = {2: np.array([1, 0], dtype=np.uint8), 3: np.array([0, 2, 1], dtype=np.uint8)}


def check_gate(gate: Gate, dims: Sequence[int]) -> None:
    """Raise ``ValueError`` if ``gate`` does not fit wires of ``dims``."""
    nw = len(dims)
    for w in gate.touched():
        if not 0 <= w < nw:
            raise ValueError(f"wire {w} out of range in {gate}")
    for w, v in gate.controls:
        if not 0 <= v < dims[w]:
            raise ValueError(f"control value {v} invalid for wire {w}")
    k = gate.kind
    if k in (GateKind.X, GateKind.Z) and dims[gate.wires[-1]] != 2:
        raise ValueError(f"{k.value} acts on qubits only")
    if k in (GateKind.XTILDE, GateKind.CLASSICAL_XTILDE) and dims[gate.wires[-1]] != 3:
        raise ValueError("XTILDE acts on qutrits only")
    if k is GateKind.CLASSICAL_Z and dims[gate.wires[-1]] != 2:
        raise ValueError("CLASSICAL_Z acts on qubits only")
    if k in (GateKind.SWAP, GateKind.CSWAP) and dims[gate.wires[-2]] != dims[gate.wires[-1]]:
        raise ValueError("SWAP between wires of different dimension")
    if k in (GateKind.CSWAP, GateKind.CNOT) and not 0 <= gate.control_value < dims[gate.wires[0]]:
        raise ValueError("control value out of range")
    if k is GateKind.MCX:
        for w, v in zip(gate.wires[:-1], gate.pattern):
            if not 0 <= v < dims[w]:
                raise ValueError("MCX pattern value out of range")


class _Op:
    """A group of same-shaped gates applied in one vectorized step."""

    __slots__ = ("kind", "a", "b", "cw", "cv", "ew", "ev", "table")

    def __init__(self, kind, a, b=None, cw=None, cv=None, ew=None, ev=None, table=None):
        self.kind = kind  # "swap" | "flip" | "phase"
        self.a = a
        self.b = b
        self.cw = cw  # (g, k) control wires or None
        self.cv = cv  # (g, k) control values
        self.ew = ew  # shared extra-control wires
        self.ev = ev
        self.table = table

    def mask(self, wl: np.ndarray) -> np.ndarray | None:
        m = None
        if self.cw is not None:
            if self.cw.shape[1] == 1:
                m = wl[self.cw[:, 0]] == self.cv[:, :1]
            else:
                m = np.all(wl[self.cw] == self.cv[:, :, None], axis=1)
        if self.ew is not None:
            e = np.all(wl[self.ew] == self.ev[:, None], axis=0)[None, :]
            m = e if m is None else (m & e)
        return m

    def apply(self, wl: np.ndarray, amps: np.ndarray) -> None:
        m = self.mask(wl)
        if self.kind == "swap":
            la = wl[self.a]
            lb = wl[self.b]
            if m is None:
                wl[self.a] = lb
                wl[self.b] = la
            else:
                d = (la ^ lb) * m
                wl[self.a] = la ^ d
                wl[self.b] = lb ^ d
        elif self.kind == "flip":
            cur = wl[self.a]
            new = self.table[cur]
            wl[self.a] = new if m is None else cur ^ ((cur ^ new) * m)
        else:
            hit = wl[self.a] == 1
            if m is not None:
                hit &= m
            odd = np.count_nonzero(hit, axis=0) & 1
            if odd.any():
                amps[odd.astype(bool)] *= -1.0


def compile_gates(gates: Sequence[Gate], dims: Sequence[int]) -> list[_Op]:
    """Compile one layer of commuting, wire-disjoint gates into kernel ops.

    Classical gates must already be bound. Gates are grouped by shape so that
    a whole layer usually becomes a handful of numpy operations.
    """
    groups: dict[tuple, list[Gate]] = {}
    order: list[tuple] = []
    for g in gates:
        if g.is_classical:
            raise ValueError("bind classical gates to data before compiling")
        check_gate(g, dims)
        k = g.kind
        if k in (GateKind.SWAP, GateKind.CSWAP):
            key = ("swap", k is GateKind.CSWAP, g.controls)
        elif k is GateKind.Z:
            key = ("phase", 0, g.controls)
        else:
            nctrl = {GateKind.X: 0, GateKind.XTILDE: 0, GateKind.CNOT: 1}.get(k, len(g.wires) - 1)
            key = ("flip", dims[g.wires[-1]], nctrl, g.controls)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(g)
    ops = []
    for key in order:
        gs = groups[key]
        extra = gs[0].controls
        ew = np.array([w for w, _ in extra], dtype=np.intp) if extra else None
        ev = np.array([v for _, v in extra], dtype=np.uint8) if extra else None
        if key[0] == "swap":
            if key[1]:
                cw = np.array([[g.wires[0]] for g in gs], dtype=np.intp)
                cv = np.array([[g.control_value] for g in gs], dtype=np.uint8)
                a = np.array([g.wires[1] for g in gs], dtype=np.intp)
                b = np.array([g.wires[2] for g in gs], dtype=np.intp)
            else:
                cw = cv = None
                a = np.array([g.wires[0] for g in gs], dtype=np.intp)
                b = np.array([g.wires[1] for g in gs], dtype=np.intp)
            ops.append(_Op("swap", a, b, cw, cv, ew, ev))
        elif key[0] == "phase":
            a = np.array([g.wires[0] for g in gs], dtype=np.intp)
            ops.append(_Op("phase", a, None, None, None, ew, ev))
        else:
            nctrl = key[2]
            a = np.array([g.wires[-1] for g in gs], dtype=np.intp)
            if nctrl:
                cw = np.array([g.wires[:-1] for g in gs], dtype=np.intp)
                vals = [
                    (g.control_value,) if g.kind is GateKind.CNOT else g.pattern for g in gs
                ]
                cv = np.array(vals, dtype=np.uint8)
            else:
                cw = cv = None
            ops.append(_Op("flip", a, None, cw, cv, ew, ev, _FLIP[key[1]]))
    return ops


def run_ops(ops: Sequence[_Op], wl: np.ndarray, amps: np.ndarray) -> None:
    """Apply compiled ops in place to wire-major labels ``wl``."""
    for op in ops:
        op.apply(wl, amps)


def apply_gate(state: SparseState, gate: Gate) -> SparseState:
    """Return ``gate`` applied to ``state``.

    Raises ``ValueError`` for an unbound classical gate, an out-of-range wire
    or a gate that does not fit its wires' dimensions.
    """
    wl = state.wl.copy()
    amps = state.amps.copy()
    run_ops(compile_gates([gate], state.dims), wl, amps)
    return SparseState.from_wires(wl, amps, state.dims)


def apply_gates(state: SparseState, gates: Iterable[Gate]) -> SparseState:
    wl = state.wl.copy()
    amps = state.amps.copy()
    for g in gates:
        run_ops(compile_gates([g], state.dims), wl, amps)
    return SparseState.from_wires(wl, amps, state.dims)


def inner_product(a: SparseState, b: SparseState) -> complex:
    """``<a|b>`` over the shared label space."""
    if a.dims != b.dims:
        raise ValueError("states live on different registers")
    if len(a) == 0 or len(b) == 0:
        return 0.0j
    ka, kb = _row_keys(a.labels), _row_keys(b.labels)
    _, ia, ib = np.intersect1d(ka, kb, assume_unique=True, return_indices=True)
    return complex(np.sum(np.conj(a.amps[ia]) * b.amps[ib]))


def reduced_density_matrix(state: SparseState, wires: int | Sequence[int]) -> np.ndarray:
    """Reduced density matrix on one wire or a list of wires.

    Computed by grouping terms on all other wires; a multi-wire matrix is
    indexed row-major over the listed wires' values.
    """
    wires = [int(wires)] if isinstance(wires, (int, np.integer)) else [int(w) for w in wires]
    for w in wires:
        if not 0 <= w < state.n_wires:
            raise ValueError(f"wire {w} out of range")
    dims = [state.dims[w] for w in wires]
    d = int(np.prod(dims)) if dims else 1
    if d > 4096:
        raise ValueError("subsystem too large for a dense reduced density matrix")
    rest = [w for w in range(state.n_wires) if w not in set(wires)]
    sub = np.zeros(len(state), dtype=np.int64)
    for w, dw in zip(wires, dims):
        sub = sub * dw + state.wl[w]
    if rest:
        _, env = np.unique(_row_keys(state.wl[rest].T), return_inverse=True)
        env = env.ravel()
    else:
        env = np.zeros(len(state), dtype=np.int64)
    # rho[i, j] = sum_e psi[i, e] conj(psi[j, e]) with psi sparse in e
    n_env = int(env.max()) + 1 if len(state) else 0
    psi = np.zeros((d, n_env), dtype=np.complex128)
    psi[sub, env] = state.amps
    return psi @ psi.conj().T


def entanglement_entropy(rho: np.ndarray, atol: float = 1e-10) -> float:
    """Von Neumann entropy in bits of a density matrix (``0 log 0 = 0``)."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if not np.allclose(rho, rho.conj().T, atol=atol):
        raise ValueError("density matrix is not Hermitian")
    ev = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    ev = ev[ev > 1e-14]
    return float(max(0.0, -np.sum(ev * np.log2(ev))))


def wire_entropy(state: SparseState, wires: int | Sequence[int]) -> float:
    """Entanglement entropy in bits of the reduced state on ``wires``."""
    return entanglement_entropy(reduced_density_matrix(state, wires))
