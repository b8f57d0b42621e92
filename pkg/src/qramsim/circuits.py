"""Timed, noise-annotated QRAM circuits.

Every architecture is a list of :class:`Block` objects. A block is a short
sequence of gate layers and is the unit at which noise acts: when
``noise_round`` is set, the error channel hits every noisy wire once right
before the block's layers run (so ``T`` noisy blocks give ``T`` noise rounds).

Tree layouts, in wire order::

    address[n] | input_rail | bus | router_internal[N-1] | router_output[2(N-1)]

Router ``(level, k)`` owns internal wire ``router_index[(level, k)]``. Its
left/right output modes are the incident modes of routers
``(level+1, 2k)`` and ``(level+1, 2k+1)``; at the bottom level they are the
memory locations ``2k`` and ``2k+1``. Address bit 0 is the most significant
and steers level 0.
"""

from __future__ import annotations

import enum
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .sparse import Gate, GateKind, SparseState, WireLayout, encode_bit, make_state

MAX_TREE_DEPTH = 12
MAX_QROM_DEPTH = 8


class Variant(str, enum.Enum):
    FANOUT = "FANOUT"
    BB3 = "BB3"
    BB2 = "BB2"
    BB2_MODIFIED = "BB2_MODIFIED"
    BB3_MODIFIED = "BB3_MODIFIED"
    QROM = "QROM"
    HYBRID = "HYBRID"


class CopyVariant(str, enum.Enum):
    PLUS_Z = "PLUS_Z"
    ZERO_XTILDE = "ZERO_XTILDE"
    DOUBLE_QUERY = "DOUBLE_QUERY"


@dataclass(frozen=True)
class Block:
    layers: tuple[tuple[Gate, ...], ...]
    noise_round: bool = True

    def inverse(self) -> "Block":
        # every gate kind used here is an involution
        return Block(tuple(reversed(self.layers)), self.noise_round)

    def gates(self):
        for layer in self.layers:
            yield from layer


@dataclass
class ClassicalData:
    """Memory contents ``x_0 .. x_{N-1}``."""

    bits: tuple[int, ...]
    seed: int | None = None

    def __post_init__(self):
        self.bits = tuple(int(b) for b in self.bits)
        n = len(self.bits)
        if n == 0 or n & (n - 1):
            raise ValueError("memory size must be a power of two")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError("memory bits must be 0 or 1")

    @classmethod
    def random(cls, n: int, seed: int) -> "ClassicalData":
        rng = np.random.default_rng(seed)
        return cls(tuple(int(b) for b in rng.integers(0, 2, size=2**n)), seed)

    @classmethod
    def from_string(cls, s: str) -> "ClassicalData":
        return cls(tuple(int(c) for c in s))

    def __len__(self):
        return len(self.bits)

    def __getitem__(self, i):
        return self.bits[i]


@dataclass
class Circuit:
    layout: WireLayout
    blocks: list[Block]
    noisy_wires: tuple[int, ...]
    variant: Variant
    copy_variant: CopyVariant
    n: int
    M: int = 1
    subkind: Variant | None = None
    levels: int = 3
    # wires that start in |+> rather than a basis label
    plus_wires: tuple[int, ...] = ()
    base_label: tuple[int, ...] = field(default=())
    # wires treated as the query output alongside the address
    bus_encoding: CopyVariant = CopyVariant.ZERO_XTILDE

    @property
    def T(self) -> int:
        return sum(1 for b in self.blocks if b.noise_round)

    @property
    def N(self) -> int:
        return 2**self.n

    @property
    def address_wires(self) -> tuple[int, ...]:
        return self.layout.reg("address")

    @property
    def bus_wire(self) -> int:
        return self.layout.reg("bus")[0]

    @property
    def output_wires(self) -> tuple[int, ...]:
        return self.address_wires + (self.bus_wire,)

    @property
    def is_tree(self) -> bool:
        return self.variant not in (Variant.QROM, Variant.HYBRID)

    def label(self) -> str:
        if self.variant is Variant.HYBRID:
            return f"HYBRID_{self.subkind.value}"
        return self.variant.value

    def tree_wires(self) -> tuple[int, ...]:
        """Input rail, router and output-mode wires."""
        reg = self.layout.reg
        return reg("input_rail") + reg("router_internal") + reg("router_output")

    def random_tree_label(self, rng: np.random.Generator) -> tuple[int, ...]:
        """Base label with every tree wire set to a random basis value."""
        lab = list(self.base_label)
        for w in self.tree_wires():
            lab[w] = int(rng.integers(0, self.layout.wire_dims[w]))
        return tuple(lab)

    def initial_state(
        self,
        address_amps: Sequence[tuple[int, complex]],
        init_label: Sequence[int] | None = None,
    ) -> SparseState:
        """Address superposition on top of the resting label of every other wire.

        ``init_label`` overrides the resting label; its address entries are
        ignored. Wires in ``plus_wires`` are put in ``|+>``.
        """
        base = np.array(self.base_label if init_label is None else init_label, dtype=np.int64)
        if base.shape[0] != self.layout.n_wires:
            raise ValueError("initial label has the wrong length")
        addr = list(self.address_wires)
        terms = []
        plus = list(self.plus_wires)
        for i, amp in address_amps:
            if not 0 <= int(i) < self.N:
                raise ValueError(f"address {i} out of range")
            lab = base.copy()
            lab[addr] = self.layout.address_value(int(i))
            for bits in range(2 ** len(plus)):
                lab2 = lab.copy()
                for q, w in enumerate(plus):
                    lab2[w] = (bits >> q) & 1
                terms.append((tuple(lab2), complex(amp) / math.sqrt(2 ** len(plus))))
        return make_state(self.layout, terms)

    def bound_blocks(self, data: ClassicalData | Sequence[int]) -> list[tuple[bool, list[list[Gate]]]]:
        """Blocks with classically controlled gates resolved against ``data``."""
        bits = data.bits if isinstance(data, ClassicalData) else tuple(data)
        if len(bits) != self.N:
            raise ValueError(f"data has {len(bits)} cells, circuit addresses {self.N}")
        out = []
        for b in self.blocks:
            layers = []
            for layer in b.layers:
                gs = [g2 for g in layer if (g2 := g.bind(bits)) is not None]
                if gs:
                    layers.append(gs)
            out.append((b.noise_round, layers))
        return out

    def gate_counts(self) -> dict[str, int]:
        c = Counter(g.kind.value for b in self.blocks for g in b.gates())
        return dict(sorted(c.items()))

    def summary(self) -> dict:
        return {
            "variant": self.label(),
            "n": self.n,
            "M": self.M,
            "T": self.T,
            "copy_variant": self.copy_variant.value,
            "wires": self.layout.n_wires,
            "registers": {k: len(v) for k, v in self.layout.registers.items()},
            "noisy_wires": len(self.noisy_wires),
            "blocks": len(self.blocks),
            "gates": self.gate_counts(),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def check_layers(blocks: Sequence[Block]) -> None:
    """Raise ``ValueError`` if two gates of a layer share a wire.

    Extra (hybrid) controls are read-only and may be shared, as long as no
    gate of the same layer writes to them.
    """
    for bi, b in enumerate(blocks):
        for layer in b.layers:
            seen: set[int] = set()
            shared: set[int] = set()
            for g in layer:
                ws = set(g.wires)
                if seen & ws:
                    raise ValueError(f"block {bi}: overlapping gates in one layer")
                seen |= ws
                shared |= {w for w, _ in g.controls}
            if seen & shared:
                raise ValueError(f"block {bi}: a gate writes to a shared control wire")


# ---------------------------------------------------------------------------
# layouts
# ---------------------------------------------------------------------------


def tree_layout(n_addr: int, depth: int, dim: int, extra: Sequence[str] = ()) -> WireLayout:
    """Tree layout with ``n_addr`` address wires and a tree of ``depth`` levels."""
    lay = WireLayout(())
    lay.add_register("address", [dim] * n_addr)
    if depth > 0:
        lay.add_register("input_rail", [dim])
    lay.add_register("bus", [dim])
    n_routers = 2**depth - 1
    internal = lay.add_register("router_internal", [dim] * n_routers) if depth else ()
    outputs = lay.add_register("router_output", [dim] * 2 * n_routers) if depth else ()
    idx = 0
    for level in range(depth):
        for k in range(2**level):
            lay.router_index[(level, k)] = internal[idx]
            lay.router_outputs[(level, k)] = (outputs[2 * idx], outputs[2 * idx + 1])
            idx += 1
    for name in extra:
        lay.add_register(name, [dim])
    lay.depth = depth
    return lay


def incident_wire(lay: WireLayout, level: int, k: int) -> int:
    if level == 0:
        return lay.reg("input_rail")[0]
    return lay.router_outputs[(level - 1, k // 2)][k % 2]


def bottom_wire(lay: WireLayout, cell: int) -> int:
    """Output mode holding memory location ``cell`` at the bottom of the tree."""
    return lay.router_outputs[(lay.depth - 1, cell // 2)][cell % 2]


def _check_depth(n: int, lo: int, hi: int) -> None:
    if not isinstance(n, (int, np.integer)) or not lo <= n <= hi:
        raise ValueError(f"tree depth must be an integer in [{lo}, {hi}], got {n!r}")


# ---------------------------------------------------------------------------
# tree schedules
# ---------------------------------------------------------------------------


class _TreeBuilder:
    """Emits tree blocks for one (sub-)QRAM sharing a layout.

    ``controls`` are attached to every gate (hybrid iterations) and
    ``cell_offset`` shifts the memory cells read by the copy gates.
    """

    def __init__(self, lay, addr, dim, modified=False, controls=(), cell_offset=0):
        self.lay = lay
        self.addr = tuple(addr)
        self.depth = len(self.addr)
        self.dim = dim
        self.modified = modified
        self.controls = tuple(controls)
        self.cell_offset = cell_offset
        self.bus = lay.reg("bus")[0]
        self.one = encode_bit(1, dim)
        self.zero = encode_bit(0, dim)

    def g(self, kind, wires, **kw) -> Gate:
        return Gate(kind, tuple(wires), controls=self.controls, **kw)

    def route(self, level: int) -> tuple[list[Gate], list[Gate]]:
        """Routing op at every router of ``level``, as two layers."""
        first, second = [], []
        for k in range(2**level):
            r = self.lay.router_index[(level, k)]
            inc = incident_wire(self.lay, level, k)
            left, right = self.lay.router_outputs[(level, k)]
            first.append(self.g(GateKind.CSWAP, (r, inc, right), control_value=self.one))
            if self.modified:
                second.append(self.g(GateKind.SWAP, (inc, left)))
            else:
                second.append(self.g(GateKind.CSWAP, (r, inc, left), control_value=self.zero))
        return first, second

    def absorb(self, level: int) -> list[Gate]:
        return [
            self.g(GateKind.SWAP, (incident_wire(self.lay, level, k), self.lay.router_index[(level, k)]))
            for k in range(2**level)
        ]

    def inject(self, wire: int) -> Gate:
        return self.g(GateKind.SWAP, (wire, self.lay.reg("input_rail")[0]))

    def copy_block(self, kind: GateKind) -> Block:
        if self.depth == 0:
            wires = [self.bus]
        else:
            wires = [bottom_wire(self.lay, i) for i in range(2**self.depth)]
        layer = tuple(self.g(kind, (w,), cell=self.cell_offset + i) for i, w in enumerate(wires))
        return Block((layer,))

    def bb_route_in(self) -> list[Block]:
        """Pipelined bucket-brigade route-in.

        Phase ``p`` is the even-level (``p`` even) or odd-level (``p`` odd)
        half of block ``p // 2``. Address ``j`` enters the input rail at the
        start of block ``j``, crosses level ``l < j`` at phase ``2j + l`` and
        is absorbed by level ``j`` at phase ``3j``; the bus follows as
        ``j = n`` and is never absorbed.
        """
        n = self.depth
        blocks = []
        n_blocks = -(-3 * n // 2)
        for b in range(n_blocks):
            layers: list[tuple[Gate, ...]] = []
            if b < n:
                layers.append((self.inject(self.addr[b]),))
            elif b == n:
                layers.append((self.inject(self.bus),))
            for p in (2 * b, 2 * b + 1):
                first: list[Gate] = []
                second: list[Gate] = []
                for level in range(n):
                    if p == 3 * level:
                        first += self.absorb(level)
                    if (p - level) % 2 == 0 and level < (p - level) // 2 <= n:
                        f, s = self.route(level)
                        first += f
                        second += s
                layers += [tuple(x) for x in (first, second) if x]
            blocks.append(Block(tuple(layers)))
        return blocks

    def fanout_route_in(self) -> list[Block]:
        """Address broadcast (one block per level) then the bus routed down.

        Bus routing is pipelined like the bucket brigade: level ``l`` is
        crossed in half ``l % 2`` of block ``l // 2``.
        """
        n = self.depth
        blocks = []
        for level, a in enumerate(self.addr):
            layers = tuple(
                (self.g(GateKind.CNOT, (a, self.lay.router_index[(level, k)]), control_value=self.one),)
                for k in range(2**level)
            )
            blocks.append(Block(layers))
        for b in range(-(-n // 2)):
            layers = [(self.inject(self.bus),)] if b == 0 else []
            for level in (2 * b, 2 * b + 1):
                if level < n:
                    f, s = self.route(level)
                    layers += [tuple(f), tuple(s)]
            blocks.append(Block(tuple(layers)))
        return blocks

    def query(self, kind: str, copy: GateKind) -> list[Block]:
        if self.depth == 0:
            return [self.copy_block(copy)]
        route_in = self.bb_route_in() if kind == "bb" else self.fanout_route_in()
        return route_in + [self.copy_block(copy)] + [b.inverse() for b in reversed(route_in)]


def _tree_circuit(n, dim, variant, copy_variant, modified, kind, extra=()):
    lay = tree_layout(n, n, dim, extra)
    builder = _TreeBuilder(lay, lay.reg("address"), dim, modified)
    copy = GateKind.CLASSICAL_Z if copy_variant is CopyVariant.PLUS_Z else GateKind.CLASSICAL_XTILDE
    blocks = builder.query(kind, copy)
    base = [0] * lay.n_wires
    plus: tuple[int, ...] = ()
    if copy_variant is CopyVariant.PLUS_Z:
        plus = (builder.bus,)
    else:
        base[builder.bus] = encode_bit(0, dim)
    return Circuit(
        layout=lay,
        blocks=blocks,
        noisy_wires=lay.reg("router_internal"),
        variant=variant,
        copy_variant=copy_variant,
        n=n,
        levels=dim,
        plus_wires=plus,
        base_label=tuple(base),
        bus_encoding=copy_variant,
    )


def build_bb_circuit(
    n: int,
    levels: str | int = "three",
    modified_routing: bool = False,
    copy_variant: CopyVariant | str | None = None,
) -> Circuit:
    """Bucket-brigade QRAM of depth ``n``.

    Args:
        n: tree depth, ``N = 2**n`` memory cells.
        levels: ``"three"`` (qutrit routers with a wait state) or ``"two"``.
        modified_routing: replace the ``|0>``-controlled SWAP of every
            routing op with an unconditional SWAP.
        copy_variant: ``PLUS_Z`` (two-level) or ``ZERO_XTILDE`` (three-level);
            defaults to the one matching ``levels``.

    The schedule has ``ceil(3n/2)`` route-in blocks, one copy block and the
    mirrored route-out, so ``T = 2*ceil(3n/2) + 1``.
    """
    _check_depth(n, 1, MAX_TREE_DEPTH)
    dim = _levels(levels)
    default = CopyVariant.ZERO_XTILDE if dim == 3 else CopyVariant.PLUS_Z
    cv = CopyVariant(copy_variant) if copy_variant is not None else default
    if cv is not default:
        raise ValueError(f"{cv.value} copy does not fit a {dim}-level tree")
    if dim == 3:
        variant = Variant.BB3_MODIFIED if modified_routing else Variant.BB3
    else:
        variant = Variant.BB2_MODIFIED if modified_routing else Variant.BB2
    circ = _tree_circuit(n, dim, variant, cv, modified_routing, "bb")
    check_layers(circ.blocks)
    return circ


def build_fanout_circuit(n: int) -> Circuit:
    """Fanout QRAM: every address qubit flips all routers of its level."""
    _check_depth(n, 1, MAX_TREE_DEPTH)
    circ = _tree_circuit(n, 2, Variant.FANOUT, CopyVariant.PLUS_Z, False, "fanout")
    check_layers(circ.blocks)
    return circ


def qrom_rounds_per_pattern(n: int) -> int:
    return math.ceil(math.log2(n)) + 1 if n > 1 else 1


def build_qrom_circuit(n: int) -> Circuit:
    """QROM: one multi-controlled X per address pattern, present iff ``x_j = 1``.

    Each pattern occupies ``ceil(log2 n) + 1`` noise rounds, the last of
    which holds the gate.
    """
    _check_depth(n, 1, MAX_QROM_DEPTH)
    lay = WireLayout(())
    addr = lay.add_register("address", [2] * n)
    bus = lay.add_register("bus", [2])[0]
    r = qrom_rounds_per_pattern(n)
    blocks = []
    for j in range(2**n):
        pattern = tuple((j >> (n - 1 - q)) & 1 for q in range(n))
        blocks += [Block(()) for _ in range(r - 1)]
        blocks.append(Block(((Gate(GateKind.MCX, addr + (bus,), pattern=pattern, cell=j),),)))
    return Circuit(
        layout=lay,
        blocks=blocks,
        noisy_wires=addr + (bus,),
        variant=Variant.QROM,
        copy_variant=CopyVariant.ZERO_XTILDE,
        n=n,
        levels=2,
        base_label=(0,) * lay.n_wires,
        bus_encoding=CopyVariant.ZERO_XTILDE,
    )


def build_hybrid_circuit(n: int, m: int, subkind: Variant | str = Variant.BB3) -> Circuit:
    """Hybrid of QROM and QRAM: ``M = 2**m`` queries to a size ``N/M`` QRAM.

    Iteration ``j`` runs the sub-QRAM on the low ``n - m`` address wires,
    with every gate controlled on the high ``m`` address wires spelling
    ``j``, and reads data block ``x[j*N/M : (j+1)*N/M]``.
    """
    _check_depth(n, 1, MAX_TREE_DEPTH)
    subkind = Variant(subkind)
    if subkind not in (Variant.FANOUT, Variant.BB2, Variant.BB3):
        raise ValueError(f"unsupported hybrid subkind {subkind.value}")
    if not isinstance(m, (int, np.integer)) or not 0 <= m <= n:
        raise ValueError(f"block exponent m must be in [0, {n}], got {m!r}")
    dim = 3 if subkind is Variant.BB3 else 2
    depth = n - m
    lay = tree_layout(n, depth, dim)
    addr = lay.reg("address")
    copy = GateKind.CLASSICAL_XTILDE if dim == 3 else GateKind.CLASSICAL_Z
    kind = "fanout" if subkind is Variant.FANOUT else "bb"
    blocks: list[Block] = []
    for j in range(2**m):
        controls = tuple((addr[q], encode_bit((j >> (m - 1 - q)) & 1, dim)) for q in range(m))
        sub = _TreeBuilder(lay, addr[m:], dim, controls=controls, cell_offset=j * 2**depth)
        blocks += sub.query(kind, copy)
    check_layers(blocks)
    bus = lay.reg("bus")[0]
    base = [0] * lay.n_wires
    plus: tuple[int, ...] = ()
    if dim == 3:
        base[bus] = encode_bit(0, 3)
        cv = CopyVariant.ZERO_XTILDE
    else:
        plus = (bus,)
        cv = CopyVariant.PLUS_Z
    noisy = lay.reg("router_internal") + addr + (bus,)
    return Circuit(
        layout=lay,
        blocks=blocks,
        noisy_wires=tuple(sorted(noisy)),
        variant=Variant.HYBRID,
        copy_variant=cv,
        n=n,
        M=2**m,
        subkind=subkind,
        levels=dim,
        plus_wires=plus,
        base_label=tuple(base),
        bus_encoding=cv,
    )


def build_double_query_circuit(n: int, levels: str | int = "three") -> Circuit:
    """Query, copy the bus into an ancilla, query again, swap ancilla into bus.

    The single query ``U`` squares to the identity, so the tree wires end in
    whatever basis label they started in and the ancilla carries the
    result. Two-level trees copy by phase kickback with both the bus and
    the ancilla in ``|+>``.
    """
    _check_depth(n, 1, MAX_TREE_DEPTH)
    dim = _levels(levels)
    cv = CopyVariant.ZERO_XTILDE if dim == 3 else CopyVariant.PLUS_Z
    lay = tree_layout(n, n, dim, extra=("copy_ancilla",))
    builder = _TreeBuilder(lay, lay.reg("address"), dim)
    copy = GateKind.CLASSICAL_XTILDE if dim == 3 else GateKind.CLASSICAL_Z
    single = builder.query("bb", copy)
    bus = builder.bus
    anc = lay.reg("copy_ancilla")[0]
    base = [0] * lay.n_wires
    if dim == 3:
        base[bus] = base[anc] = encode_bit(0, 3)
        middle = Gate(GateKind.CNOT, (bus, anc), control_value=encode_bit(1, 3))
        plus: tuple[int, ...] = ()
    else:
        middle = Gate(GateKind.CNOT, (anc, bus), control_value=1)
        plus = (bus, anc)
    blocks = single + [Block(((middle,),), noise_round=False)] + single
    blocks.append(Block(((Gate(GateKind.SWAP, (anc, bus)),),), noise_round=False))
    check_layers(blocks)
    return Circuit(
        layout=lay,
        blocks=blocks,
        noisy_wires=lay.reg("router_internal"),
        variant=Variant.BB3 if dim == 3 else Variant.BB2,
        copy_variant=CopyVariant.DOUBLE_QUERY,
        n=n,
        levels=dim,
        plus_wires=plus,
        base_label=tuple(base),
        bus_encoding=cv,
    )


def _levels(levels) -> int:
    table = {"three": 3, "two": 2, 3: 3, 2: 2, "3": 3, "2": 2}
    if levels not in table:
        raise ValueError(f"levels must be 'two' or 'three', got {levels!r}")
    return table[levels]


def build_circuit(variant: str, n: int, m: int = 0) -> Circuit:
    """Build any variant by name (``HYBRID_<SUB>`` for hybrids)."""
    v = variant.upper()
    if v.startswith("HYBRID"):
        sub = v.split("_", 1)[1] if "_" in v else "BB3"
        return build_hybrid_circuit(n, m, sub)
    builders = {
        "BB3": lambda: build_bb_circuit(n, "three"),
        "BB2": lambda: build_bb_circuit(n, "two"),
        "BB3_MODIFIED": lambda: build_bb_circuit(n, "three", modified_routing=True),
        "BB2_MODIFIED": lambda: build_bb_circuit(n, "two", modified_routing=True),
        "FANOUT": lambda: build_fanout_circuit(n),
        "QROM": lambda: build_qrom_circuit(n),
        "DOUBLE_QUERY_BB3": lambda: build_double_query_circuit(n, "three"),
        "DOUBLE_QUERY_BB2": lambda: build_double_query_circuit(n, "two"),
    }
    if v not in builders:
        raise ValueError(f"unknown variant {variant!r}")
    return builders[v]()


def ideal_output(
    address_amps: Sequence[tuple[int, complex]],
    data: ClassicalData | Sequence[int],
    circuit: Circuit,
) -> SparseState:
    """Ideal query result on the address and bus wires.

    ``sum_i a_i |i>|x_i>`` when the bus is read in the computational basis,
    and ``sum_i a_i |i> (|0> + (-1)^{x_i} |1>)/sqrt(2)`` for the phase copy.
    """
    bits = data.bits if isinstance(data, ClassicalData) else tuple(int(b) for b in data)
    total = sum(abs(complex(a)) ** 2 for _, a in address_amps)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"address amplitudes are not normalized (sum |a|^2 = {total})")
    lay = circuit.layout
    dims = [lay.wire_dims[w] for w in circuit.output_wires]
    bus_dim = dims[-1]
    terms = []
    for i, a in address_amps:
        addr = tuple(int(v) for v in lay.address_value(int(i)))
        x = bits[int(i)]
        if circuit.bus_encoding is CopyVariant.PLUS_Z:
            s = complex(a) / math.sqrt(2)
            terms.append((addr + (0,), s))
            terms.append((addr + (1,), s * (-1) ** x))
        else:
            terms.append((addr + (encode_bit(x, bus_dim),), complex(a)))
    return make_state(dims, terms, normalize=False)
