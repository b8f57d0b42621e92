"""Query fidelity, analytic infidelity bounds, scaling fits and entropy profiles."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .circuits import Circuit, ClassicalData, build_circuit
from .sparse import SparseState, _row_keys, compile_gates, reduced_density_matrix, run_ops
from .sparse import entanglement_entropy


class FidelityEvaluator:
    """Computes ``F(c)`` of final states against one ideal output.

    The final state is split by the label of every wire outside
    ``output_wires``; each group contributes ``|<ideal|group>|^2``, which
    equals ``<ideal| Tr_anc |psi><psi| |ideal>``.
    """

    def __init__(self, ideal: SparseState, output_wires: Sequence[int], n_wires: int):
        self.output_wires = np.asarray(output_wires, dtype=np.intp)
        if ideal.n_wires != len(self.output_wires):
            raise ValueError("ideal state does not match the output wires")
        self.anc_wires = np.array(
            [w for w in range(n_wires) if w not in set(self.output_wires.tolist())], dtype=np.intp
        )
        self.radix = np.array([3 ** k for k in range(len(self.output_wires))], dtype=np.int64)
        codes = self.radix @ ideal.wl
        order = np.argsort(codes)
        self.codes = codes[order]
        self.ideal_amps = ideal.amps[order]

    def __call__(self, wl: np.ndarray, amps: np.ndarray) -> float:
        """Fidelity of the normalized state with wire-major labels ``wl``."""
        codes = self.radix @ wl[self.output_wires]
        pos = np.searchsorted(self.codes, codes)
        pos = np.minimum(pos, len(self.codes) - 1)
        hit = self.codes[pos] == codes
        overlap = np.where(hit, np.conj(self.ideal_amps[pos]) * amps, 0.0)
        if len(self.anc_wires) == 0 or wl.shape[1] == 1:
            return float(abs(overlap.sum()) ** 2)
        sel = np.flatnonzero(hit)
        if sel.size == 0:
            return 0.0
        anc = wl[np.ix_(self.anc_wires, sel)]
        anc = anc[anc.min(axis=1) != anc.max(axis=1)]  # constant wires do not split groups
        if anc.shape[0] == 0:
            return float(abs(overlap.sum()) ** 2)
        _, inv = np.unique(_row_keys(anc.T), return_inverse=True)
        inv = inv.ravel()
        ov = overlap[sel]
        re = np.bincount(inv, weights=ov.real)
        im = np.bincount(inv, weights=ov.imag)
        return float(np.sum(re * re + im * im))


def config_fidelity(final: SparseState, ideal: SparseState, output_wires: Sequence[int]) -> float:
    """``F(c)`` of a (normalized) final state.

    Args:
        final: state over the full circuit layout.
        ideal: ideal query output over ``output_wires`` (address then bus).
        output_wires: the wires ``ideal`` lives on; all others are traced out.
    """
    return FidelityEvaluator(ideal, output_wires, final.n_wires)(final.wl, final.amps)


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


@dataclass
class BoundReport:
    epsilon: float
    epsilon_w: float
    T: int
    n: int
    M: int
    mixed_unitary: float
    two_level: float
    general_coefficient: float
    general: float
    logical: float | None
    leading_orders: dict[str, float] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def bounds(
    epsilon: float,
    epsilon_w: float,
    T: int,
    n: int,
    M: int = 1,
    epsilon_logical: float | None = None,
    T_logical: int | None = None,
) -> BoundReport:
    """Infidelity upper bounds and leading-order architecture scalings.

    * mixed-unitary channels: ``4 eps T n``
    * two-level routers: ``4 eps T (n + n^2)``
    * general channels (leading order): ``A' eps T n`` with ``A' = 6 - 2 eps_W/eps``
    * logical qubits: ``4 eps_L T_L n``

    ``leading_orders`` holds the architecture scalings up to constants with
    ``N = 2**n`` (fanout ``eps N n``, bucket brigade ``eps n^2``, two-level
    bucket brigade ``eps n^3``, QROM ``eps N n^2``, hybrids in between).
    Validity problems are reported in ``flags``; nothing is raised.
    """
    eps = float(epsilon)
    flags = []
    if not 0.0 < eps < 1.0:
        flags.append("epsilon outside (0, 1)")
    if eps * T * n > 0.25:
        flags.append("eps*T*log N > 1/4: outside the bound's regime")
    if epsilon_w > 3 * eps:
        flags.append("eps_W > 3 eps: general coefficient negative")
    a_prime = 6.0 - 2.0 * epsilon_w / eps if eps > 0 else float("nan")
    N = 2.0**n
    lead = {
        "FANOUT": eps * N * n,
        "BB3": eps * n**2,
        "BB2": eps * n**3,
        "QROM": eps * N * n**2,
        "HYBRID_FANOUT": eps * (N * n + M * n**2),
        "HYBRID_BB3": eps * M * n**2,
    }
    logical = None
    if epsilon_logical is not None:
        logical = 4.0 * epsilon_logical * (T_logical if T_logical is not None else T) * n
    return BoundReport(
        epsilon=eps,
        epsilon_w=float(epsilon_w),
        T=int(T),
        n=int(n),
        M=int(M),
        mixed_unitary=4.0 * eps * T * n,
        two_level=4.0 * eps * T * (n + n * n),
        general_coefficient=a_prime,
        general=max(0.0, a_prime * eps * T * n),
        logical=logical,
        leading_orders=lead,
        flags=flags,
    )


# ---------------------------------------------------------------------------
# log-log fit
# ---------------------------------------------------------------------------


@dataclass
class ScalingFit:
    points: list[tuple[float, float]]
    slope: float
    intercept: float
    residual_rms: float
    min_logN: float

    def predict(self, logN: float) -> float:
        """Predicted infidelity at ``log N``."""
        return 10 ** (self.intercept + self.slope * math.log10(logN))


def loglog_fit(points: Sequence[tuple[float, float]], min_logN: float = 3) -> ScalingFit:
    """Fit ``1 - F = c (log N)^slope``.

    Args:
        points: ``(log2 N, infidelity)`` pairs; points with non-positive
            infidelity are skipped.
        min_logN: smallest ``log2 N`` used in the fit.
    """
    kept = [(float(x), float(y)) for x, y in points if x >= min_logN and y > 0]
    if len(kept) < 2:
        raise ValueError(f"need at least 2 points with log N >= {min_logN}, got {len(kept)}")
    x = np.log10([p[0] for p in kept])
    y = np.log10([p[1] for p in kept])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return ScalingFit(
        points=[(p[0], math.log10(p[1])) for p in kept],
        slope=float(slope),
        intercept=float(intercept),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        min_logN=min_logN,
    )


# ---------------------------------------------------------------------------
# entanglement entropy per level
# ---------------------------------------------------------------------------


def state_before_copy(circuit: Circuit, data: Sequence[int] | ClassicalData, address_amps) -> SparseState:
    """Noiseless state right before the first copy block (bus fully routed)."""
    state = circuit.initial_state(address_amps)
    wl, amps = state.wl.copy(), state.amps.copy()
    for block, (_, layers) in zip(circuit.blocks, circuit.bound_blocks(data)):
        if any(g.is_classical for g in block.gates()):
            break
        for layer in layers:
            run_ops(compile_gates(layer, state.dims), wl, amps)
    return SparseState.from_wires(wl, amps, state.dims)


def bb3_entropy_closed_form(level: int) -> float:
    """Entropy of a level-``level`` router of a three-level tree under a uniform query.

    The router is ``|W>`` with probability ``1 - p`` and otherwise ``|0>`` or
    ``|1>`` with probability ``p / 2`` each, ``p = 2**-level``; branches are
    mutually orthogonal on the rest of the tree so the state is diagonal.
    """
    if level == 0:
        return 1.0
    p = 2.0**-level
    return -(1 - p) * math.log2(1 - p) + p * (level + 1)


def entropy_profile(n: int, levels: str | int = "three", variant: str | None = None) -> list[tuple[int, float]]:
    """Entropy in bits of router ``(level, 0)`` for each level.

    Probed under a uniform noiseless query once the bus has reached the
    bottom of the tree. ``variant`` may be ``"FANOUT"``, ``"BB3"`` or
    ``"BB2"``; it overrides ``levels``.
    """
    if not 1 <= n <= 6:
        raise ValueError("entropy profile supports 1 <= n <= 6")
    if variant is None:
        variant = "BB3" if levels in ("three", 3, "3") else "BB2"
    circuit = build_circuit(variant.upper(), n)
    amps = [(i, 1 / math.sqrt(circuit.N)) for i in range(circuit.N)]
    state = state_before_copy(circuit, [0] * circuit.N, amps)
    out = []
    for level in range(n):
        rho = reduced_density_matrix(state, circuit.layout.router_index[(level, 0)])
        out.append((level, entanglement_entropy(rho)))
    return out
