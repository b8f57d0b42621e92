"""Monte-Carlo sampling of error configurations and fidelity estimation.

A trajectory interleaves the circuit's blocks with noise rounds. At each
round the Kraus index of every noisy wire is drawn from the exact joint
Born distribution (see :mod:`qramsim.channels`), the chosen operators are
applied and the state is renormalized. The average of ``F(c)`` over
trajectories estimates the query fidelity.

Most trajectories at small error rates see no error at all. The no-error
path is therefore simulated once per estimate, together with the
probability ``P0(k)`` of drawing only ``K_0`` at each round ``k``. A
trajectory then only does state work from its first error onward; the
first error itself is drawn from the exact conditional distribution.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .channels import (
    ErrorConfig,
    KrausChannel,
    apply_kraus,
    draw_indices,
    draw_term,
    normalize_prune,
    verify_channel,
)
from .circuits import Circuit, ClassicalData, ideal_output
from .fidelity import FidelityEvaluator
from .sparse import SparseState, compile_gates, run_ops

PLAIN = "plain"
STRATIFIED = "stratified"


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    """Private stream for trajectory ``index``; independent of scheduling."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(index)]))


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("QRAMSIM_WORKERS", "1"))
    return max(1, int(workers))


class Program:
    """A circuit bound to data and an input state, ready to sample.

    Args:
        circuit: the circuit.
        channel: single-wire channel applied to noisy wires.
        data: memory contents.
        address_amps: ``(address, amplitude)`` pairs of the query.
        init_label: optional resting label of the non-address wires.
        noisy_wires: overrides ``circuit.noisy_wires``.
        allowed_locations: if given, noise acts only at these
            ``(round, wire)`` pairs and is the identity elsewhere.
    """

    def __init__(
        self,
        circuit: Circuit,
        channel: KrausChannel,
        data: ClassicalData | Sequence[int],
        address_amps: Sequence[tuple[int, complex]],
        init_label: Sequence[int] | None = None,
        noisy_wires: Iterable[int] | None = None,
        allowed_locations: Iterable[tuple[int, int]] | None = None,
    ):
        rep = verify_channel(channel)
        if not rep.sampler_supported:
            raise ValueError("channel is not supported by the sampler")
        if rep.completeness_residual > 1e-9:
            raise ValueError("channel is not trace preserving")
        self.circuit = circuit
        self.channel = channel
        self.address_amps = [(int(i), complex(a)) for i, a in address_amps]
        ideal = ideal_output(self.address_amps, data, circuit)
        init = circuit.initial_state(self.address_amps, init_label)
        self.dims = init.dims
        self.init_wl = init.wl
        self.init_amps = init.amps
        self.evaluate = FidelityEvaluator(ideal, circuit.output_wires, len(self.dims))

        noisy = tuple(circuit.noisy_wires if noisy_wires is None else noisy_wires)
        for w in noisy:
            if self.dims[w] != channel.dim:
                raise ValueError(f"noisy wire {w} has dimension {self.dims[w]}, channel {channel.dim}")
        # split the circuit at noise rounds: pre_ops, then (noise k, ops[k])
        self.pre_ops: list = []
        self.round_ops: list[list] = []
        for noise, layers in circuit.bound_blocks(data):
            ops = [op for layer in layers for op in compile_gates(layer, self.dims)]
            if noise:
                self.round_ops.append(ops)
            elif self.round_ops:
                self.round_ops[-1].extend(ops)
            else:
                self.pre_ops.extend(ops)
        self.T = len(self.round_ops)
        if allowed_locations is None:
            wires = np.array(sorted(noisy), dtype=np.intp)
            self.round_wires = [wires] * self.T
        else:
            per_round: list[list[int]] = [[] for _ in range(self.T)]
            for k, w in allowed_locations:
                if not 0 <= k < self.T:
                    raise ValueError(f"noise round {k} out of range")
                if self.dims[w] != channel.dim:
                    raise ValueError(f"wire {w} does not match the channel dimension")
                per_round[k].append(int(w))
            self.round_wires = [np.array(sorted(set(ws)), dtype=np.intp) for ws in per_round]
        self.lambda_paths = _branch_paths(circuit, self.address_amps)
        self._nominal: list | None = None
        with np.errstate(divide="ignore"):
            self._logw0 = np.log(channel.weights[0])

    # -- no-error path -----------------------------------------------------

    def nominal(self):
        """States before each noise round on the no-error path, ``P0(k)``, ``F0``."""
        if self._nominal is not None:
            return self._nominal
        wl, amps = self.init_wl.copy(), self.init_amps.copy()
        run_ops(self.pre_ops, wl, amps)
        states, p0, q0 = [], np.ones(self.T), np.zeros(self.T)
        ch = self.channel
        for k in range(self.T):
            wires = self.round_wires[k]
            states.append((wl.copy(), amps.copy()))
            if wires.size:
                log_s = self._log_no_error(wl, wires)
                w = np.abs(amps) ** 2
                q0[k] = float(np.sum(w * -np.expm1(log_s)))
                p0[k] = 1.0 - q0[k]
                if not ch.k0_scalar:
                    wl, amps = apply_kraus(wl, amps, wires, np.zeros(wires.size, np.intp), ch)
                    if q0[k] < 1.0:
                        wl, amps, _ = normalize_prune(wl, amps)
            run_ops(self.round_ops[k], wl, amps)
        f0 = self.evaluate(wl, amps) if np.all(p0 > 0) else 0.0
        self._nominal = (states, p0, q0, f0)
        return self._nominal

    def _log_no_error(self, wl, wires):
        return self._logw0[wl[wires]].sum(axis=0)

    # -- sampling ----------------------------------------------------------

    def _apply(self, wl, amps, wires, ms):
        ch = self.channel
        if ch.k0_scalar:
            hit = ms > 0
            wires, ms = wires[hit], ms[hit]
        wl, amps = apply_kraus(wl, amps, wires, ms, ch)
        wl, amps, _ = normalize_prune(wl, amps)
        return wl, amps

    def _first_error(self, wl, amps, wires, rng):
        """Draw a round configuration conditioned on at least one ``m > 0``."""
        ch = self.channel
        w = np.abs(amps) ** 2
        t = draw_term(amps, rng, w * -np.expm1(self._log_no_error(wl, wires)))
        vals = wl[wires, t]
        w0 = ch.weights[0, vals]
        q = 1.0 - w0
        # first erroneous wire j: q_j * prod_{r<j} (1 - q_r)
        prefix = np.concatenate(([1.0], np.cumprod(w0)[:-1]))
        pj = np.cumsum(q * prefix)
        j = min(int(np.searchsorted(pj, rng.random() * pj[-1], side="right")), len(q) - 1)
        cum = np.cumsum(ch.weights[1:, vals[j]])
        mj = 1 + min(int(np.searchsorted(cum, rng.random() * cum[-1], side="right")), len(cum) - 1)
        ms = np.zeros(wires.size, dtype=np.intp)
        ms[j] = mj
        if j + 1 < wires.size:
            cw = ch.cum_weights[:, vals[j + 1 :]]
            u = rng.random(wires.size - j - 1) * cw[-1]
            ms[j + 1 :] = np.count_nonzero(u[None, :] >= cw, axis=0)
        return ms

    def _continue(self, k, wl, amps, ms, rng, events):
        """Apply round ``k`` with indices ``ms`` then run to the end."""
        wires = self.round_wires[k]
        events += _events(k, wires, ms)
        wl, amps = self._apply(wl, amps, wires, ms)
        run_ops(self.round_ops[k], wl, amps)
        for k2 in range(k + 1, self.T):
            wires = self.round_wires[k2]
            if wires.size:
                ms = draw_indices(wl, amps, wires, self.channel, rng)
                events += _events(k2, wires, ms)
                wl, amps = self._apply(wl, amps, wires, ms)
            run_ops(self.round_ops[k2], wl, amps)
        return wl, amps

    def sample(self, rng: np.random.Generator, mode: str = PLAIN) -> tuple[float, list]:
        """One trajectory: ``(F(c), events)``.

        In ``stratified`` mode the trajectory is conditioned on at least one
        error; see :func:`estimate_fidelity`.
        """
        states, p0, q0, f0 = self.nominal()
        if mode == STRATIFIED:
            surv = np.concatenate(([1.0], np.cumprod(p0)[:-1]))
            pk = np.cumsum(surv * q0)
            if pk[-1] <= 0:
                return f0, []
            k = min(int(np.searchsorted(pk, rng.random() * pk[-1], side="right")), self.T - 1)
        else:
            k = -1
            for kk in range(self.T):
                if q0[kk] > 0 and rng.random() < q0[kk]:
                    k = kk
                    break
            if k < 0:
                return f0, []
        wl, amps = states[k]
        wl, amps = wl.copy(), amps.copy()
        ms = self._first_error(wl, amps, self.round_wires[k], rng)
        events: list = []
        wl, amps = self._continue(k, wl, amps, ms, rng, events)
        return self.evaluate(wl, amps), events

    def no_error_probability(self) -> float:
        return float(np.prod(self.nominal()[1]))

    def lambda_good(self, events) -> float | None:
        if self.lambda_paths is None:
            return None
        hit = {r for _, r, _ in events}
        return float(sum(p for p, path in self.lambda_paths if not (path & hit)))

    def run_configuration(self, events: Iterable[tuple[int, int, int]], k0_elsewhere: bool = False):
        """Deterministic run with ``K_m`` at the given ``(round, wire, m)``.

        Wires not listed get the identity, or ``K_0`` at every noisy location
        when ``k0_elsewhere`` is set. Returns ``(F(c), p)`` where ``p`` is
        the squared norm of the unnormalized final state.
        """
        by_round: dict[int, dict[int, int]] = {}
        for k, r, m in events:
            if not 0 <= k < self.T:
                raise ValueError(f"noise round {k} out of range")
            if not 0 <= m < self.channel.n_kraus:
                raise ValueError(f"Kraus index {m} out of range")
            by_round.setdefault(int(k), {})[int(r)] = int(m)
        wl, amps = self.init_wl.copy(), self.init_amps.copy()
        run_ops(self.pre_ops, wl, amps)
        prob = 1.0
        for k in range(self.T):
            spec = dict(by_round.get(k, {}))
            if k0_elsewhere:
                for r in self.round_wires[k]:
                    spec.setdefault(int(r), 0)
            if spec:
                wires = np.array(list(spec), dtype=np.intp)
                ms = np.array(list(spec.values()), dtype=np.intp)
                wl, amps = apply_kraus(wl, amps, wires, ms, self.channel)
                if amps.size == 0:
                    return 0.0, 0.0
                wl, amps, nrm2 = normalize_prune(wl, amps)
                prob *= nrm2
            run_ops(self.round_ops[k], wl, amps)
        return self.evaluate(wl, amps), prob


def _events(k, wires, ms):
    hit = np.flatnonzero(ms)
    return [(k, int(wires[i]), int(ms[i])) for i in hit]


def _branch_paths(circuit: Circuit, address_amps):
    """``(|a_i|^2, router wires on the path of i)`` for tree circuits."""
    if not circuit.is_tree:
        return None
    lay = circuit.layout
    n = circuit.n
    out = []
    for i, a in address_amps:
        path = {lay.router_index[(lvl, i >> (n - lvl))] for lvl in range(n)}
        out.append((abs(a) ** 2, path))
    return out


def run_trajectory(
    circuit: Circuit,
    channel: KrausChannel,
    data: ClassicalData | Sequence[int],
    address_amps: Sequence[tuple[int, complex]],
    seed: int,
    init_label: Sequence[int] | None = None,
) -> tuple[float, ErrorConfig]:
    """Sample one error configuration ``c`` and return ``(F(c), c)``."""
    prog = Program(circuit, channel, data, address_amps, init_label)
    f, events = prog.sample(np.random.default_rng(seed))
    return f, ErrorConfig(events, prog.lambda_good(events))


@dataclass
class FidelityEstimate:
    mean_fidelity: float
    std_error: float
    samples: int
    master_seed: int
    method: str = PLAIN
    no_error_probability: float | None = None
    per_sample: np.ndarray | None = field(default=None, repr=False)

    @property
    def infidelity(self) -> float:
        return 1.0 - self.mean_fidelity


def _sample_range(args):
    prog_args, mode, seed, start, stop = args
    prog = Program(*prog_args[:4], **prog_args[4])
    return [prog.sample(trajectory_rng(seed, i), mode)[0] for i in range(start, stop)]


def _chunks(samples: int, workers: int) -> list[tuple[int, int]]:
    size = -(-samples // workers)
    return [(s, min(s + size, samples)) for s in range(0, samples, size)]


def estimate_fidelity(
    circuit: Circuit,
    channel: KrausChannel,
    data: ClassicalData | Sequence[int],
    address_amps: Sequence[tuple[int, complex]] | None = None,
    samples: int = 1000,
    master_seed: int = 0,
    workers: int | None = 1,
    method: str = PLAIN,
    init_label: Sequence[int] | None = None,
    noisy_wires: Iterable[int] | None = None,
    allowed_locations: Iterable[tuple[int, int]] | None = None,
    keep_samples: bool = True,
) -> FidelityEstimate:
    """Average ``F(c)`` over ``samples`` trajectories.

    ``plain`` averages unconditioned trajectories, with
    ``std_error = stdev / sqrt(samples)``. ``stratified`` uses the exactly
    known probability ``P0`` of the error-free configuration (whose fidelity
    ``F0`` is computed once) and samples only trajectories with at least one
    error: ``F = P0 F0 + (1 - P0) mean(F | error)``, with
    ``std_error = (1 - P0) stdev / sqrt(samples)``. Both are unbiased.

    Trajectory ``i`` always draws from the stream seeded by
    ``(master_seed, i)``, so the result does not depend on ``workers``.
    The default query is the uniform superposition over all addresses.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if method not in (PLAIN, STRATIFIED):
        raise ValueError(f"unknown method {method!r}")
    if address_amps is None:
        address_amps = uniform_query(circuit.N)
    kw = {
        "init_label": init_label,
        "noisy_wires": None if noisy_wires is None else tuple(noisy_wires),
        "allowed_locations": None if allowed_locations is None else tuple(allowed_locations),
    }
    prog_args = (circuit, channel, data, list(address_amps), kw)
    prog = Program(*prog_args[:4], **kw)
    states, p0, q0, f0 = prog.nominal()
    p_clean = float(np.prod(p0))
    nworkers = min(resolve_workers(workers), samples)
    if nworkers == 1:
        values = [prog.sample(trajectory_rng(master_seed, i), method)[0] for i in range(samples)]
    else:
        jobs = [(prog_args, method, master_seed, a, b) for a, b in _chunks(samples, nworkers)]
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            values = [v for part in pool.map(_sample_range, jobs) for v in part]
    arr = np.asarray(values, dtype=float)
    mean = math.fsum(values) / samples
    if samples > 1:
        sd = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (samples - 1))
    else:
        sd = 0.0
    se = sd / math.sqrt(samples)
    if method == STRATIFIED:
        mean = p_clean * f0 + (1.0 - p_clean) * mean
        se = (1.0 - p_clean) * se
    return FidelityEstimate(
        mean_fidelity=mean,
        std_error=se,
        samples=samples,
        master_seed=master_seed,
        method=method,
        no_error_probability=p_clean,
        per_sample=arr if keep_samples and samples <= 100_000 else None,
    )


def uniform_query(N: int) -> list[tuple[int, complex]]:
    a = 1.0 / math.sqrt(N)
    return [(i, a) for i in range(N)]


def enumerate_configs_fidelity(
    circuit: Circuit,
    channel: KrausChannel,
    data: ClassicalData | Sequence[int],
    address_amps: Sequence[tuple[int, complex]],
    allowed_locations: Sequence[tuple[int, int]],
    init_label: Sequence[int] | None = None,
    max_configs: int = 10**6,
) -> tuple[float, float]:
    """Exact fidelity when noise acts only at ``allowed_locations``.

    Sums ``p(c) F(c)`` over every assignment of Kraus indices to the
    locations. Returns ``(F, total probability)``; the latter should be 1.
    """
    locs = list(dict.fromkeys((int(k), int(r)) for k, r in allowed_locations))
    K = channel.n_kraus
    if K ** len(locs) > max_configs:
        raise ValueError(f"{K}^{len(locs)} configurations exceed the guard {max_configs}")
    prog = Program(circuit, channel, data, address_amps, init_label, allowed_locations=locs)
    total_f, total_p = [], []
    for idx in np.ndindex(*([K] * len(locs))):
        events = [(k, r, m) for (k, r), m in zip(locs, idx)]
        f, p = prog.run_configuration(events)
        total_f.append(p * f)
        total_p.append(p)
    return math.fsum(total_f), math.fsum(total_p)
