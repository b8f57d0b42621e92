"""Configured sweeps, oracle validation and scaling fits.

A sweep runs :func:`qramsim.montecarlo.estimate_fidelity` for every
``n`` in a range and every dataset, attaches the analytic bounds, and
writes one CSV row per (n, dataset) plus a JSON sidecar with the
per-``n`` averages. Output depends only on the config and its seed.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable, Sequence

import numpy as np

from .channels import ChannelKind, make_channel
from .circuits import Circuit, ClassicalData, build_circuit, ideal_output
from .fidelity import bb3_entropy_closed_form, bounds, config_fidelity, entropy_profile, loglog_fit
from .montecarlo import PLAIN, STRATIFIED, enumerate_configs_fidelity, estimate_fidelity, uniform_query
from .oracle import DenseState, dense_channel_sim, dense_unitary_sim
from .sparse import apply_gates

TOOL_VERSION = "0.1.0"

CSV_COLUMNS = (
    "variant",
    "n",
    "M",
    "channel",
    "epsilon",
    "T",
    "dataset_seed",
    "samples",
    "mean_fidelity",
    "std_error",
    "bound_eq28",
    "bound_twolevel",
    "bound_general",
)

VARIANTS = (
    "BB3",
    "BB2",
    "BB3_MODIFIED",
    "BB2_MODIFIED",
    "FANOUT",
    "QROM",
    "HYBRID_BB3",
    "HYBRID_BB2",
    "HYBRID_FANOUT",
)
N_GUARD = {"QROM": 8, "FANOUT": 8}
NOISE_POLICIES = ("default", "routers")
COPY_VARIANTS = (None, "DEFAULT", "DOUBLE_QUERY")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


def fmt(x: float) -> str:
    """Float formatting used in every CSV: 12 significant digits."""
    return format(float(x), ".12g")


def gen_dataset(n: int, seed: int) -> ClassicalData:
    """``2**n`` fair bits from numpy's PCG64 generator seeded with ``seed``."""
    return ClassicalData.random(n, seed)


def derive_seed(*parts: int) -> int:
    """64-bit seed derived from integer parts via ``SeedSequence``."""
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class ExperimentConfig:
    variant: str
    n_range: tuple[int, int]
    channel: str
    epsilon: float
    master_seed: int
    M: int = 1
    samples: int = 2000
    datasets: int = 10
    noise_policy: str = "default"
    copy_variant: str | None = None
    workers: int = 1
    out_dir: str = "results"
    estimator: str = STRATIFIED

    def __post_init__(self):
        self.variant = str(self.variant).upper()
        self.channel = str(self.channel).upper()
        if self.copy_variant is not None:
            self.copy_variant = str(self.copy_variant).upper()
        try:
            lo, hi = (int(v) for v in self.n_range)
        except (TypeError, ValueError):
            raise ConfigError("n_range must be a pair [lo, hi]") from None
        self.n_range = (lo, hi)
        self.validate()

    @property
    def ns(self) -> list[int]:
        return list(range(self.n_range[0], self.n_range[1] + 1))

    @property
    def m(self) -> int:
        return int(round(math.log2(self.M)))

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; expected one of {', '.join(VARIANTS)}")
        if self.channel not in ChannelKind.__members__:
            raise ConfigError(f"unknown channel {self.channel!r}")
        lo, hi = self.n_range
        top = N_GUARD.get(self.variant, 10)
        if not 1 <= lo <= hi <= top:
            raise ConfigError(f"n_range must satisfy 1 <= lo <= hi <= {top} for {self.variant}")
        if not 0.0 <= float(self.epsilon) < 1.0:
            raise ConfigError("epsilon must lie in [0, 1)")
        if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, int) or self.master_seed < 0:
            raise ConfigError("master_seed must be a non-negative integer")
        if self.M < 1 or self.M & (self.M - 1):
            raise ConfigError("M must be a power of two")
        if self.variant.startswith("HYBRID"):
            if self.m > lo:
                raise ConfigError("hybrids need log2(M) <= n for every n in the range")
        elif self.M != 1:
            raise ConfigError("M applies to hybrid variants only")
        if self.samples < 1 or self.datasets < 1:
            raise ConfigError("samples and datasets must be positive")
        if self.noise_policy not in NOISE_POLICIES:
            raise ConfigError(f"noise_policy must be one of {NOISE_POLICIES}")
        if self.copy_variant not in COPY_VARIANTS:
            raise ConfigError("copy_variant must be null, DEFAULT or DOUBLE_QUERY")
        if self.copy_variant == "DOUBLE_QUERY" and self.variant not in ("BB3", "BB2"):
            raise ConfigError("the double query is defined for BB3 and BB2")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        if self.estimator not in (PLAIN, STRATIFIED):
            raise ConfigError(f"estimator must be {PLAIN!r} or {STRATIFIED!r}")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        missing = {"variant", "n_range", "channel", "epsilon", "master_seed"} - set(d)
        if missing:
            raise ConfigError(f"missing config keys: {', '.join(sorted(missing))}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["n_range"] = list(self.n_range)
        return d

    def config_hash(self) -> str:
        """Hash of everything that affects results (not workers or paths)."""
        d = self.to_dict()
        d.pop("workers")
        d.pop("out_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def circuit(self, n: int) -> Circuit:
        name = self.variant
        if self.copy_variant == "DOUBLE_QUERY":
            name = f"DOUBLE_QUERY_{self.variant}"
        return build_circuit(name, n, self.m)

    def noisy_wires(self, circuit: Circuit) -> tuple[int, ...] | None:
        if self.noise_policy == "default":
            return None
        routers = tuple(circuit.layout.reg("router_internal"))
        if not routers:
            raise ConfigError(f"{self.variant} at n={circuit.n} has no routers to make noisy")
        return routers

    @property
    def stem(self) -> str:
        parts = [self.variant, self.channel, fmt(self.epsilon)]
        if self.variant.startswith("HYBRID"):
            parts.append(f"M{self.M}")
        if self.copy_variant == "DOUBLE_QUERY":
            parts.append("DQ")
        return "sweep_" + "_".join(parts)


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list[dict[str, Any]]
    points: list[dict[str, Any]] = field(default_factory=list)
    elapsed: float = 0.0

    def csv_text(self) -> str:
        return rows_to_csv(self.rows)

    def metadata(self) -> dict[str, Any]:
        return {
            "tool_version": TOOL_VERSION,
            "config_hash": self.config.config_hash(),
            "config": self.config.to_dict(),
            "points": self.points,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
            "elapsed_seconds": round(self.elapsed, 3),
        }


def rows_to_csv(rows: Sequence[dict[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([fmt(r[c]) if isinstance(r[c], float) else r[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def read_csv(path: str) -> list[dict[str, Any]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ConfigError(f"{path}: columns do not match the sweep schema")
        rows = []
        for r in reader:
            for k in ("n", "M", "T", "dataset_seed", "samples"):
                r[k] = int(r[k])
            for k in ("epsilon", "mean_fidelity", "std_error", "bound_eq28", "bound_twolevel", "bound_general"):
                r[k] = float(r[k])
            rows.append(r)
    return rows


def atomic_write(path: str, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def aggregate(rows: Sequence[dict[str, Any]]) -> list[dict[str, Any]]:
    """Mean over datasets per (variant, n, M, channel, epsilon); combined standard error."""
    groups: dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r["variant"], r["n"], r["M"], r["channel"], r["epsilon"]), []).append(r)
    out = []
    for (variant, n, M, channel, eps), rs in groups.items():
        k = len(rs)
        mean = math.fsum(r["mean_fidelity"] for r in rs) / k
        se = math.sqrt(math.fsum(r["std_error"] ** 2 for r in rs)) / k
        out.append(
            {
                "variant": variant,
                "n": n,
                "M": M,
                "channel": channel,
                "epsilon": eps,
                "T": rs[0]["T"],
                "datasets": k,
                "mean_fidelity": mean,
                "infidelity": 1.0 - mean,
                "std_error": se,
                "bound_eq28": rs[0]["bound_eq28"],
                "bound_twolevel": rs[0]["bound_twolevel"],
                "bound_general": rs[0]["bound_general"],
            }
        )
    return out


def run_sweep(
    config: ExperimentConfig,
    workers: int | None = None,
    progress: Callable[[str], None] | None = None,
) -> SweepResult:
    """Estimate the fidelity for every n in the range and every dataset."""
    start = time.perf_counter()
    nworkers = config.workers if workers is None else workers
    rows = []
    for n in config.ns:
        circuit = config.circuit(n)
        dim = circuit.layout.wire_dims[circuit.noisy_wires[0]]
        ch = make_channel(config.channel, dim, config.epsilon)
        rep = bounds(max(config.epsilon, 1e-300), ch.epsilon_w, circuit.T, n, config.M)
        for d in range(config.datasets):
            dseed = derive_seed(config.master_seed, n, d) % 2**32
            data = gen_dataset(n, dseed)
            est = estimate_fidelity(
                circuit,
                ch,
                data,
                uniform_query(circuit.N),
                samples=config.samples,
                master_seed=derive_seed(config.master_seed, n, d, 1),
                workers=nworkers,
                method=config.estimator,
                noisy_wires=config.noisy_wires(circuit),
                keep_samples=False,
            )
            rows.append(
                {
                    "variant": config.variant if config.copy_variant != "DOUBLE_QUERY" else f"DOUBLE_QUERY_{config.variant}",
                    "n": n,
                    "M": config.M,
                    "channel": config.channel,
                    "epsilon": float(config.epsilon),
                    "T": circuit.T,
                    "dataset_seed": dseed,
                    "samples": config.samples,
                    "mean_fidelity": float(est.mean_fidelity),
                    "std_error": float(est.std_error),
                    "bound_eq28": 4.0 * config.epsilon * circuit.T * n,
                    "bound_twolevel": 4.0 * config.epsilon * circuit.T * (n + n * n),
                    "bound_general": rep.general if config.epsilon > 0 else 0.0,
                }
            )
        if progress:
            p = aggregate(rows[-config.datasets :])[0]
            progress(f"{config.variant} {config.channel} n={n}: 1-F = {p['infidelity']:.4g} +- {p['std_error']:.2g}")
    result = SweepResult(config, rows, aggregate(rows))
    result.elapsed = time.perf_counter() - start
    return result


def write_sweep(result: SweepResult, out_dir: str) -> tuple[str, str]:
    stem = os.path.join(out_dir, result.config.stem)
    atomic_write(stem + ".csv", result.csv_text())
    atomic_write(stem + ".json", json.dumps(result.metadata(), indent=2) + "\n")
    return stem + ".csv", stem + ".json"


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------


def fit_rows(rows: Sequence[dict[str, Any]], min_logN: float = 3) -> list[dict[str, Any]]:
    """One log-log fit per (variant, channel, epsilon, M) on dataset-averaged points."""
    points = aggregate(rows)
    groups: dict[tuple, list] = {}
    for p in points:
        groups.setdefault((p["variant"], p["channel"], p["epsilon"], p["M"]), []).append(p)
    out = []
    for (variant, channel, eps, M), ps in sorted(groups.items()):
        ps.sort(key=lambda p: p["n"])
        entry: dict[str, Any] = {"variant": variant, "channel": channel, "epsilon": eps, "M": M, "min_logN": min_logN}
        try:
            f = loglog_fit([(p["n"], p["infidelity"]) for p in ps], min_logN)
            entry.update(slope=f.slope, intercept=f.intercept, residual_rms=f.residual_rms, n_points=len(f.points))
        except ValueError as exc:
            entry.update(slope=None, error=str(exc))
        entry["points"] = [
            {k: p[k] for k in ("n", "infidelity", "std_error", "bound_eq28", "bound_general")} for p in ps
        ]
        out.append(entry)
    return out


def svg_chart(fits: Sequence[dict[str, Any]], width: int = 640, height: int = 420) -> str:
    """Log-log chart of infidelity vs log N with fit lines and the bound region in gray."""
    pts = [(p["n"], p["infidelity"]) for f in fits for p in f["points"] if p["infidelity"] > 0]
    bnd = [(p["n"], p["bound_eq28"]) for f in fits for p in f["points"] if p["bound_eq28"] > 0]
    if not pts:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"></svg>\n'
    xs = [math.log10(x) for x, _ in pts + bnd]
    ys = [math.log10(y) for _, y in pts + bnd]
    x0, x1 = min(xs), max(xs) + 1e-9
    y0, y1 = min(ys) - 0.2, max(ys) + 0.2
    pad = 50

    def px(x, y):
        return (
            pad + (math.log10(x) - x0) / (x1 - x0) * (width - 2 * pad),
            height - pad - (math.log10(y) - y0) / (y1 - y0) * (height - 2 * pad),
        )

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    for f in fits:
        b = sorted((p["n"], p["bound_eq28"]) for p in f["points"] if p["bound_eq28"] > 0)
        if len(b) >= 2:
            top = [px(x, y) for x, y in b]
            poly = top + [(top[-1][0], height - pad), (top[0][0], height - pad)]
            parts.append('<polygon fill="#cccccc" fill-opacity="0.5" points="%s"/>' % " ".join(f"{a:.1f},{c:.1f}" for a, c in poly))
    for i, f in enumerate(fits):
        col = colors[i % len(colors)]
        for p in f["points"]:
            if p["infidelity"] > 0:
                cx, cy = px(p["n"], p["infidelity"])
                parts.append(f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="3" fill="{col}"/>')
        if f.get("slope") is not None:
            ns = [p["n"] for p in f["points"] if p["n"] >= f["min_logN"]]
            ends = [(x, 10 ** (f["intercept"] + f["slope"] * math.log10(x))) for x in (min(ns), max(ns))]
            (ax, ay), (bx, by) = (px(*e) for e in ends)
            parts.append(f'<line x1="{ax:.1f}" y1="{ay:.1f}" x2="{bx:.1f}" y2="{by:.1f}" stroke="{col}" stroke-dasharray="4 3"/>')
            label = f"{f['variant']} {f['channel']}: slope {f['slope']:.2f}"
        else:
            label = f"{f['variant']} {f['channel']}"
        parts.append(f'<text x="{pad + 5}" y="{pad + 14 * i}" fill="{col}">{label}</text>')
    parts.append(f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>')
    parts.append(f'<line x1="{pad}" y1="{pad / 2}" x2="{pad}" y2="{height - pad}" stroke="black"/>')
    parts.append(f'<text x="{width / 2:.0f}" y="{height - 15}" text-anchor="middle">log N (log scale)</text>')
    parts.append(f'<text x="12" y="{height / 2:.0f}" transform="rotate(-90 12 {height / 2:.0f})" text-anchor="middle">1 - F (log scale)</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# entropy and bounds tables
# ---------------------------------------------------------------------------


def entropy_rows(n: int, variant: str) -> list[dict[str, Any]]:
    """Simulated entropy per level with the closed form where one exists."""
    v = variant.upper()
    if v not in ("BB3", "BB2", "FANOUT"):
        raise ConfigError("entropy profiles are defined for BB3, BB2 and FANOUT")
    if not 1 <= n <= 6:
        raise ConfigError("entropy profile supports 1 <= n <= 6")
    rows = []
    for level, s in entropy_profile(n, variant=v):
        if v == "BB3":
            ref: float | str = bb3_entropy_closed_form(level)
        elif v == "FANOUT":
            ref = 1.0
        else:
            ref = ""
        rows.append({"level": level, "entropy": s, "closed_form": ref})
    return rows


def bounds_rows(config: ExperimentConfig) -> list[dict[str, Any]]:
    out = []
    for n in config.ns:
        c = config.circuit(n)
        dim = c.layout.wire_dims[c.noisy_wires[0]]
        ch = make_channel(config.channel, dim, config.epsilon)
        rep = bounds(config.epsilon, ch.epsilon_w, c.T, n, config.M)
        out.append({"variant": config.variant, **rep.to_dict()})
    return out


# ---------------------------------------------------------------------------
# oracle validation
# ---------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


DENSE_CASES = {
    "BB2": (1, 2),
    "BB2_MODIFIED": (1, 2),
    "BB3": (1, 2),
    "BB3_MODIFIED": (1, 2),
    "FANOUT": (1, 2),
    "QROM": (1, 2, 3, 4),
    "HYBRID_BB2": (2, 3),
    "HYBRID_FANOUT": (2, 3),
    "HYBRID_BB3": (2,),
    "DOUBLE_QUERY_BB2": (1, 2),
    "DOUBLE_QUERY_BB3": (1,),
}


def _random_amps(N: int, rng: np.random.Generator) -> list[tuple[int, complex]]:
    k = int(rng.integers(1, N + 1))
    idx = sorted(rng.choice(N, size=k, replace=False).tolist())
    v = rng.normal(size=k) + 1j * rng.normal(size=k)
    v /= np.linalg.norm(v)
    return [(i, complex(a)) for i, a in zip(idx, v)]


def check_sparse_dense(
    variants: Sequence[str] | None = None, cases: int = 50, seed: int = 0, tol: float = 1e-10
) -> list[Check]:
    """Noiseless sparse runs vs full statevector runs on random data, queries and resting labels."""
    out = []
    for variant in variants or DENSE_CASES:
        rng = np.random.default_rng(derive_seed(seed, sum(map(ord, variant))))
        ns = DENSE_CASES[variant]
        worst = 0.0
        built = {}
        for case in range(cases):
            n = ns[case % len(ns)]
            m = 1 if variant.startswith("HYBRID") else 0
            if (n, m) not in built:
                built[(n, m)] = build_circuit(variant, n, m)
            c = built[(n, m)]
            data = gen_dataset(n, int(rng.integers(2**31)))
            amps = _random_amps(c.N, rng)
            init_label = c.random_tree_label(rng) if case % 2 else None
            init = c.initial_state(amps, init_label)
            sparse_out = init
            for _, layers in c.bound_blocks(data):
                sparse_out = apply_gates(sparse_out, [g for layer in layers for g in layer])
            dense_out = dense_unitary_sim(c, DenseState.from_sparse(init), data)
            worst = max(worst, dense_out.max_deviation(sparse_out))
        out.append(Check(f"sparse vs dense {variant}", worst <= tol, f"{cases} cases, max amplitude error {worst:.2e}"))
    return out


def check_mc_density(
    variants: Sequence[str] = ("BB2", "FANOUT"),
    ns: Sequence[int] = (1, 2),
    epsilons: Sequence[float] = (0.01, 0.1),
    channels: Sequence[str] = tuple(ChannelKind.__members__),
    samples: int = 10_000,
    seed: int = 11,
    nsigma: float = 3.0,
) -> list[Check]:
    """Monte-Carlo estimates vs exact density-matrix fidelities."""
    out = []
    for variant in variants:
        for n in ns:
            c = build_circuit(variant, n)
            data = gen_dataset(n, derive_seed(seed, n) % 2**32)
            amps = uniform_query(c.N)
            for chname in channels:
                for eps in epsilons:
                    ch = make_channel(chname, 2, eps)
                    _, exact = dense_channel_sim(c, ch, data, amps)
                    est = estimate_fidelity(c, ch, data, amps, samples, derive_seed(seed, n, int(eps * 1e6)))
                    dev = est.mean_fidelity - exact
                    ok = abs(dev) <= nsigma * est.std_error
                    out.append(
                        Check(
                            f"MC vs density {variant} n={n} {chname} eps={eps}",
                            ok,
                            f"exact {exact:.6f}, MC {est.mean_fidelity:.6f} +- {est.std_error:.6f} (z={dev / max(est.std_error, 1e-300):+.2f})",
                        )
                    )
    return out


def copy_round(circuit: Circuit) -> int:
    """Index of the noise round right before the first copy gate acts."""
    k = -1
    for b in circuit.blocks:
        if b.noise_round:
            k += 1
        if any(g.is_classical for g in b.gates()):
            return k
    raise ValueError("circuit has no copy block")


def check_mc_enumeration(
    n: int = 3,
    channels: Sequence[str] = ("BIT_FLIP", "DEPOLARIZING", "DEPHASING"),
    epsilon: float = 0.1,
    samples: int = 10_000,
    seed: int = 5,
    nsigma: float = 3.0,
) -> list[Check]:
    """Restricted-location Monte Carlo vs exhaustive enumeration on BB3."""
    c = build_circuit("BB3", n)
    data = gen_dataset(n, derive_seed(seed, n) % 2**32)
    amps = uniform_query(c.N)
    root = c.layout.router_index[(0, 0)]
    left = c.layout.router_index[(1, 0)]
    t = copy_round(c)
    location_sets = {
        "single (t*, root)": [(t, root)],
        "double (t*, root), (t*-1, level-1 router)": [(t, root), (t - 1, left)],
    }
    out = []
    for chname in channels:
        ch = make_channel(chname, 3, epsilon)
        for label, locs in location_sets.items():
            exact, total_p = enumerate_configs_fidelity(c, ch, data, amps, locs)
            est = estimate_fidelity(c, ch, data, amps, samples, derive_seed(seed, len(locs)), allowed_locations=locs)
            dev = est.mean_fidelity - exact
            ok = abs(dev) <= nsigma * est.std_error + 1e-12 and abs(total_p - 1) <= 1e-12
            out.append(
                Check(
                    f"MC vs enumeration BB3 n={n} {chname} {label}",
                    ok,
                    f"exact {exact:.6f} (sum p = {total_p:.12f}), MC {est.mean_fidelity:.6f} +- {est.std_error:.6f}",
                )
            )
    return out


def check_density_enumeration(tol: float = 1e-9) -> list[Check]:
    """Density-matrix oracle vs full enumeration over every location (n = 1)."""
    out = []
    for variant in ("BB2", "FANOUT", "BB3"):
        c = build_circuit(variant, 1)
        dim = c.layout.wire_dims[c.noisy_wires[0]]
        for chname in ("BIT_FLIP", "DAMPING"):
            ch = make_channel(chname, dim, 0.1)
            data = (1, 0)
            amps = uniform_query(2)
            dm, f_dm = dense_channel_sim(c, ch, data, amps)
            locs = [(k, w) for k in range(c.T) for w in c.noisy_wires]
            f_en, _ = enumerate_configs_fidelity(c, ch, data, amps, locs)
            dev = abs(f_dm - f_en)
            out.append(
                Check(
                    f"density vs enumeration {variant} n=1 {chname}",
                    dev <= tol and abs(dm.trace() - 1) <= 1e-9,
                    f"|diff| = {dev:.1e}, trace - 1 = {dm.trace() - 1:.1e}",
                )
            )
    return out


def validation_suite(seed: int = 0, quick: bool = False) -> list[Check]:
    """All oracle-equivalence checks; ``quick`` shrinks case and sample counts."""
    checks = check_sparse_dense(cases=6 if quick else 50, seed=seed)
    checks += check_density_enumeration()
    if quick:
        checks += check_mc_density(ns=(1,), channels=("BIT_FLIP", "DEPHASING"), samples=4000, seed=seed + 11)
        checks += check_mc_enumeration(channels=("BIT_FLIP",), samples=4000, seed=seed + 5)
    else:
        checks += check_mc_density(seed=seed + 11)
        checks += check_mc_enumeration(seed=seed + 5)
    return checks


def noiseless_fidelity(circuit: Circuit, data, address_amps, init_label=None) -> float:
    """Fidelity of a noiseless sparse run (1 for a correct circuit)."""
    state = circuit.initial_state(address_amps, init_label)
    for _, layers in circuit.bound_blocks(data):
        state = apply_gates(state, [g for layer in layers for g in layer])
    return config_fidelity(state, ideal_output(address_amps, data, circuit), circuit.output_wires)
