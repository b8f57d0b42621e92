"""
Bucket brigade, fanout, QROM and hybrids side by side
=====================================================

Same noise, same memory size, different wiring. Fanout routers are all
entangled with the address, so every error hurts; bucket-brigade routers
sit idle in |W> off the queried branches.
"""

# %%
from qramsim import ClassicalData, build_circuit, estimate_fidelity, make_channel, uniform_query
from qramsim.experiments import fit_rows, run_sweep, ExperimentConfig

n, eps, samples = 4, 1e-3, 300
data = ClassicalData.random(n, seed=3)

rows = []
for name, m in [("BB3", 0), ("BB2", 0), ("FANOUT", 0), ("QROM", 0), ("HYBRID_BB3", 2), ("HYBRID_FANOUT", 2)]:
    c = build_circuit(name, n, m)
    dim = c.layout.wire_dims[c.noisy_wires[0]]
    est = estimate_fidelity(c, make_channel("depolarizing", dim, eps), data, uniform_query(c.N), samples, 5, method="stratified")
    rows.append((name, c.layout.n_wires, c.T, est.infidelity, est.std_error))

print(f"{'variant':15s} {'wires':>5s} {'T':>4s}  infidelity")
for name, wires, T, inf, se in rows:
    print(f"{name:15s} {wires:5d} {T:4d}  {inf:.2e} +- {se:.1e}")

# %%
# Growth with log N. A slope near 2 means polylog scaling; fanout grows
# like N so its points double with every extra address bit.
for variant in ("BB2", "FANOUT"):
    cfg = ExperimentConfig(variant=variant, n_range=(2, 6), channel="dephasing", epsilon=eps, master_seed=2, samples=200, datasets=3)
    fit = fit_rows(run_sweep(cfg).rows, min_logN=3)[0]
    print(variant, "slope", round(fit["slope"], 2), [f"{p['infidelity']:.1e}" for p in fit["points"]])
