"""
Noisy queries against the analytic bounds
=========================================

Sample error configurations on a three-level-router tree and compare the
estimated infidelity with the mixed-unitary bound 4 eps T log N and the
general bound A' eps T log N.
"""

# %%
from qramsim import ClassicalData, bounds, build_circuit, estimate_fidelity, make_channel

eps = 1e-3
samples = 400

# %%
# Mixed-unitary channels first. The estimate sits well inside the bound
# because most errors land on routers no query branch goes through.
for kind in ("depolarizing", "bit_flip", "dephasing"):
    print(kind)
    for n in range(2, 6):
        c = build_circuit("BB3", n)
        ch = make_channel(kind, 3, eps)
        est = estimate_fidelity(c, ch, ClassicalData.random(n, seed=n), samples=samples, master_seed=1, method="stratified")
        b = bounds(eps, ch.epsilon_w, c.T, n)
        print(f"  n={n}  1-F = {est.infidelity:.2e} +- {est.std_error:.1e}   4 eps T n = {b.mixed_unitary:.2e}")

# %%
# Damping and heating are not mixed-unitary. Their coefficient A' depends
# on how much the no-error Kraus operator damages the wait state.
for kind in ("damping", "heating"):
    ch = make_channel(kind, 3, eps)
    print(f"{kind} eps_W = {ch.epsilon_w:.3g}  A' = {bounds(eps, ch.epsilon_w, 11, 3).general_coefficient:.3g}")
    for n in range(2, 6):
        c = build_circuit("BB3", n)
        est = estimate_fidelity(c, ch, ClassicalData.random(n, seed=n), samples=samples, master_seed=1, method="stratified")
        print(f"  n={n}  1-F = {est.infidelity:.2e}   A' eps T n = {bounds(eps, ch.epsilon_w, c.T, n).general:.2e}")
