"""
Cross-checking the sparse simulator
===================================

A dense statevector and a density matrix restricted to reachable basis
states give independent answers for small trees. They should agree with
the sparse engine exactly, and with Monte Carlo within its error bar.
"""

# %%
from qramsim import DenseState, ClassicalData, build_circuit, dense_channel_sim, dense_unitary_sim
from qramsim import estimate_fidelity, make_channel, uniform_query
from qramsim.sparse import apply_gates

c = build_circuit("BB2", 2)
data = ClassicalData.random(2, seed=4)
init = c.initial_state(uniform_query(c.N))

sparse = init
for _, layers in c.bound_blocks(data):
    sparse = apply_gates(sparse, [g for layer in layers for g in layer])
dense = dense_unitary_sim(c, DenseState.from_sparse(init), data)
print("max amplitude difference:", dense.max_deviation(sparse))

# %%
# Exact noisy fidelity from the density matrix, then Monte Carlo.
for kind in ("bit_flip", "damping", "heating"):
    ch = make_channel(kind, 2, 0.05)
    dm, exact = dense_channel_sim(c, ch, data, uniform_query(c.N))
    est = estimate_fidelity(c, ch, data, samples=4000, master_seed=3)
    z = (est.mean_fidelity - exact) / est.std_error
    print(f"{kind:9s} exact {exact:.5f}  MC {est.mean_fidelity:.5f} +- {est.std_error:.5f}  z = {z:+.2f}  dim {dm.dim}")

# %%
# The same checks, bundled, are what `python -m qramsim validate` runs.
from qramsim.experiments import validation_suite

for check in validation_suite(quick=True)[:5]:
    print(check.line())
