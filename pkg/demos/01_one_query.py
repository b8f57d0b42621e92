"""
A single query through a bucket-brigade tree
============================================

Load eight random bits, send one address (and then all of them at once)
through a three-level-router tree and look at what comes back on the bus.
"""

# %%
import numpy as np

from qramsim import ClassicalData, build_circuit, uniform_query
from qramsim.sparse import apply_gates

n = 3
circuit = build_circuit("BB3", n)
data = ClassicalData.random(n, seed=7)
print("memory:", data.bits)
print(f"{circuit.layout.n_wires} wires, {circuit.T} noise rounds")

# %%
# Run the circuit gate by gate on the sparse state. Address 5 should
# leave x_5 on the bus (qutrit value 1 means |0>, 2 means |1>).


def run(amps):
    state = circuit.initial_state(amps)
    for _, layers in circuit.bound_blocks(data):
        state = apply_gates(state, [g for layer in layers for g in layer])
    return state


out = run([(5, 1.0)])
print("bus after querying address 5:", int(out.labels[0][circuit.bus_wire]) - 1, "expected", data.bits[5])

# %%
# In superposition the state never holds more than a handful of terms
# per address, which is what keeps the simulation cheap.
out = run(uniform_query(circuit.N))
print("terms in the final state:", len(out))
bus = {int(lab[circuit.bus_wire]) - 1 for lab in out.labels}
print("bus values seen:", sorted(bus))

# %%
# Router entanglement with the rest of the tree, level by level.
from qramsim.fidelity import entropy_profile

for level, s in entropy_profile(5, variant="BB3"):
    print(f"level {level}: S = {s:.4f} bits")
for level, s in entropy_profile(5, variant="FANOUT"):
    print(f"fanout level {level}: S = {s:.4f} bits")
