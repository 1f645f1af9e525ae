"""Decode integer genomes into layered circuits and price their hardware cost.

Each gene picks one layer: a base-3 digit per qubit chooses RX/RY/RZ and a
bitmask over qubit pairs chooses the CNOTs.  A genome is a variable-length
gene list, so circuit depth is itself a search variable.
"""

import numpy as np

from naqas.space import (SearchSpaceDef, cost_of, decode_layer, encode_layer,
                         genome_to_circuit, random_genome)

space = SearchSpaceDef(n_qubits=3, min_layers=5, max_layers=10)
print(f"3-qubit layer space: {space.rot_combos} rotation combos x "
      f"2^{space.cnot_pairs} CNOT subsets = {space.layer_count} layers")
print(f"genome length range [{space.min_layers}, {space.max_layers}] -> up to "
      f"{space.layer_count}^{space.max_layers} ~ 2e23 architectures\n")

for gene in (0, 1, 7, 100, 215):
    rots, cnots = decode_layer(gene, space)
    back = encode_layer(rots, cnots, space)
    print(f"gene {gene:3d} -> rotations {rots}, cnots {cnots}  (re-encodes to {back})")

print("\nA genome expands layer by layer; parameter slots follow qubit order:")
genome = (100, 7, 215, 0, 42)
for g in genome_to_circuit(genome, space):
    if g.kind == "cnot":
        print(f"  cnot  control={g.control} target={g.target}")
    else:
        print(f"  {g.kind:5s} qubit={g.target} slot={g.param_slot}")

print("\nHardware cost = alpha * CNOT count + beta * depth:")
rng = np.random.default_rng(1)
print(f"  {'genome':36s} {'cnots':>5s} {'depth':>5s} {'cost':>6s}")
for _ in range(5):
    genome = random_genome(space, rng)
    m = cost_of(genome, space, alpha=1.0, beta=1.0)
    print(f"  {str(list(genome)):36s} {m.n_cnot:5d} {m.n_depth:5d} {m.cost:6.1f}")
m = cost_of((0, 0, 0, 0, 0), space)
print(f"  the all-RX no-CNOT genome costs only its depth: {m.cost:.1f}")
