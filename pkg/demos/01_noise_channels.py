"""Walk through the three hardware-noise channels on a single qubit.

Shows the operator-sum action on density matrices: trace preservation,
Kraus completeness, how bit-flip and depolarizing noise shrink <Z>, and
how T1/T2 relaxation damps populations and coherences over gate time.
"""

import numpy as np

from naqas import sim
from naqas.sim import GateOp, NoiseSpec

print("=== Bit-flip channel:  rho -> (1-p) rho + p X rho X ===")
plus_pole = sim.zero_state(1)
for p in (0.0, 0.1, 0.25, 0.5, 1.0):
    out = sim.apply_channel(plus_pole, NoiseSpec("bitflip", p=p), 0)
    print(f"  p={p:4.2f}:  <Z> = {sim.expect_z(out, 0):+.4f}   (expected {1-2*p:+.4f})")

print("\n=== Depolarizing channel: p=3/4 sends any pure state to I/2 ===")
rng = np.random.default_rng(0)
v = rng.normal(size=2) + 1j * rng.normal(size=2)
v /= np.linalg.norm(v)
rho = np.outer(v, v.conj())
out = sim.apply_channel(rho, NoiseSpec("depolarizing", p=0.75), 0)
print("  random pure state -> ")
print(np.array_str(out.real, precision=4, suppress_small=True))
print(f"  max deviation from I/2: {np.max(np.abs(out - np.eye(2)/2)):.2e}")

print("\n=== Thermal relaxation: populations decay with e^(-tg/t1), "
      "coherences with e^(-tg/t2) ===")
spec = lambda tg: NoiseSpec("thermal", t1=100.0, t2=50.0, tg=tg)
superposition = sim.apply_gate(sim.zero_state(1), GateOp("ry", 0), np.pi / 2)
excited = sim.apply_gate(sim.zero_state(1), GateOp("ry", 0), np.pi)
print(f"  {'tg':>6s} {'P(excited)':>11s} {'|coherence|':>12s}")
for tg in (0.0, 10.0, 50.0, 100.0, 300.0):
    relaxed = sim.apply_channel(excited, spec(tg), 0)
    dephased = sim.apply_channel(superposition, spec(tg), 0)
    print(f"  {tg:6.0f} {relaxed[1, 1].real:11.4f} {abs(dephased[0, 1]):12.4f}")

print("\n=== Every channel is trace preserving (Kraus completeness) ===")
for name, s in [("bitflip", NoiseSpec("bitflip", p=0.3)),
                ("depolarizing", NoiseSpec("depolarizing", p=0.3)),
                ("thermal", NoiseSpec("thermal", t1=80.0, t2=120.0, tg=1.0))]:
    ops = sim.kraus_operators(s)
    print(f"  {name:14s}: {len(ops)} Kraus operators, "
          f"max|sum K^dag K - I| = {sim.kraus_completeness_defect(ops):.2e}")

print("\n=== Noise is applied per touched qubit after every gate ===")
noisy = NoiseSpec("depolarizing", p=0.05)
gates = [GateOp("ry", 0, param_slot=0), GateOp("cnot", target=1, control=0)]
out = sim.run_circuit(2, gates, [np.pi / 3], encoding_angles=[0.4, 1.1], noise=noisy)
print(f"  2-qubit circuit under p=0.05 depolarizing:")
print(f"  trace defect {sim.trace_defect(out):.2e}, purity {sim.purity(out):.4f} "
      f"(pure would be 1.0)")
