"""Layered ansatz search space: integer genomes <-> circuits, and cost.

A genome is a sequence of layer indices.  Each layer index encodes a
rotation-gate assignment (one of RX/RY/RZ per qubit, a base-3 number with
qubit 0 as the least-significant digit) and a CNOT subset (a bitmask over
the lexicographically ordered qubit pairs, lower index acting as control).
With Q qubits there are 3**Q rotation combinations and 2**(Q*(Q-1)/2)
entangler combinations per layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sim import GateOp

ROT_BY_DIGIT = ("rx", "ry", "rz")

Genome = tuple  # tuple[int, ...]; plain tuples keep genomes hashable


@dataclass(frozen=True)
class SearchSpaceDef:
    """Geometry of the layer space for a qubit count and depth range."""

    n_qubits: int
    min_layers: int
    max_layers: int

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("need at least one qubit")
        if not 1 <= self.min_layers <= self.max_layers:
            raise ValueError(f"invalid depth range [{self.min_layers}, {self.max_layers}]")

    @property
    def rot_combos(self) -> int:
        return 3 ** self.n_qubits

    @property
    def cnot_pairs(self) -> int:
        return self.n_qubits * (self.n_qubits - 1) // 2

    @property
    def layer_count(self) -> int:
        """Number of distinct layers, 3**Q * 2**(Q*(Q-1)/2)."""
        return self.rot_combos * (1 << self.cnot_pairs)

    @property
    def pair_list(self) -> tuple[tuple[int, int], ...]:
        n = self.n_qubits
        return tuple((i, j) for i in range(n) for j in range(i + 1, n))

    @property
    def max_slots(self) -> int:
        return self.n_qubits * self.max_layers


def decode_layer(gene: int, space: SearchSpaceDef):
    """Return (rotation kinds per qubit, CNOT (control, target) pairs)."""
    if not 0 <= gene < space.layer_count:
        raise ValueError(f"gene {gene} out of range [0, {space.layer_count})")
    mask_bits = space.cnot_pairs
    rot_index = gene >> mask_bits
    cnot_mask = gene & ((1 << mask_bits) - 1)
    rots = []
    for _ in range(space.n_qubits):
        rots.append(ROT_BY_DIGIT[rot_index % 3])
        rot_index //= 3
    cnots = tuple(pair for k, pair in enumerate(space.pair_list) if (cnot_mask >> k) & 1)
    return tuple(rots), cnots


def encode_layer(rotations: Sequence[str], cnots, space: SearchSpaceDef) -> int:
    """Inverse of :func:`decode_layer`."""
    if len(rotations) != space.n_qubits:
        raise ValueError(f"expected {space.n_qubits} rotation kinds, got {len(rotations)}")
    rot_index = 0
    for q in reversed(range(space.n_qubits)):
        rot_index = rot_index * 3 + ROT_BY_DIGIT.index(rotations[q])
    mask = 0
    pair_pos = {pair: k for k, pair in enumerate(space.pair_list)}
    for pair in cnots:
        mask |= 1 << pair_pos[tuple(pair)]
    return (rot_index << space.cnot_pairs) | mask


def validate_genome(genome: Sequence[int], space: SearchSpaceDef):
    if not space.min_layers <= len(genome) <= space.max_layers:
        raise ValueError(f"genome length {len(genome)} outside "
                         f"[{space.min_layers}, {space.max_layers}]")
    for g in genome:
        if not 0 <= g < space.layer_count:
            raise ValueError(f"gene {g} out of range [0, {space.layer_count})")


def genome_to_circuit(genome: Sequence[int], space: SearchSpaceDef) -> list[GateOp]:
    """Expand a genome into gates with parameter slots Q*layer + qubit."""
    validate_genome(genome, space)
    gates = []
    slot = 0
    for gene in genome:
        rots, cnots = decode_layer(gene, space)
        for q, kind in enumerate(rots):
            gates.append(GateOp(kind, target=q, param_slot=slot))
            slot += 1
        for control, target in cnots:
            gates.append(GateOp("cnot", target=target, control=control))
    return gates


@dataclass(frozen=True)
class CostMetrics:
    n_cnot: int
    n_depth: int
    cost: float


def cost_of(genome: Sequence[int], space: SearchSpaceDef,
            alpha: float = 1.0, beta: float = 1.0) -> CostMetrics:
    """Hardware cost alpha * CNOT count + beta * layer count.

    Depth counts ansatz layers only; the data-encoding layer is excluded.
    """
    validate_genome(genome, space)
    mask = (1 << space.cnot_pairs) - 1
    n_cnot = sum(int(g & mask).bit_count() for g in genome)
    n_depth = len(genome)
    return CostMetrics(n_cnot=n_cnot, n_depth=n_depth,
                       cost=alpha * n_cnot + beta * n_depth)


def random_genome(space: SearchSpaceDef, rng: np.random.Generator) -> Genome:
    """Uniform length in the depth range, then uniform genes per layer."""
    length = int(rng.integers(space.min_layers, space.max_layers + 1))
    return tuple(int(g) for g in rng.integers(0, space.layer_count, size=length))


def parse_genome(text: str) -> Genome:
    """Parse a comma-separated gene list; report the offending token on error."""
    genes = []
    for pos, token in enumerate(text.split(",")):
        stripped = token.strip()
        if not stripped or not (stripped.isdigit() or
                                (stripped[0] == "-" and stripped[1:].isdigit())):
            raise ValueError(f"malformed genome: token {pos} ({token!r}) is not an integer")
        genes.append(int(stripped))
    return tuple(genes)


def format_genome(genome: Sequence[int]) -> str:
    return ",".join(str(g) for g in genome)
