"""Genome codec tests: decode/encode bijection, circuit expansion, cost."""

import numpy as np
import pytest

from naqas.space import (CostMetrics, SearchSpaceDef, cost_of, decode_layer,
                         encode_layer, format_genome, genome_to_circuit,
                         parse_genome, random_genome, validate_genome)

SPACE3 = SearchSpaceDef(3, 5, 10)
SPACE4 = SearchSpaceDef(4, 5, 10)


class TestSpaceGeometry:
    def test_cardinality(self):
        assert SPACE3.rot_combos == 27
        assert SPACE3.cnot_pairs == 3
        assert SPACE3.layer_count == 216          # 3**3 * 2**3
        assert SPACE4.layer_count == 5184         # 3**4 * 2**6
        assert SearchSpaceDef(1, 1, 2).layer_count == 3

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            SearchSpaceDef(3, 0, 5)
        with pytest.raises(ValueError):
            SearchSpaceDef(3, 6, 5)


class TestLayerCodec:
    def test_gene_zero(self):
        rots, cnots = decode_layer(0, SPACE3)
        assert rots == ("rx", "rx", "rx")
        assert cnots == ()

    def test_gene_max(self):
        rots, cnots = decode_layer(215, SPACE3)
        assert rots == ("rz", "rz", "rz")
        assert cnots == ((0, 1), (0, 2), (1, 2))

    def test_digit_order(self):
        # rot_index 1 = digit (1,0,0): qubit 0 is the least significant digit
        gene = 1 << SPACE3.cnot_pairs
        rots, cnots = decode_layer(gene, SPACE3)
        assert rots == ("ry", "rx", "rx")
        assert cnots == ()

    def test_mask_order(self):
        rots, cnots = decode_layer(0b001, SPACE3)
        assert cnots == ((0, 1),)
        _, cnots = decode_layer(0b100, SPACE3)
        assert cnots == ((1, 2),)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            decode_layer(216, SPACE3)
        with pytest.raises(ValueError):
            decode_layer(-1, SPACE3)

    def test_roundtrip_exhaustive_small_q(self):
        for space in (SearchSpaceDef(1, 1, 3), SearchSpaceDef(2, 1, 3), SPACE3):
            for gene in range(space.layer_count):
                rots, cnots = decode_layer(gene, space)
                assert encode_layer(rots, cnots, space) == gene

    def test_roundtrip_random_q4(self):
        rng = np.random.default_rng(0)
        for gene in rng.integers(0, SPACE4.layer_count, size=10_000):
            rots, cnots = decode_layer(int(gene), SPACE4)
            assert encode_layer(rots, cnots, SPACE4) == gene


class TestGenomeToCircuit:
    def test_single_all_rx_layer(self):
        gates = genome_to_circuit([0] * 5, SPACE3)
        first = gates[:3]
        assert [g.kind for g in first] == ["rx", "rx", "rx"]
        assert [g.param_slot for g in first] == [0, 1, 2]
        assert sum(g.kind == "cnot" for g in gates) == 0
        assert len(gates) == 15

    def test_two_full_layers_in_relaxed_space(self):
        # two maximal layers: 6 rotations, 6 cnots, 6 parameter slots
        space = SearchSpaceDef(3, 1, 10)
        gates = genome_to_circuit([215, 215], space)
        assert sum(g.kind != "cnot" for g in gates) == 6
        assert sum(g.kind == "cnot" for g in gates) == 6
        assert [g.param_slot for g in gates if g.param_slot is not None] == list(range(6))

    def test_full_layers(self):
        gates = genome_to_circuit([215] * 5, SPACE3)
        rotations = [g for g in gates if g.kind != "cnot"]
        cnots = [g for g in gates if g.kind == "cnot"]
        assert len(rotations) == 15 and len(cnots) == 15
        assert all(g.kind == "rz" for g in rotations)
        # slots are contiguous, qubit order inside each layer
        assert [g.param_slot for g in rotations] == list(range(15))
        # cnot direction: control < target
        assert all(g.control < g.target for g in cnots)

    def test_param_count(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            genome = random_genome(SPACE4, rng)
            gates = genome_to_circuit(genome, SPACE4)
            slots = [g.param_slot for g in gates if g.param_slot is not None]
            assert slots == list(range(4 * len(genome)))

    def test_layer_gate_order(self):
        # rotations come before the layer's entanglers
        gates = genome_to_circuit([215, 0, 0, 0, 0], SPACE3)
        kinds = [g.kind for g in gates[:6]]
        assert kinds == ["rz", "rz", "rz", "cnot", "cnot", "cnot"]

    def test_bounds_enforced(self):
        with pytest.raises(ValueError):
            genome_to_circuit([0, 0], SPACE3)          # too short
        with pytest.raises(ValueError):
            genome_to_circuit([0] * 11, SPACE3)        # too long
        with pytest.raises(ValueError):
            genome_to_circuit([216, 0, 0, 0, 0], SPACE3)


class TestCost:
    def test_no_cnots(self):
        metrics = cost_of([0, 0, 0, 0, 0], SPACE3, alpha=1.0, beta=1.0)
        assert metrics == CostMetrics(n_cnot=0, n_depth=5, cost=5.0)

    def test_table_style_resource_row(self):
        # eight layers at Q=4 whose masks popcount-sum to 26 CNOTs, the
        # resource profile of the strongest reported 4-qubit architecture
        masks = [0b111111, 0b111111, 0b111111, 0b111111, 0b000001, 0b000001, 0b000000, 0b000000]
        assert sum(m.bit_count() for m in masks) == 26
        metrics = cost_of(masks, SPACE4)
        assert (metrics.n_cnot, metrics.n_depth) == (26, 8)
        assert metrics.cost == 34.0

    def test_weight_degeneracy(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            genome = random_genome(SPACE3, rng)
            m = cost_of(genome, SPACE3, alpha=1.0, beta=0.0)
            assert m.cost == m.n_cnot

    def test_monotone_in_layers(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            genome = list(random_genome(SPACE3, rng))[:7]
            genome = genome + [0] * max(0, 5 - len(genome))
            base = cost_of(genome, SPACE3, alpha=0.7, beta=1.3).cost
            longer = cost_of(genome + [int(rng.integers(216))], SPACE3, 0.7, 1.3).cost
            assert longer >= base


class TestGenomeText:
    def test_roundtrip(self):
        genome = (5, 12, 88, 0, 215)
        assert parse_genome(format_genome(genome)) == genome

    def test_malformed_reports_position(self):
        with pytest.raises(ValueError, match="token 2"):
            parse_genome("5,12,eight,0,215")

    def test_random_genomes_within_bounds(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            genome = random_genome(SPACE4, rng)
            validate_genome(genome, SPACE4)
