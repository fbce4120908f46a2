"""Graph family generators: shapes, determinism, and threshold claims."""

from __future__ import annotations

import pytest

from byzcast import generators
from byzcast.conditions import check_sc
from byzcast.digraph import Digraph


class TestCompleteBidirected:
    def test_edge_count(self):
        g = generators.complete_bidirected(4)
        assert g.n == 4
        assert len(g.edges) == 12

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            generators.complete_bidirected(0)


class TestDirectedCycle:
    def test_shape(self):
        g = generators.directed_cycle(5)
        assert len(g.edges) == 5
        assert all(g.has_edge(u, (u + 1) % 5) for u in range(5))

    def test_rejects_single_node(self):
        with pytest.raises(ValueError):
            generators.directed_cycle(1)


class TestRandomDigraph:
    def test_deterministic_under_seed(self):
        a = generators.random_digraph(6, 0.5, seed=7)
        b = generators.random_digraph(6, 0.5, seed=7)
        assert a == b

    def test_seed_changes_graph(self):
        a = generators.random_digraph(8, 0.5, seed=1)
        b = generators.random_digraph(8, 0.5, seed=2)
        assert a != b

    def test_probability_extremes(self):
        assert len(generators.random_digraph(5, 0.0).edges) == 0
        assert len(generators.random_digraph(5, 1.0).edges) == 20

    def test_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            generators.random_digraph(5, 1.5)


class TestLayeredDag:
    def test_full_density_connects_layers(self):
        g = generators.layered_dag((2, 3, 1))
        assert g.n == 6
        assert all(g.has_edge(u, v) for u in (0, 1) for v in (2, 3, 4))
        assert all(g.has_edge(u, 5) for u in (2, 3, 4))

    def test_every_node_stays_on_a_path(self):
        g = generators.layered_dag((3, 3, 3), p=0.1, seed=5)
        for u in range(6):
            assert g.out(u), "node %d has no out-edge" % u
        for v in range(3, 9):
            assert g.inn(v), "node %d has no in-edge" % v

    def test_edges_only_point_forward(self):
        g = generators.layered_dag((2, 2, 2), p=0.6, seed=3)
        layer = {0: 0, 1: 0, 2: 1, 3: 1, 4: 2, 5: 2}
        assert all(layer[v] == layer[u] + 1 for u, v in g.edges)

    def test_deterministic_under_seed(self):
        a = generators.layered_dag((3, 4), p=0.4, seed=9)
        b = generators.layered_dag((3, 4), p=0.4, seed=9)
        assert a == b

    def test_rejects_empty_layers(self):
        with pytest.raises(ValueError):
            generators.layered_dag(())


class TestUndirectedThreshold:
    def test_jump_counts(self):
        assert generators.threshold_jumps(1) == 1
        assert generators.threshold_jumps(2) == 2
        assert generators.threshold_jumps(3) == 3
        assert generators.threshold_jumps(4) == 4

    def test_instance_is_bidirected_and_regular(self):
        g = generators.undirected_threshold(6, 1)
        assert all(g.has_edge(v, u) for u, v in g.edges)
        assert all(len(g.out(u)) == 2 for u in range(6))

    def test_instances_satisfy_the_structural_condition(self):
        for n, f in ((5, 1), (6, 1), (7, 1), (7, 2)):
            g = generators.undirected_threshold(n, f)
            assert check_sc(g, f).holds, (n, f)

    def test_rejects_too_few_nodes(self):
        with pytest.raises(ValueError):
            generators.undirected_threshold(2, 1)
