"""Deterministic graph families for experiments and cross-validation.

Every generator is a pure function of its parameters (including the seed
where one applies), so a spec names the graph reproducibly.  The
undirected-threshold family instantiates, as a bidirected digraph, the
classic sufficient profile for broadcast-style consensus on undirected
graphs — vertex connectivity at least ⌊3f/2⌋+1 with minimum degree at
least 2f — via a circulant ring with enough consecutive jumps.
"""

from __future__ import annotations

import random
from typing import Sequence

from .digraph import Digraph


def complete_bidirected(n: int) -> Digraph:
    """Every ordered pair of distinct nodes is an edge."""
    if n < 1:
        raise ValueError("node count must be positive")
    return Digraph(n, [(u, v) for u in range(n) for v in range(n) if u != v])


def directed_cycle(n: int) -> Digraph:
    """One directed ring 0 → 1 → … → n−1 → 0."""
    if n < 2:
        raise ValueError("a directed cycle needs at least 2 nodes")
    return Digraph(n, [(u, (u + 1) % n) for u in range(n)])


def random_digraph(n: int, p: float, seed: int = 0) -> Digraph:
    """Each ordered pair becomes an edge with probability ``p``.

    Pairs are examined in a fixed order, so the same (n, p, seed) always
    yields the same graph.
    """
    if n < 1:
        raise ValueError("node count must be positive")
    if not 0.0 <= p <= 1.0:
        raise ValueError("edge probability must lie in [0, 1]")
    rng = random.Random(seed)
    edges = [
        (u, v)
        for u in range(n)
        for v in range(n)
        if u != v and rng.random() < p
    ]
    return Digraph(n, edges)


def layered_dag(layer_sizes: Sequence[int], p: float = 1.0,
                seed: int = 0) -> Digraph:
    """Forward-edged DAG over consecutive layers.

    Nodes are numbered layer by layer.  Each consecutive-layer pair (u, v)
    becomes an edge with probability ``p``; afterwards every non-final
    node is guaranteed an out-edge and every non-initial node an in-edge,
    so the graph always flows start to end.
    """
    sizes = [int(s) for s in layer_sizes]
    if not sizes or any(s < 1 for s in sizes):
        raise ValueError("layer sizes must be positive")
    if not 0.0 <= p <= 1.0:
        raise ValueError("edge probability must lie in [0, 1]")
    rng = random.Random(seed)
    starts = [0]
    for size in sizes:
        starts.append(starts[-1] + size)
    edges: set[tuple[int, int]] = set()
    for layer in range(len(sizes) - 1):
        lo_a, hi_a = starts[layer], starts[layer + 1]
        lo_b, hi_b = starts[layer + 1], starts[layer + 2]
        for u in range(lo_a, hi_a):
            for v in range(lo_b, hi_b):
                if rng.random() < p:
                    edges.add((u, v))
        for u in range(lo_a, hi_a):
            if not any((u, v) in edges for v in range(lo_b, hi_b)):
                edges.add((u, rng.randrange(lo_b, hi_b)))
        for v in range(lo_b, hi_b):
            if not any((u, v) in edges for u in range(lo_a, hi_a)):
                edges.add((rng.randrange(lo_a, hi_a), v))
    return Digraph(starts[-1], sorted(edges))


def threshold_jumps(f: int) -> int:
    """Ring jumps needed for connectivity ⌊3f/2⌋+1 and degree 2f.

    A circulant with jumps 1..k is 2k-regular and 2k-connected, so k must
    cover half the connectivity bound and all of f.
    """
    if f < 1:
        raise ValueError("fault budget must be positive")
    connectivity = (3 * f) // 2 + 1
    return max(-(-connectivity // 2), f)


def undirected_threshold(n: int, f: int) -> Digraph:
    """Bidirected circulant meeting the undirected sufficiency profile."""
    k = threshold_jumps(f)
    if n < 2 * k + 1:
        raise ValueError(
            "need at least %d nodes for fault budget %d" % (2 * k + 1, f)
        )
    edges = set()
    for u in range(n):
        for jump in range(1, k + 1):
            v = (u + jump) % n
            edges.add((u, v))
            edges.add((v, u))
    return Digraph(n, sorted(edges))
