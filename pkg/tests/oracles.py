"""Brute-force reference implementations used to pin expected values.

Everything in this module trades efficiency for obviousness: exhaustive
enumeration and direct transcription of the definitions.  Nothing here
shares a code path with the package beyond the ``Digraph`` container
itself, so agreement between the two routes is meaningful evidence.
"""

from __future__ import annotations

import itertools
import math
import random
from typing import Iterable, Iterator

from byzcast.digraph import Digraph
from byzcast import flooding
from byzcast.flooding import flood_init, flood_receive

# ---------------------------------------------------------------------------
# simple-path enumeration and exact disjoint-path packing


def all_simple_paths(
    g: Digraph,
    sources: Iterable[int],
    target: int,
    excluded: Iterable[int] = (),
) -> list[tuple[int, ...]]:
    """Every simple path from any source to ``target`` avoiding ``excluded``
    internally.

    A path's first node may lie in ``excluded`` (only interior nodes are
    constrained), matching the path-exclusion convention used throughout
    the package.
    """
    src = sorted(set(sources))
    banned = set(excluded)
    out: list[tuple[int, ...]] = []

    def extend(path: list[int], seen: set[int]) -> None:
        u = path[-1]
        for w in g.out(u):
            if w in seen:
                continue
            if w == target:
                out.append(tuple(path) + (target,))
                continue
            if w in banned:
                continue
            path.append(w)
            seen.add(w)
            extend(path, seen)
            seen.remove(w)
            path.pop()

    for s in src:
        if s == target:
            continue
        extend([s], {s})
    return out


def max_disjoint_paths(
    g: Digraph,
    sources: Iterable[int],
    target: int,
    excluded: Iterable[int] = (),
) -> int | float:
    """Exact maximum number of source→target paths sharing only ``target``.

    Computed by exhaustive take/skip search over the full simple-path
    list; exponential, intended for tiny graphs only.  Mirrors the
    convention of the fast implementation: a target that is itself a
    source yields ``math.inf``.
    """
    srcs = set(sources)
    if target in srcs:
        return math.inf
    paths = all_simple_paths(g, srcs, target, excluded)
    # Footprint of each path with the shared terminal removed; two paths
    # are compatible iff their footprints are disjoint (this also forces
    # distinct first nodes).
    masks = sorted(
        set(
            sum(1 << u for u in p if u != target)
            for p in paths
        )
    )

    best = 0

    def search(i: int, used: int, size: int) -> None:
        nonlocal best
        if size > best:
            best = size
        if size + (len(masks) - i) <= best:
            return
        for j in range(i, len(masks)):
            if masks[j] & used == 0:
                search(j + 1, used | masks[j], size + 1)

    search(0, 0, 0)
    return best


# ---------------------------------------------------------------------------
# strongly connected components by pairwise reachability


def reachable_from(g: Digraph, start: int) -> set[int]:
    seen = {start}
    frontier = [start]
    while frontier:
        u = frontier.pop()
        for w in g.out(u):
            if w not in seen:
                seen.add(w)
                frontier.append(w)
    return seen


def scc_partition(g: Digraph, within: Iterable[int] | None = None) -> list[tuple[int, ...]]:
    """SCCs of the induced subgraph on ``within``, sorted by smallest member."""
    nodes = sorted(g.nodes() if within is None else set(within))
    node_set = set(nodes)
    reach = {
        u: {w for w in _restricted_reach(g, u, node_set)}
        for u in nodes
    }
    comps: list[tuple[int, ...]] = []
    assigned: set[int] = set()
    for u in nodes:
        if u in assigned:
            continue
        comp = tuple(sorted(w for w in nodes if u in reach[w] and w in reach[u]))
        assigned.update(comp)
        comps.append(comp)
    return sorted(comps, key=lambda c: c[0])


def _restricted_reach(g: Digraph, start: int, allowed: set[int]) -> set[int]:
    seen = {start}
    frontier = [start]
    while frontier:
        u = frontier.pop()
        for w in g.out(u):
            if w in allowed and w not in seen:
                seen.add(w)
                frontier.append(w)
    return seen


def source_components_oracle(
    g: Digraph, within: Iterable[int] | None = None
) -> list[tuple[int, ...]]:
    """Components with no incoming edge from a different component."""
    comps = scc_partition(g, within)
    owner: dict[int, int] = {}
    for i, comp in enumerate(comps):
        for u in comp:
            owner[u] = i
    allowed = set(owner)
    sources = []
    for i, comp in enumerate(comps):
        incoming = any(
            owner[u] != i
            for v in comp
            for u in g.inn(v)
            if u in allowed
        )
        if not incoming:
            sources.append(comp)
    return sources


# ---------------------------------------------------------------------------
# condition checks straight from the definitions


def adjacent_oracle(g: Digraph, senders: set[int], receivers: set[int], f: int) -> bool:
    hood = {u for u in senders if any(g.has_edge(u, v) for v in receivers)}
    return len(hood) > f


def propagates_oracle(
    g: Digraph, senders: set[int], receivers: set[int], excluded: set[int], f: int
) -> bool:
    if not senders:
        return False
    return all(
        max_disjoint_paths(g, senders, v, excluded) >= f + 1
        for v in receivers
    )


def sc_param_oracle(g: Digraph, fault_set: set[int], f: int) -> bool:
    """Every two-set partition propagates one way or the other."""
    rest = sorted(g.nodes())
    for bits in range(1, 2 ** g.n - 1):
        side_a = {u for u in rest if bits >> u & 1}
        side_b = set(rest) - side_a
        if not side_a - fault_set or not side_b - fault_set:
            continue
        ok = propagates_oracle(g, side_a, side_b - fault_set, fault_set, f) or \
            propagates_oracle(g, side_b, side_a - fault_set, fault_set, f)
        if not ok:
            return False
    return True


def nc_param_oracle(g: Digraph, fault_set: set[int], f: int) -> bool:
    """Every three-set partition has a big-enough in-neighborhood one way."""
    for assignment in itertools.product((0, 1, 2), repeat=g.n):
        left = {u for u in g.nodes() if assignment[u] == 0}
        mid = {u for u in g.nodes() if assignment[u] == 1}
        right = {u for u in g.nodes() if assignment[u] == 2}
        if not left - fault_set or not right - fault_set:
            continue
        ok = (
            adjacent_oracle(g, right | mid, left - fault_set, f)
            or adjacent_oracle(g, left | mid, right - fault_set, f)
        )
        if not ok:
            return False
    return True


def condition_oracle(g: Digraph, f: int, which: str) -> bool:
    per_param = sc_param_oracle if which == "sc" else nc_param_oracle
    nodes = sorted(g.nodes())
    for k in range(f + 1):
        for combo in itertools.combinations(nodes, k):
            if not per_param(g, set(combo), f):
                return False
    return True


# ---------------------------------------------------------------------------
# graph enumeration / sampling helpers for sweep-style tests


def all_digraphs(n: int) -> Iterator[Digraph]:
    """Every simple digraph on ``n`` nodes, in edge-bitmask order."""
    slots = [(u, v) for u in range(n) for v in range(n) if u != v]
    for bits in range(2 ** len(slots)):
        yield Digraph(n, [e for i, e in enumerate(slots) if bits >> i & 1])


def random_digraph(n: int, p: float, rng: random.Random) -> Digraph:
    edges = [
        (u, v)
        for u in range(n)
        for v in range(n)
        if u != v and rng.random() < p
    ]
    return Digraph(n, edges)


# ---------------------------------------------------------------------------
# whole-network flooding by the single-node reference semantics

DECISION_INDEX = {
    flooding.MALFORMED: 0,
    flooding.INVALID_PATH: 1,
    flooding.DUPLICATE: 2,
    flooding.OWN_NODE: 3,
    flooding.ACCEPT: 4,
}


def receive_raw(g, state, sender, value, code):
    """Reference receive for a raw (value, code) wire pair.

    Codes with no decodable node sequence are malformed outright; the rest
    go through flood_receive as ordinary messages.
    """
    if not isinstance(code, int) or code < flooding.EMPTY_CODE:
        return flooding.MALFORMED
    bits = code.bit_length() - 1
    if bits % 4 or bits > 4 * flooding.MAX_FLOOD_NODE:
        return flooding.MALFORMED
    message = flooding.FloodMessage(value, flooding.decode_path(code))
    return flood_receive(g, state, sender, message)


def flood_network_reference(g, init_nodes, gammas, faulty=(), overrides=None, rounds=None):
    """Drive one flood over the whole graph with the reference functions.

    ``overrides`` maps (round, node) to the bundle a corrupted node emits
    that round; corrupted nodes' honest outboxes are computed (shadow) but
    never sent.  Returns (records_by_node, trace) with trace tuples shaped
    exactly like the batched engine's.
    """
    faulty = set(faulty)
    overrides = overrides or {}
    rounds = g.n if rounds is None else rounds
    init_mask = sum(1 << v for v in init_nodes)
    states = [flooding.FloodState(v) for v in range(g.n)]
    for v in range(g.n):
        if (init_mask >> v) & 1:
            flood_init(states[v], gammas[v])
    trace = []
    round1_senders = set()
    for rnd in range(1, rounds + 1):
        emissions = []
        for u in range(g.n):
            if u in faulty:
                bundle = [(int(v), int(c)) for (v, c) in overrides.get((rnd, u), ())]
            else:
                bundle = [(m.value, m.code) for m in states[u].outbox]
            states[u].outbox = []
            if bundle:
                emissions.append((u, bundle))
                # Garbage without a well-formed initiation (b, empty path)
                # does not count as flooding; receivers still substitute.
                if rnd == 1 and any(
                    value in (0, 1) and code == flooding.EMPTY_CODE
                    for value, code in bundle
                ):
                    round1_senders.add(u)
                for value, code in bundle:
                    trace.append(("emit", rnd, u, value, code))
        for u, bundle in emissions:
            for value, code in bundle:
                for v in g.out(u):
                    decision = receive_raw(g, states[v], u, value, code)
                    full = 0
                    if decision == flooding.ACCEPT:
                        full = flooding.path_code(
                            flooding.decode_path(code) + (u, v)
                        )
                    trace.append(
                        ("recv", rnd, u, v, value, code,
                         DECISION_INDEX[decision], full, 0)
                    )
        if rnd == 1:
            for v in range(g.n):
                for u in sorted(g.inn(v)):
                    if (init_mask >> u) & 1 and u not in round1_senders:
                        decision = receive_raw(
                            g, states[v], u,
                            flooding.DEFAULT_VALUE, flooding.EMPTY_CODE,
                        )
                        full = 0
                        if decision == flooding.ACCEPT:
                            full = flooding.path_code((u, v))
                        trace.append(
                            ("recv", rnd, u, v,
                             flooding.DEFAULT_VALUE, flooding.EMPTY_CODE,
                             DECISION_INDEX[decision], full, 1)
                        )
    return [dict(states[v].records) for v in range(g.n)], trace
