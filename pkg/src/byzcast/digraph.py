"""Directed-graph core: small dense digraphs over integer node ids.

Nodes are always ``0..n-1``. Node sets are passed around as iterables at the
API boundary and as bitmasks internally (bit ``i`` is node ``i``), which keeps
the brute-force sweeps over subsets cheap and the iteration order canonical
(ascending id everywhere).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

NodeId = int
Path = tuple[NodeId, ...]

_INF = math.inf


def mask_from(nodes: Iterable[NodeId]) -> int:
    """Pack an iterable of node ids into a bitmask."""
    m = 0
    for u in nodes:
        m |= 1 << u
    return m


def mask_nodes(mask: int) -> tuple[NodeId, ...]:
    """Unpack a bitmask into ascending node ids."""
    out = []
    u = 0
    while mask:
        if mask & 1:
            out.append(u)
        mask >>= 1
        u += 1
    return tuple(out)


class Digraph:
    """Immutable simple digraph on nodes ``0..n-1`` (no self-loops)."""

    __slots__ = ("n", "edges", "_out", "_in", "_out_mask", "_in_mask")

    def __init__(self, n: int, edges: Iterable[tuple[NodeId, NodeId]]) -> None:
        if n < 1:
            raise ValueError("need at least one node, got n=%d" % n)
        edge_set = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError("edge (%r, %r) out of range for n=%d" % (u, v, n))
            if u == v:
                raise ValueError("self-loop (%d, %d) not allowed" % (u, v))
            edge_set.add((u, v))
        self.n = n
        self.edges = frozenset(edge_set)
        out: list[list[int]] = [[] for _ in range(n)]
        inn: list[list[int]] = [[] for _ in range(n)]
        for u, v in edge_set:
            out[u].append(v)
            inn[v].append(u)
        self._out = tuple(tuple(sorted(vs)) for vs in out)
        self._in = tuple(tuple(sorted(us)) for us in inn)
        self._out_mask = tuple(mask_from(vs) for vs in self._out)
        self._in_mask = tuple(mask_from(us) for us in self._in)

    # -- basic queries ----------------------------------------------------

    def out(self, u: NodeId) -> tuple[NodeId, ...]:
        """Out-neighbors of u, ascending."""
        return self._out[u]

    def inn(self, u: NodeId) -> tuple[NodeId, ...]:
        """In-neighbors of u, ascending."""
        return self._in[u]

    def out_mask(self, u: NodeId) -> int:
        return self._out_mask[u]

    def in_mask(self, u: NodeId) -> int:
        return self._in_mask[u]

    def has_edge(self, u: NodeId, v: NodeId) -> bool:
        return (u, v) in self.edges

    def nodes(self) -> range:
        return range(self.n)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Digraph)
            and self.n == other.n
            and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return "Digraph(n=%d, edges=%d)" % (self.n, len(self.edges))


def is_path(g: Digraph, seq: Iterable[NodeId]) -> bool:
    """True iff seq is a path of g: distinct nodes, consecutive pairs edges.

    A single node is a path; the empty sequence is not.
    """
    nodes = tuple(seq)
    if not nodes:
        return False
    if any(not (0 <= u < g.n) for u in nodes):
        return False
    if len(set(nodes)) != len(nodes):
        return False
    return all(g.has_edge(a, b) for a, b in zip(nodes, nodes[1:]))


# -- derived graphs -------------------------------------------------------


def induced(g: Digraph, nodes: Iterable[NodeId]) -> Digraph:
    """Subgraph keeping only edges with both endpoints in ``nodes``.

    The node universe stays 0..n-1 (ids are stable); nodes outside the set
    are simply isolated.
    """
    keep = mask_from(nodes)
    edges = [(u, v) for (u, v) in g.edges if (keep >> u) & 1 and (keep >> v) & 1]
    return Digraph(g.n, edges)


def strip_incoming(g: Digraph, blocked: Iterable[NodeId]) -> Digraph:
    """Remove every edge that points *into* a blocked node.

    Paths of the result are exactly the paths of g that end outside
    ``blocked`` and use no blocked node internally (blocked sources are still
    allowed: their outgoing edges survive).
    """
    bmask = mask_from(blocked)
    edges = [(u, v) for (u, v) in g.edges if not (bmask >> v) & 1]
    return Digraph(g.n, edges)


def in_neighborhood(
    g: Digraph, senders: Iterable[NodeId], receivers: Iterable[NodeId]
) -> frozenset[NodeId]:
    """Members of ``senders`` with at least one edge into ``receivers``."""
    rmask = mask_from(receivers)
    return frozenset(u for u in senders if g.out_mask(u) & rmask)


# -- strongly connected components ---------------------------------------


@dataclass(frozen=True)
class Condensation:
    """SCC decomposition restricted to a node subset.

    components are sorted tuples of node ids, ordered by smallest member;
    component_of maps a node to its component index (-1 outside the
    restriction); dag_out is the acyclic contracted adjacency.
    """

    components: tuple[tuple[NodeId, ...], ...]
    component_of: tuple[int, ...]
    dag_out: tuple[tuple[int, ...], ...]

    def source_indices(self) -> tuple[int, ...]:
        """Indices of components with no incoming contracted edge."""
        has_in = [False] * len(self.components)
        for ci, outs in enumerate(self.dag_out):
            for cj in outs:
                if cj != ci:
                    has_in[cj] = True
        return tuple(ci for ci in range(len(self.components)) if not has_in[ci])


def condense(g: Digraph, within: Iterable[NodeId] | None = None) -> Condensation:
    """Tarjan SCC over the subgraph induced by ``within`` (default: all nodes)."""
    wmask = (1 << g.n) - 1 if within is None else mask_from(within)
    index_of: dict[int, int] = {}
    lowlink: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    next_index = 0
    raw_components: list[list[int]] = []

    for root in range(g.n):
        if not (wmask >> root) & 1 or root in index_of:
            continue
        # Iterative Tarjan: (node, iterator position) work list.
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index_of[v] = lowlink[v] = next_index
                next_index += 1
                stack.append(v)
                on_stack.add(v)
            advanced = False
            nbrs = g.out(v)
            while pi < len(nbrs):
                w = nbrs[pi]
                pi += 1
                if not (wmask >> w) & 1:
                    continue
                if w not in index_of:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index_of[w])
            if advanced:
                continue
            work.pop()
            if lowlink[v] == index_of[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                raw_components.append(sorted(comp))
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])

    raw_components.sort(key=lambda comp: comp[0])
    component_of = [-1] * g.n
    for ci, comp in enumerate(raw_components):
        for u in comp:
            component_of[u] = ci
    dag_sets: list[set[int]] = [set() for _ in raw_components]
    for u, v in g.edges:
        cu, cv = component_of[u], component_of[v]
        if cu >= 0 and cv >= 0 and cu != cv:
            dag_sets[cu].add(cv)
    return Condensation(
        components=tuple(tuple(c) for c in raw_components),
        component_of=tuple(component_of),
        dag_out=tuple(tuple(sorted(s)) for s in dag_sets),
    )


def source_components(
    g: Digraph, within: Iterable[NodeId] | None = None
) -> tuple[tuple[NodeId, ...], ...]:
    """Components of the condensation with no incoming contracted edge."""
    cond = condense(g, within)
    return tuple(cond.components[ci] for ci in cond.source_indices())


# -- shortest paths with exclusion ----------------------------------------


def find_path_excluding(
    g: Digraph, u: NodeId, v: NodeId, excluded: Iterable[NodeId]
) -> Path | None:
    """Shortest u→v path avoiding ``excluded`` internally and terminally.

    Ties break to the lexicographically smallest node sequence. The source may
    itself be excluded (only edges *into* excluded nodes are blocked).
    Returns the trivial path (v,) when u == v, None when no path exists.
    """
    if u == v:
        return (v,)
    xmask = mask_from(excluded)
    if (xmask >> v) & 1:
        return None
    # Backward BFS from v over edges not entering an excluded node.
    dist = [-1] * g.n
    dist[v] = 0
    frontier = [v]
    while frontier:
        nxt = []
        for w in frontier:
            for p in g.inn(w):
                if dist[p] < 0 and not (xmask >> w) & 1:
                    dist[p] = dist[w] + 1
                    nxt.append(p)
        frontier = nxt
    if dist[u] < 0:
        return None
    # Greedy forward walk: smallest next node on some shortest path.
    path = [u]
    cur = u
    while cur != v:
        step = None
        for w in g.out(cur):
            if (xmask >> w) & 1:
                continue
            if dist[w] == dist[cur] - 1:
                step = w
                break
        assert step is not None, "BFS distances inconsistent"
        path.append(step)
        cur = step
    return tuple(path)


# -- vertex-disjoint path counting (Menger via unit-capacity max-flow) ----


def count_disjoint_paths(
    g: Digraph,
    sources: Iterable[NodeId],
    target: NodeId,
    excluded: Iterable[NodeId] = (),
    limit: int | None = None,
) -> int | float:
    """Maximum number of sources→target paths sharing only the target.

    Paths must have distinct sources (a node is used by at most one path,
    target aside) and no internal node in ``excluded``; sources may lie in
    ``excluded``. Returns math.inf when the target is itself a source (the
    trivial path makes any demand satisfiable). With ``limit`` the search
    stops early once that many paths are found.
    """

    smask = mask_from(sources)
    xmask = mask_from(excluded)
    if not 0 <= target < g.n:
        raise ValueError("target %r out of range" % (target,))
    if (xmask >> target) & 1:
        raise ValueError("target %d is excluded" % target)
    if smask == 0:
        return 0
    if (smask >> target) & 1:
        return _INF
    cap = g.n if limit is None else min(limit, g.n)
    from . import kernels

    return kernels.impl.count_vertex_disjoint(
        g.n, g._out_mask, smask, target, xmask, cap
    )


def disjoint_path_witnesses(
    g: Digraph,
    sources: Iterable[NodeId],
    target: NodeId,
    excluded: Iterable[NodeId] = (),
) -> tuple[Path, ...]:
    """A maximum family of disjoint paths realizing count_disjoint_paths.

    Deterministic: augmentation in ascending-id order, decomposition from the
    smallest source up. Target-in-sources yields the trivial path only.
    """
    smask = mask_from(sources)
    xmask = mask_from(excluded)
    if (xmask >> target) & 1:
        raise ValueError("target %d is excluded" % target)
    if (smask >> target) & 1:
        return ((target,),)
    flow = _vertex_disjoint_flow(g.n, g._out_mask, smask, target, xmask, g.n)
    used_next = flow.next_hop
    entered = {w for w in used_next.values()}
    paths = []
    # A source originates a path iff it carries flow it was not routed into.
    for s in mask_nodes(smask):
        if flow.split_used[s] and s not in entered:
            path = [s]
            cur = s
            while cur != target:
                cur = used_next[cur]
                path.append(cur)
            paths.append(tuple(path))
    return tuple(paths)


def separating_cut(
    g: Digraph,
    sources: Iterable[NodeId],
    target: NodeId,
    excluded: Iterable[NodeId] = (),
) -> tuple[NodeId, ...]:
    """A minimum vertex set whose removal severs all counted paths.

    Its size equals count_disjoint_paths (Menger); nodes come back sorted.
    Undefined when the target is a source (raises: no finite cut exists).
    """
    smask = mask_from(sources)
    xmask = mask_from(excluded)
    if (smask >> target) & 1:
        raise ValueError("no finite cut: target is a source")
    if (xmask >> target) & 1:
        raise ValueError("target %d is excluded" % target)
    flow = _vertex_disjoint_flow(g.n, g._out_mask, smask, target, xmask, g.n)
    return tuple(flow.min_cut())


class _SplitFlow:
    """Unit-capacity flow state on the vertex-split graph (pure Python).

    Split node u into u_in=2u, u_out=2u+1 with a capacity-1 arc between; graph
    arcs u_out→w_in. The target is entered at target_in and never split.
    Edmonds-Karp with ascending-id BFS keeps everything deterministic.
    """

    def __init__(
        self,
        n: int,
        out_masks: tuple[int, ...],
        source_mask: int,
        target: int,
        excluded_mask: int,
    ) -> None:
        self.n = n
        self.out_masks = out_masks
        self.source_mask = source_mask
        self.target = target
        self.excluded_mask = excluded_mask
        self.split_used = [False] * n  # flow through u_in→u_out
        self.arc_used: set[tuple[int, int]] = set()  # graph arcs carrying flow
        self.value = 0

    # Only split arcs are capacitated (1 each). Graph arcs behave as infinite
    # capacity: per-arc flow can never exceed 1 anyway (the tail's split arc
    # bounds it), and unlimited residuals guarantee the min cut crosses split
    # arcs only, which is what makes cut extraction a plain node set.

    def _bfs_augment(self) -> bool:
        n = self.n
        # State: ('in', u) or ('out', u); parent pointers for path recovery.
        parent: dict[tuple[str, int], tuple[str, int] | None] = {}
        queue: list[tuple[str, int]] = []
        for s in range(n):
            if (self.source_mask >> s) & 1:
                parent[("in", s)] = None
                queue.append(("in", s))
        qi = 0
        goal = ("in", self.target)
        while qi < len(queue):
            side, u = queue[qi]
            qi += 1
            if (side, u) == goal:
                break
            if side == "in":
                # forward through the split arc, or cancel an incoming graph arc
                if not self.split_used[u]:
                    st = ("out", u)
                    if st not in parent:
                        parent[st] = (side, u)
                        queue.append(st)
                for p in range(n):
                    if (p, u) in self.arc_used:
                        st = ("out", p)
                        if st not in parent:
                            parent[st] = (side, u)
                            queue.append(st)
            else:
                # forward graph arcs; skip arcs into excluded nodes
                mm = self.out_masks[u] & ~self.excluded_mask
                w = 0
                while mm:
                    if mm & 1:
                        st = ("in", w)
                        if st not in parent:
                            parent[st] = (side, u)
                            queue.append(st)
                    mm >>= 1
                    w += 1
                # cancel the split arc
                if self.split_used[u]:
                    st = ("in", u)
                    if st not in parent:
                        parent[st] = (side, u)
                        queue.append(st)
        if goal not in parent:
            return False
        # Walk back, toggling arcs.
        cur = goal
        prev = parent[cur]
        while prev is not None:
            (pside, pu), (cside, cu) = prev, cur
            if pside == "in" and cside == "out" and pu == cu:
                self.split_used[pu] = True
            elif pside == "out" and cside == "in" and pu == cu:
                self.split_used[pu] = False
            elif pside == "out" and cside == "in":
                self.arc_used.add((pu, cu))
            else:  # ('in', x) → ('out', p): cancel the used arc (p, x)
                self.arc_used.discard((cu, pu))
            cur = prev
            prev = parent[cur]
        self.value += 1
        return True

    def run(self, cap: int) -> int:
        while self.value < cap and self._bfs_augment():
            pass
        return self.value

    @property
    def next_hop(self) -> dict[int, int]:
        """Successor map of the final flow (node → next node on its path)."""
        nxt: dict[int, int] = {}
        for (u, w) in self.arc_used:
            nxt[u] = w
        return nxt

    def min_cut(self) -> list[int]:
        """Nodes whose saturated split arcs cross the residual reachability cut."""
        n = self.n
        seen: set[tuple[str, int]] = set()
        queue = []
        for s in range(n):
            if (self.source_mask >> s) & 1:
                seen.add(("in", s))
                queue.append(("in", s))
        qi = 0
        while qi < len(queue):
            side, u = queue[qi]
            qi += 1
            if side == "in":
                if not self.split_used[u] and ("out", u) not in seen:
                    seen.add(("out", u))
                    queue.append(("out", u))
                for p in range(n):
                    if (p, u) in self.arc_used and ("out", p) not in seen:
                        seen.add(("out", p))
                        queue.append(("out", p))
            else:
                m = self.out_masks[u] & ~self.excluded_mask
                w = 0
                while m:
                    if m & 1 and ("in", w) not in seen:
                        seen.add(("in", w))
                        queue.append(("in", w))
                    m >>= 1
                    w += 1
                if self.split_used[u] and ("in", u) not in seen:
                    seen.add(("in", u))
                    queue.append(("in", u))
        return sorted(
            u
            for u in range(n)
            if ("in", u) in seen and ("out", u) not in seen and self.split_used[u]
        )


def _vertex_disjoint_flow(
    n: int,
    out_masks: tuple[int, ...],
    source_mask: int,
    target: int,
    excluded_mask: int,
    cap: int,
) -> _SplitFlow:
    flow = _SplitFlow(n, out_masks, source_mask, target, excluded_mask)
    flow.run(cap)
    return flow


# -- serialization --------------------------------------------------------


def format_edge_list(g: Digraph) -> str:
    """Canonical text form: node count line, then sorted 'u v' lines."""
    lines = [str(g.n)]
    lines.extend("%d %d" % e for e in sorted(g.edges))
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Digraph:
    """Parse the edge-list format ('#' comments and blank lines ignored)."""
    n: int | None = None
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            numbers = [int(p) for p in parts]
        except ValueError:
            raise ValueError("line %d: not numeric, got %r" % (lineno, raw)) from None
        if n is None:
            if len(parts) != 1:
                raise ValueError("line %d: expected node count, got %r" % (lineno, raw))
            n = numbers[0]
            continue
        if len(parts) != 2:
            raise ValueError("line %d: expected 'u v', got %r" % (lineno, raw))
        edges.append((numbers[0], numbers[1]))
    if n is None:
        raise ValueError("empty edge list: missing node count line")
    return Digraph(n, edges)


def graph_digest(g: Digraph) -> str:
    """Stable content hash of the canonical edge list."""
    return hashlib.sha256(format_edge_list(g).encode("ascii")).hexdigest()


def edge_iter(g: Digraph) -> Iterator[tuple[NodeId, NodeId]]:
    """Edges in sorted order."""
    return iter(sorted(g.edges))
