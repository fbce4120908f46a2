"""Consensus core: the per-node phase program and the network runner.

The algorithm runs one phase per candidate fault set F, ascending by size
and then by bitmask.  A phase opens with a directed-graph decomposition of
G−F; when the decomposition has a unique source component S the phase runs:

* step (b): S and its in-neighbors inside F flood their current bits for
  n rounds;
* step (c): each v ∈ S classifies every initiator u by the value recorded
  along a canonical F-excluding u→v path (its own bit for u = v; a missing
  value reads as 1, matching the silent-initiator default);
* step (d): v splits the initiators into zero-set and one-set, orients the
  update by which side propagates to the other, and — when it sits on the
  receiving side — adopts a value δ carried identically by f+1 node-disjoint
  initiator→v paths whose internal nodes avoid F;
* step (e): S floods the updated bits for n more rounds;
* step (f): every node outside S ∪ F adopts a δ carried identically by f+1
  node-disjoint S→v paths excluding F in the second flood, else keeps its
  bit (kept-bit cases are surfaced in the run result).

When the decomposition has several source components the phase is inert:
no honest node initiates, but both floods still occupy their rounds, so
every run takes exactly |plan| × 2n rounds.

The runner drives an arbitrary labeled network whose nodes each execute
the program of their label on G — the copy-network harness needs exactly
that — and the plain entry point wraps the identity labeling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import kernels
from .conditions import (
    FaultBudget,
    MultipleSourceComponentsError,
    fault_subsets,
    propagates,
    unique_source_component,
)
from .digraph import (
    Digraph,
    count_disjoint_paths,
    disjoint_path_witnesses,
    find_path_excluding,
    in_neighborhood,
    mask_from,
)
from .flooding import path_code

STEP_D = "d"
STEP_F = "f"


def phase_plan(n: int, f: int) -> tuple[tuple[int, ...], ...]:
    """All candidate fault sets, ascending by (size, bitmask)."""
    return tuple(fault_subsets(n, f))


@dataclass(frozen=True)
class PhaseStatic:
    """Node-independent facts of one phase: source component and paths.

    ``canon`` maps (initiator u, receiver v) to the full-path code of the
    deterministic F-excluding u→v path used by step (c); receivers are the
    source-component members, initiators additionally include the
    component's in-neighbors inside the fault set.  Inert phases (several
    source components) carry empty masks and no paths.
    """

    index: int
    fault_set: tuple[int, ...]
    fmask: int
    skipped: bool
    source: tuple[int, ...]
    source_mask: int
    init_nodes: tuple[int, ...]
    init_mask: int
    canon: Mapping[tuple[int, int], int]


@dataclass
class ProtocolStatic:
    """Per-(graph, f) precomputation shared by every run.

    Mutable members are memo caches keyed by deterministic inputs, so
    sharing one instance across runs (or threads driving disjoint runs)
    never changes observable results.
    """

    g: Digraph
    f: int
    phases: tuple[PhaseStatic, ...]
    _code_info: dict[int, tuple[int, int, int, tuple[tuple[int, int], ...]]] = field(
        default_factory=dict, repr=False
    )
    _prop_cache: dict[tuple[int, int], bool] = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, g: Digraph, f: int) -> "ProtocolStatic":
        FaultBudget(f, g.n)
        phases = []
        for index, fault_set in enumerate(phase_plan(g.n, f)):
            phases.append(_build_phase(g, index, fault_set))
        return cls(g=g, f=f, phases=tuple(phases))

    @property
    def total_rounds(self) -> int:
        return len(self.phases) * 2 * self.g.n

    def propagates_from_zero_set(self, phase: PhaseStatic, zmask: int) -> bool:
        """Memoized step-(d) orientation test for one zero-set estimate."""
        key = (phase.index, zmask)
        cached = self._prop_cache.get(key)
        if cached is None:
            senders = [u for u in phase.init_nodes if (zmask >> u) & 1]
            receivers = [
                u
                for u in phase.init_nodes
                if not (zmask >> u) & 1 and not (phase.fmask >> u) & 1
            ]
            cached = propagates(self.g, senders, receivers, phase.fault_set, self.f)
            self._prop_cache[key] = cached
        return cached

    def code_info(
        self, code: int
    ) -> tuple[int, int, int, tuple[tuple[int, int], ...]]:
        """(source, internal-mask, footprint-mask, edges) of a full path code."""
        cached = self._code_info.get(code)
        if cached is None:
            terminal = code & 15
            mask = 0
            probe = code
            prev = -1
            edges = []
            while probe > 1:
                node = probe & 15
                mask |= 1 << node
                if prev >= 0:
                    edges.append((node, prev))
                prev = node
                probe >>= 4
            source = prev
            internal = mask & ~(1 << source) & ~(1 << terminal)
            footprint = mask & ~(1 << terminal)
            cached = (source, internal, footprint, tuple(edges))
            self._code_info[code] = cached
        return cached


def _build_phase(g: Digraph, index: int, fault_set: tuple[int, ...]) -> PhaseStatic:
    fmask = mask_from(fault_set)
    try:
        source = unique_source_component(g, fault_set)
    except MultipleSourceComponentsError:
        return PhaseStatic(
            index=index,
            fault_set=fault_set,
            fmask=fmask,
            skipped=True,
            source=(),
            source_mask=0,
            init_nodes=(),
            init_mask=0,
            canon={},
        )
    init_nodes = tuple(sorted(source | in_neighborhood(g, fault_set, source)))
    canon: dict[tuple[int, int], int] = {}
    for v in sorted(source):
        for u in init_nodes:
            if u == v:
                continue
            path = find_path_excluding(g, u, v, fault_set)
            assert path is not None, "canonical path missing for a live phase"
            canon[(u, v)] = path_code(path)
    return PhaseStatic(
        index=index,
        fault_set=fault_set,
        fmask=fmask,
        skipped=False,
        source=tuple(sorted(source)),
        source_mask=mask_from(source),
        init_nodes=init_nodes,
        init_mask=mask_from(init_nodes),
        canon=canon,
    )


@dataclass(frozen=True)
class FloodView:
    """What an adversary sees before each emission round.

    ``engine`` exposes ``pending_of`` (what an honest node in the same
    position would forward this round), ``records_of``, and the sender
    topology; overrides returned by the adversary replace the emissions of
    corrupted senders only.
    """

    g: Digraph
    f: int
    labels: tuple[int, ...]
    faulty: tuple[int, ...]
    phase: PhaseStatic
    flood: str  # "b" or "e"
    round_no: int  # 1-based round about to run
    engine: object


@dataclass(frozen=True)
class UpdateEvent:
    """One successful supported-value adoption in step (d) or (f)."""

    phase: int
    sim: int
    step: str
    delta: int
    amask: int
    witnesses: tuple[int, ...]


@dataclass(frozen=True)
class RunResult:
    """Outcome of one full run over every phase of the plan."""

    outputs: tuple[int, ...]
    faulty: tuple[int, ...]
    rounds: int
    phase_gammas: tuple[tuple[int, ...], ...]
    updates: tuple[UpdateEvent, ...]
    no_support: tuple[tuple[int, int], ...]
    origin_checked: int
    origin_unknown_faultfree: int


def _supported_value(
    static: ProtocolStatic,
    records: Mapping[int, int],
    amask: int,
    fmask: int,
    vlabel: int,
    k: int,
) -> tuple[int, tuple[int, ...]] | None:
    """First value δ ∈ (0, 1) carried by k disjoint qualifying paths.

    A qualifying path is a recorded full path with value δ whose source
    lies in ``amask`` and whose internal nodes avoid ``fmask``; two paths
    qualify together when they share nothing but the terminal.  The search
    is exact: a cheap max-flow bound over the union of qualifying paths
    rejects most cases, the flow's witness decomposition accepts most of
    the rest, and a depth-first packing over path footprints settles the
    remainder.  Ties prefer δ = 0, then the smallest path codes.
    """
    for delta in (0, 1):
        witnesses = _packing(static, records, amask, fmask, vlabel, k, delta)
        if witnesses is not None:
            return delta, witnesses
    return None


def _packing(
    static: ProtocolStatic,
    records: Mapping[int, int],
    amask: int,
    fmask: int,
    vlabel: int,
    k: int,
    delta: int,
) -> tuple[int, ...] | None:
    candidates = []
    sources = 0
    for code, value in records.items():
        if value != delta:
            continue
        source, internal, footprint, _edges = static.code_info(code)
        if not (amask >> source) & 1 or internal & fmask:
            continue
        candidates.append((code, footprint))
        sources |= 1 << source
    if len(candidates) < k:
        return None
    candidates.sort()
    # Stage 1: a flow bound on the union graph of qualifying paths.  Any k
    # pairwise-disjoint qualifying paths are vertex-disjoint there, so a
    # flow below k rules δ out.
    union_edges = set()
    for code, _footprint in candidates:
        union_edges.update(static.code_info(code)[3])
    union = Digraph(static.g.n, union_edges)
    source_nodes = [u for u in range(static.g.n) if (sources >> u) & 1]
    if count_disjoint_paths(union, source_nodes, vlabel, (), limit=k) < k:
        return None
    # Stage 2: if the flow decomposes into k recorded paths, take those.
    code_set = {code for code, _ in candidates}
    found = sorted(
        path_code(path)
        for path in disjoint_path_witnesses(union, source_nodes, vlabel, ())
        if path_code(path) in code_set
    )
    if len(found) >= k:
        return tuple(found[:k])
    # Stage 3: exact packing over path footprints, smallest codes first.
    by_footprint: dict[int, int] = {}
    for code, footprint in candidates:
        by_footprint.setdefault(footprint, code)
    items = sorted((code, footprint) for footprint, code in by_footprint.items())
    chosen: list[int] = []

    def descend(start: int, used: int) -> bool:
        if len(chosen) == k:
            return True
        if k - len(chosen) > len(items) - start:
            return False
        for i in range(start, len(items)):
            code, footprint = items[i]
            if footprint & used:
                continue
            chosen.append(code)
            if descend(i + 1, used | footprint):
                return True
            chosen.pop()
        return False

    if descend(0, 0):
        return tuple(chosen)
    return None


def run_on_network(
    g: Digraph,
    f: int,
    labels: Sequence[int],
    sim_out: Sequence[Iterable[int]],
    inputs: Sequence[int],
    faulty: Iterable[int] = (),
    adversary=None,
    *,
    static: ProtocolStatic | None = None,
    trace: list | None = None,
) -> RunResult:
    """Run every phase on a labeled network; each node runs its label's program.

    ``labels[s]`` is the graph node whose program simulation node ``s``
    executes; ``sim_out`` is the network's own edge structure.  With the
    identity labeling this is exactly the consensus algorithm on ``g``;
    copy networks replay it with several simulations per label.  Corrupted
    simulations emit whatever ``adversary`` chooses while shadow state
    tracks what an honest node in their position would have done.
    """
    if static is None:
        static = ProtocolStatic.build(g, f)
    labels = tuple(int(x) for x in labels)
    n_sim = len(labels)
    if len(inputs) != n_sim or len(sim_out) != n_sim:
        raise ValueError("inputs and sim_out must cover every simulation node")
    gammas = [int(x) for x in inputs]
    if any(x not in (0, 1) for x in gammas):
        raise ValueError("inputs must be bits")
    faulty = tuple(sorted(set(int(x) for x in faulty)))
    fstar_mask = 0
    for s in faulty:
        fstar_mask |= 1 << labels[s]
    core = kernels.impl.FloodCore(
        g.n,
        tuple(g.out_mask(v) for v in range(g.n)),
        labels,
        [tuple(out) for out in sim_out],
        faulty,
        fstar_mask,
    )
    core.set_trace(trace)
    if adversary is not None:
        adversary.reset(g=g, f=f, labels=labels, faulty=faulty, engine=core)

    k = f + 1
    updates: list[UpdateEvent] = []
    no_support: list[tuple[int, int]] = []
    phase_gammas: list[tuple[int, ...]] = []

    def run_flood(phase: PhaseStatic, tag: str, init_mask: int) -> None:
        core.begin_flood(init_mask, gammas)
        if trace is not None:
            trace.append(("flood", phase.index, tag, init_mask))
        for _ in range(g.n):
            overrides = None
            if adversary is not None and faulty:
                view = FloodView(
                    g=g,
                    f=f,
                    labels=labels,
                    faulty=faulty,
                    phase=phase,
                    flood=tag,
                    round_no=core.round_no + 1,
                    engine=core,
                )
                overrides = adversary.bundles(view)
            core.advance(overrides)

    for phase in static.phases:
        if trace is not None:
            trace.append(("phase", phase.index, phase.fault_set, int(phase.skipped)))
        run_flood(phase, "b", 0 if phase.skipped else phase.init_mask)
        if not phase.skipped:
            for s in range(n_sim):
                vlabel = labels[s]
                if not (phase.source_mask >> vlabel) & 1:
                    continue
                records = core.records_of(s)
                zmask = 0
                for u in phase.init_nodes:
                    if u == vlabel:
                        value = gammas[s]
                    else:
                        value = records.get(phase.canon[(u, vlabel)], 1)
                    if value == 0:
                        zmask |= 1 << u
                nmask = phase.init_mask & ~zmask
                if not zmask & ~phase.fmask or not nmask & ~phase.fmask:
                    continue
                if static.propagates_from_zero_set(phase, zmask):
                    amask, bmask = zmask, nmask & ~phase.fmask
                else:
                    amask, bmask = nmask, zmask & ~phase.fmask
                if not (bmask >> vlabel) & 1:
                    continue
                hit = _supported_value(
                    static, records, amask, phase.fmask, vlabel, k
                )
                if hit is not None:
                    delta, witnesses = hit
                    gammas[s] = delta
                    event = UpdateEvent(
                        phase.index, s, STEP_D, delta, amask, witnesses
                    )
                    updates.append(event)
                    if trace is not None:
                        trace.append(
                            ("update", phase.index, STEP_D, s, delta, amask, witnesses)
                        )
        run_flood(phase, "e", 0 if phase.skipped else phase.source_mask)
        if not phase.skipped:
            outside = ~(phase.source_mask | phase.fmask)
            for s in range(n_sim):
                vlabel = labels[s]
                if not (outside >> vlabel) & 1:
                    continue
                hit = _supported_value(
                    static,
                    core.records_of(s),
                    phase.source_mask,
                    phase.fmask,
                    vlabel,
                    k,
                )
                if hit is not None:
                    delta, witnesses = hit
                    gammas[s] = delta
                    event = UpdateEvent(
                        phase.index, s, STEP_F, delta, phase.source_mask, witnesses
                    )
                    updates.append(event)
                    if trace is not None:
                        trace.append(
                            (
                                "update",
                                phase.index,
                                STEP_F,
                                s,
                                delta,
                                phase.source_mask,
                                witnesses,
                            )
                        )
                else:
                    no_support.append((phase.index, s))
                    if trace is not None:
                        trace.append(("nosupport", phase.index, s))
        phase_gammas.append(tuple(gammas))
        if trace is not None:
            trace.append(("gamma", phase.index, tuple(gammas)))

    assert core.rounds_total == static.total_rounds, "round budget drifted"
    if core.origin_violations:
        raise AssertionError(
            "a fault-free path delivered a value unequal to its origin bit"
        )
    result = RunResult(
        outputs=tuple(gammas),
        faulty=faulty,
        rounds=core.rounds_total,
        phase_gammas=tuple(phase_gammas),
        updates=tuple(updates),
        no_support=tuple(no_support),
        origin_checked=core.origin_checked,
        origin_unknown_faultfree=core.origin_unknown_faultfree,
    )
    if trace is not None:
        trace.append(("result", result.outputs, result.rounds))
    return result


def run_algorithm(
    g: Digraph,
    f: int,
    inputs: Sequence[int],
    adversary=None,
    faulty: Iterable[int] = (),
    *,
    static: ProtocolStatic | None = None,
    trace: list | None = None,
) -> RunResult:
    """Consensus on ``g`` itself: the identity-labeled network run."""
    return run_on_network(
        g,
        f,
        range(g.n),
        [g.out(v) for v in range(g.n)],
        inputs,
        faulty,
        adversary,
        static=static,
        trace=trace,
    )
