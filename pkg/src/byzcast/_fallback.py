"""Pure-Python twin of the compiled kernels.

Everything here must stay observably identical to byzcast._speedups: same
counts, same acceptance decisions in the same order, same trace records. The
differential tests hold both to that.
"""

from __future__ import annotations

KERNEL_NAME = "pure"


def count_vertex_disjoint(
    n: int,
    out_masks: tuple[int, ...],
    source_mask: int,
    target: int,
    excluded_mask: int,
    cap: int,
) -> int:
    """Max number of sources→target paths sharing only the target.

    Mirrors the compiled kernel; the heavy lifting lives in the split-graph
    flow helper the certificate extractors also use.
    """
    from .digraph import _SplitFlow

    flow = _SplitFlow(n, tuple(out_masks), source_mask, target, excluded_mask)
    return flow.run(cap)


class FloodCore:
    """Batched flood engine for a whole network, one flood at a time.

    Hosts every simulation node, honest and corrupted alike.  Corrupted
    nodes are processed by the same receive rules into shadow state (so
    mimicking adversaries can read what an honest node would have done),
    but their actual emissions each round come from the adversary override
    bundle; honest nodes emit their queued forwards.

    Node ids live in two spaces: *sim* ids index the network being driven
    (which may hold several copies of one protocol node), *labels* map each
    sim id to the protocol-level node id that appears inside message paths.
    All path codes are in label space, bounded by the nibble encoding.

    Every accepted record whose full path avoids the corrupted set is
    checked against the originating broadcast bit (messages carry an origin
    tag; adversary submissions carry an unknowable tag and always include a
    corrupted label in their full path, so the check never needs them).
    """

    __slots__ = (
        "n_orig", "orig_out", "n_sim", "labels", "sim_out", "sim_in",
        "faulty", "fstar_mask", "trace", "round_no", "rounds_total",
        "origin_checked", "origin_violations", "origin_unknown_faultfree",
        "init_mask", "records", "dedup", "heard", "pending",
    )

    def __init__(
        self,
        n_orig: int,
        orig_out_masks,
        labels,
        sim_out,
        faulty,
        fstar_mask: int,
    ) -> None:
        from .flooding import MAX_FLOOD_NODE

        if n_orig > MAX_FLOOD_NODE:
            raise ValueError(
                "flooding supports at most %d protocol nodes" % MAX_FLOOD_NODE
            )
        self.n_orig = n_orig
        self.orig_out = tuple(orig_out_masks)
        self.labels = tuple(labels)
        self.n_sim = len(self.labels)
        self.sim_out = tuple(tuple(sorted(out)) for out in sim_out)
        if len(self.sim_out) != self.n_sim:
            raise ValueError("sim_out size mismatch")
        sim_in = [[] for _ in range(self.n_sim)]
        for s, outs in enumerate(self.sim_out):
            for v in outs:
                sim_in[v].append(s)
        self.sim_in = tuple(tuple(ins) for ins in sim_in)
        fset = frozenset(faulty)
        self.faulty = tuple(s in fset for s in range(self.n_sim))
        self.fstar_mask = fstar_mask
        self.trace = None
        self.round_no = 0
        self.rounds_total = 0
        self.origin_checked = 0
        self.origin_violations = 0
        self.origin_unknown_faultfree = 0
        self.init_mask = 0
        self.records = [dict() for _ in range(self.n_sim)]
        self.dedup = [set() for _ in range(self.n_sim)]
        self.heard = [set() for _ in range(self.n_sim)]
        self.pending = [[] for _ in range(self.n_sim)]

    def set_trace(self, sink) -> None:
        """Attach a list collecting event tuples, or None to disable."""
        self.trace = sink

    def begin_flood(self, init_label_mask: int, gammas) -> None:
        """Reset per-flood state; queue initiations for round 1."""
        from .flooding import EMPTY_CODE

        self.round_no = 0
        self.init_mask = init_label_mask
        self.records = [dict() for _ in range(self.n_sim)]
        self.dedup = [set() for _ in range(self.n_sim)]
        self.heard = [set() for _ in range(self.n_sim)]
        pending = []
        for s in range(self.n_sim):
            if (init_label_mask >> self.labels[s]) & 1:
                bit = gammas[s]
                pending.append([(bit, EMPTY_CODE, bit)])
            else:
                pending.append([])
        self.pending = pending

    def pending_of(self, sim: int):
        """What the node would emit next round: honest queue or shadow."""
        return tuple((value, code) for (value, code, _tag) in self.pending[sim])

    def records_of(self, sim: int):
        """Live full-path → value map for one sim node (treat read-only)."""
        return self.records[sim]

    def advance(self, overrides=None) -> None:
        """Emit and deliver one round; substitutes defaults after round 1."""
        from .flooding import DEFAULT_VALUE, EMPTY_CODE

        self.round_no += 1
        self.rounds_total += 1
        rnd = self.round_no
        sink = self.trace
        labels = self.labels
        emissions = []
        for s in range(self.n_sim):
            if self.faulty[s]:
                raw = overrides.get(s, ()) if overrides else ()
                bundle = [(int(v), int(c), -1) for (v, c) in raw]
            else:
                bundle = self.pending[s]
            if bundle:
                emissions.append((s, bundle))
                if sink is not None:
                    for value, code, _tag in bundle:
                        sink.append(("emit", rnd, s, value, code))
        self.pending = [[] for _ in range(self.n_sim)]
        for s, bundle in emissions:
            slabel = labels[s]
            outs = self.sim_out[s]
            for value, code, tag in bundle:
                kind, msg_mask, fwd_code, fwd_mask = self._classify(
                    slabel, value, code
                )
                # Only a well-formed initiation (b, empty path) counts as
                # having flooded: receivers still substitute the default
                # for a node that transmits garbage without initiating.
                initiates = (
                    rnd == 1 and value in (0, 1) and code == EMPTY_CODE
                )
                for v in outs:
                    if initiates:
                        self.heard[v].add(s)
                    self._apply(
                        v, s, slabel, value, code, tag,
                        kind, msg_mask, fwd_code, fwd_mask, 0,
                    )
        if rnd == 1:
            for v in range(self.n_sim):
                heard_v = self.heard[v]
                for u in self.sim_in[v]:
                    ulabel = labels[u]
                    if (self.init_mask >> ulabel) & 1 and u not in heard_v:
                        self._apply(
                            v, u, ulabel, DEFAULT_VALUE, EMPTY_CODE, -1,
                            4, 0, (EMPTY_CODE << 4) | ulabel, 1 << ulabel, 1,
                        )

    def _classify(self, slabel: int, value: int, code: int):
        """Sender-side message check shared by every receiver.

        Returns (kind, msg_mask, fwd_code, fwd_mask) with kind 0 for
        malformed, 1 for a failed path-of-the-graph test, 4 otherwise.
        """
        from .flooding import EMPTY_CODE, code_valid

        if value not in (0, 1) or not code_valid(code, self.n_orig):
            return 0, 0, 0, 0
        msg_mask = 0
        ok = True
        probe = code
        succ = slabel  # node that must follow the probed one on the path
        while probe > EMPTY_CODE:
            node = probe & 15
            if (msg_mask >> node) & 1:  # repeated node
                ok = False
                break
            if not (self.orig_out[node] >> succ) & 1:  # missing edge
                ok = False
                break
            msg_mask |= 1 << node
            succ = node
            probe >>= 4
        if ok and (msg_mask >> slabel) & 1:  # sender already on the path
            ok = False
        fwd_code = (code << 4) | slabel
        fwd_mask = msg_mask | (1 << slabel)
        return (4 if ok else 1), msg_mask, fwd_code, fwd_mask

    def _apply(
        self, v, sender, slabel, value, code, tag,
        kind, msg_mask, fwd_code, fwd_mask, synth,
    ) -> None:
        full = 0
        if kind == 0:
            decision = 0
        elif kind == 1:
            decision = 1
        else:
            key = (code << 4) | slabel
            dedup_v = self.dedup[v]
            if key in dedup_v:
                decision = 2
            else:
                dedup_v.add(key)
                vlabel = self.labels[v]
                if (msg_mask >> vlabel) & 1:
                    decision = 3
                else:
                    decision = 4
                    full = (fwd_code << 4) | vlabel
                    self.records[v][full] = value
                    if not ((fwd_mask | (1 << vlabel)) & self.fstar_mask):
                        if tag >= 0:
                            self.origin_checked += 1
                            if value != tag:
                                self.origin_violations += 1
                        else:
                            self.origin_unknown_faultfree += 1
                    self.pending[v].append((value, fwd_code, tag))
        if self.trace is not None:
            self.trace.append(
                ("recv", self.round_no, sender, v, value, code, decision, full, synth)
            )
