# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twin of the pure-Python kernels.

Observable behavior must match byzcast._fallback exactly: same counts, same
acceptance decisions in the same order, same trace tuples. The differential
tests hold both implementations to that, so any divergence is a bug here.

Everything that can reach a path key is bounded: graphs are capped at 15
nodes, so a structurally valid code spans at most 15 nibbles plus the
sentinel bit (61 bits) and every derived key stays inside a 64-bit word.
Adversary-supplied integers outside that range are classified malformed
before they ever touch C arithmetic.
"""

from cython.operator cimport dereference as deref, preincrement as inc
from libcpp.vector cimport vector
from libcpp.unordered_map cimport unordered_map
from libcpp.unordered_set cimport unordered_set

from .flooding import DEFAULT_VALUE as _DV, EMPTY_CODE as _EC, MAX_FLOOD_NODE as _MFN

if _DV != 1 or _EC != 1 or _MFN != 15:
    raise ImportError("flooding constants drifted from the compiled kernels")

KERNEL_NAME = "compiled"

# Largest magnitude an adversary integer may have and still be worth moving
# into C: one spare bit under the int64 sign so every comparison is safe.
_INT64_SAFE = 1 << 62

cdef long long EMPTY_CODE = 1
cdef long long DEFAULT_VALUE = 1
cdef int MAX_FLOOD_NODE = 15


# ---------------------------------------------------------------------------
# vertex-disjoint path counting (unit-capacity flow on the split graph)
# ---------------------------------------------------------------------------


def count_vertex_disjoint(
    n,
    out_masks,
    source_mask,
    target,
    excluded_mask,
    cap,
):
    """Max number of sources->target paths sharing only the target.

    Same contract as the pure kernel; graphs wider than the 62-bit mask
    range are delegated back to it (none of the bounded callers get there).
    """
    if n > 62:
        from . import _fallback

        return _fallback.count_vertex_disjoint(
            n, out_masks, source_mask, target, excluded_mask, cap
        )
    cdef int cn = n
    cdef int ctarget = target
    cdef int ccap = cap
    cdef unsigned long long csources = source_mask
    cdef unsigned long long cexcluded = excluded_mask
    cdef vector[unsigned long long] outs
    cdef vector[unsigned long long] arc_used
    cdef vector[char] split_used
    cdef vector[int] parent
    cdef vector[int] queue
    cdef int value = 0
    cdef int qi, state, u, w, p, cur, prev
    cdef unsigned long long mm

    outs.resize(cn)
    for u in range(cn):
        outs[u] = out_masks[u]
    arc_used.assign(cn, 0)
    split_used.assign(cn, 0)

    while value < ccap:
        # Breadth-first search for an augmenting path; state ids are
        # u for the in-copy and n+u for the out-copy of node u.
        parent.assign(2 * cn, -2)
        queue.clear()
        for u in range(cn):
            if (csources >> u) & 1:
                parent[u] = -1
                queue.push_back(u)
        qi = 0
        while qi < <int> queue.size():
            state = queue[qi]
            qi += 1
            if state == ctarget:
                break
            if state < cn:
                u = state
                if not split_used[u] and parent[cn + u] == -2:
                    parent[cn + u] = state
                    queue.push_back(cn + u)
                for p in range(cn):
                    if ((arc_used[p] >> u) & 1) and parent[cn + p] == -2:
                        parent[cn + p] = state
                        queue.push_back(cn + p)
            else:
                u = state - cn
                mm = outs[u] & ~cexcluded
                w = 0
                while mm:
                    if (mm & 1) and parent[w] == -2:
                        parent[w] = state
                        queue.push_back(w)
                    mm >>= 1
                    w += 1
                if split_used[u] and parent[u] == -2:
                    parent[u] = state
                    queue.push_back(u)
        if parent[ctarget] == -2:
            break
        # Walk the path backwards, toggling split and graph arcs.
        cur = ctarget
        prev = parent[cur]
        while prev != -1:
            if prev < cn and cur >= cn and cur - cn == prev:
                split_used[prev] = 1
            elif prev >= cn and cur < cn and prev - cn == cur:
                split_used[cur] = 0
            elif prev >= cn and cur < cn:
                arc_used[prev - cn] |= (<unsigned long long> 1) << cur
            else:
                arc_used[cur - cn] &= ~((<unsigned long long> 1) << prev)
            cur = prev
            prev = parent[cur]
        value += 1
    return value


# ---------------------------------------------------------------------------
# flood engine
# ---------------------------------------------------------------------------


cdef struct Pend:
    long long code
    int value
    int tag


cdef struct Em:
    int sim
    int tag
    char oob
    long long value
    long long code


cdef class FloodCore:
    """Batched flood engine for a whole network, one flood at a time.

    Compiled twin of the pure engine; see byzcast._fallback.FloodCore for
    the semantics. Out-of-range adversary integers are parked as Python
    objects so traces still show them verbatim while the classification
    (always malformed for such values) runs without them.
    """

    cdef public int n_orig
    cdef public int n_sim
    cdef public long long round_no
    cdef public long long rounds_total
    cdef public long long origin_checked
    cdef public long long origin_violations
    cdef public long long origin_unknown_faultfree
    cdef public long long init_mask
    cdef public long long fstar_mask
    cdef public object trace
    cdef public tuple labels
    cdef public tuple sim_out
    cdef public tuple sim_in
    cdef public tuple faulty
    cdef vector[long long] orig_out_c
    cdef vector[int] labels_c
    cdef vector[char] faulty_c
    cdef vector[vector[int]] sim_out_c
    cdef vector[vector[int]] sim_in_c
    cdef vector[unordered_map[long long, char]] records_c
    cdef vector[unordered_set[long long]] dedup_c
    cdef vector[char] heard_c
    cdef vector[vector[Pend]] pending_c
    cdef vector[Em] em_c

    def __init__(
        self,
        n_orig,
        orig_out_masks,
        labels,
        sim_out,
        faulty,
        fstar_mask,
    ):
        cdef int s, v, w
        cdef size_t k
        if n_orig > MAX_FLOOD_NODE:
            raise ValueError(
                "flooding supports at most %d protocol nodes" % MAX_FLOOD_NODE
            )
        self.n_orig = n_orig
        self.labels = tuple(labels)
        self.n_sim = len(self.labels)
        outs_py = []
        for out in sim_out:
            outs_py.append(tuple(sorted(out)))
        self.sim_out = tuple(outs_py)
        if len(self.sim_out) != self.n_sim:
            raise ValueError("sim_out size mismatch")
        self.orig_out_c.resize(self.n_orig)
        for v in range(self.n_orig):
            self.orig_out_c[v] = orig_out_masks[v]
        self.labels_c.resize(self.n_sim)
        for s in range(self.n_sim):
            v = self.labels[s]
            if v < 0 or v >= self.n_orig:
                raise ValueError("label out of range")
            self.labels_c[s] = v
        self.sim_out_c.resize(self.n_sim)
        self.sim_in_c.resize(self.n_sim)
        for s in range(self.n_sim):
            for v in self.sim_out[s]:
                if v < 0 or v >= self.n_sim:
                    raise IndexError("sim id out of range")
                self.sim_out_c[s].push_back(v)
        for s in range(self.n_sim):
            for k in range(self.sim_out_c[s].size()):
                w = self.sim_out_c[s][k]
                self.sim_in_c[w].push_back(s)
        ins_py = []
        for v in range(self.n_sim):
            row = []
            for k in range(self.sim_in_c[v].size()):
                row.append(self.sim_in_c[v][k])
            ins_py.append(tuple(row))
        self.sim_in = tuple(ins_py)
        fset = frozenset(faulty)
        flags_py = []
        for s in range(self.n_sim):
            flags_py.append(s in fset)
        self.faulty = tuple(flags_py)
        self.faulty_c.resize(self.n_sim)
        for s in range(self.n_sim):
            # A conditional expression must not sit on the right of a C++
            # element assignment (miscompiled by the cython in use).
            w = 1 if self.faulty[s] else 0
            self.faulty_c[s] = w
        for s in range(self.n_sim):
            if (self.faulty_c[s] != 0) != bool(self.faulty[s]):
                raise RuntimeError("kernel state mirror out of sync")
        self.fstar_mask = fstar_mask
        self.trace = None
        self.round_no = 0
        self.rounds_total = 0
        self.origin_checked = 0
        self.origin_violations = 0
        self.origin_unknown_faultfree = 0
        self.init_mask = 0
        self.records_c.resize(self.n_sim)
        self.dedup_c.resize(self.n_sim)
        self.heard_c.assign(self.n_sim * self.n_sim, 0)
        self.pending_c.resize(self.n_sim)

    def set_trace(self, sink):
        """Attach a list collecting event tuples, or None to disable."""
        self.trace = sink

    def begin_flood(self, init_label_mask, gammas):
        """Reset per-flood state; queue initiations for round 1."""
        cdef int s
        cdef Pend item
        self.round_no = 0
        self.init_mask = init_label_mask
        for s in range(self.n_sim):
            self.records_c[s].clear()
            self.dedup_c[s].clear()
            self.pending_c[s].clear()
        self.heard_c.assign(self.n_sim * self.n_sim, 0)
        for s in range(self.n_sim):
            if (self.init_mask >> self.labels_c[s]) & 1:
                item.value = gammas[s]
                item.code = EMPTY_CODE
                item.tag = item.value
                self.pending_c[s].push_back(item)

    def pending_of(self, sim):
        """What the node would emit next round: honest queue or shadow."""
        cdef int s = sim
        cdef size_t i
        out = []
        for i in range(self.pending_c[s].size()):
            out.append((self.pending_c[s][i].value, self.pending_c[s][i].code))
        return tuple(out)

    def records_of(self, sim):
        """Full-path -> value map snapshot for one sim node."""
        cdef int s = sim
        cdef dict out = {}
        cdef unordered_map[long long, char].iterator it = (
            self.records_c[s].begin()
        )
        while it != self.records_c[s].end():
            out[deref(it).first] = deref(it).second
            inc(it)
        return out

    def advance(self, overrides=None):
        """Emit and deliver one round; substitutes defaults after round 1."""
        cdef int s, v, u, ulabel, slabel, kind, initiates
        cdef int n_sim = self.n_sim
        cdef long long rnd
        cdef size_t i, j, n_em
        cdef Em em
        cdef Pend pend
        cdef long long msg_mask, fwd_code, fwd_mask
        cdef dict oob_items = None
        self.round_no += 1
        self.rounds_total += 1
        rnd = self.round_no
        sink = self.trace
        self.em_c.clear()
        for s in range(n_sim):
            if self.faulty_c[s]:
                raw = overrides.get(s, ()) if overrides else ()
                for pair in raw:
                    value_obj = int(pair[0])
                    code_obj = int(pair[1])
                    em.sim = s
                    em.tag = -1
                    if (
                        -_INT64_SAFE < value_obj < _INT64_SAFE
                        and -_INT64_SAFE < code_obj < _INT64_SAFE
                    ):
                        em.oob = 0
                        em.value = value_obj
                        em.code = code_obj
                    else:
                        em.oob = 1
                        em.value = 0
                        em.code = 0
                        if oob_items is None:
                            oob_items = {}
                        oob_items[self.em_c.size()] = (value_obj, code_obj)
                    if sink is not None:
                        if em.oob:
                            sink.append(("emit", rnd, s, value_obj, code_obj))
                        else:
                            sink.append(("emit", rnd, s, em.value, em.code))
                    self.em_c.push_back(em)
            else:
                for i in range(self.pending_c[s].size()):
                    pend = self.pending_c[s][i]
                    em.sim = s
                    em.tag = pend.tag
                    em.oob = 0
                    em.value = pend.value
                    em.code = pend.code
                    if sink is not None:
                        sink.append(("emit", rnd, s, em.value, em.code))
                    self.em_c.push_back(em)
        for s in range(n_sim):
            self.pending_c[s].clear()
        n_em = self.em_c.size()
        for i in range(n_em):
            em = self.em_c[i]
            s = em.sim
            slabel = self.labels_c[s]
            if em.oob:
                # An oversized value or path can never be a well-formed
                # initiation, so receivers still owe the sender a default.
                value_obj, code_obj = oob_items[i]
                for j in range(self.sim_out_c[s].size()):
                    v = self.sim_out_c[s][j]
                    if sink is not None:
                        sink.append(
                            ("recv", rnd, s, v, value_obj, code_obj, 0, 0, 0)
                        )
                continue
            kind = self._classify(
                slabel, em.value, em.code, &msg_mask, &fwd_code, &fwd_mask
            )
            # Only a well-formed initiation (b, empty path) counts as
            # having flooded: receivers still substitute the default for
            # a node that transmits garbage without initiating.
            initiates = 0
            if rnd == 1 and em.code == EMPTY_CODE:
                if em.value == 0 or em.value == 1:
                    initiates = 1
            for j in range(self.sim_out_c[s].size()):
                v = self.sim_out_c[s][j]
                if initiates:
                    self.heard_c[v * n_sim + s] = 1
                self._apply(
                    v, s, slabel, em.value, em.code, em.tag,
                    kind, msg_mask, fwd_code, fwd_mask, 0,
                )
        if rnd == 1:
            for v in range(n_sim):
                for j in range(self.sim_in_c[v].size()):
                    u = self.sim_in_c[v][j]
                    ulabel = self.labels_c[u]
                    if ((self.init_mask >> ulabel) & 1) and not self.heard_c[
                        v * n_sim + u
                    ]:
                        self._apply(
                            v, u, ulabel, DEFAULT_VALUE, EMPTY_CODE, -1,
                            4, 0, (EMPTY_CODE << 4) | ulabel,
                            (<long long> 1) << ulabel, 1,
                        )

    cdef int _classify(
        self,
        int slabel,
        long long value,
        long long code,
        long long* msg_mask_out,
        long long* fwd_code_out,
        long long* fwd_mask_out,
    ):
        """Sender-side message check; 0 malformed, 1 invalid path, 4 pass."""
        cdef long long probe, msg_mask
        cdef int node, succ, bits, ok
        cdef unsigned long long t
        msg_mask_out[0] = 0
        fwd_code_out[0] = 0
        fwd_mask_out[0] = 0
        if value != 0 and value != 1:
            return 0
        if code < EMPTY_CODE:
            return 0
        bits = 0
        t = <unsigned long long> code
        while t > 1:
            t >>= 1
            bits += 1
        if bits % 4 or bits > 4 * MAX_FLOOD_NODE:
            return 0
        probe = code
        while probe > EMPTY_CODE:
            if (probe & 15) >= self.n_orig:
                return 0
            probe >>= 4
        msg_mask = 0
        ok = 1
        probe = code
        succ = slabel  # node that must follow the probed one on the path
        while probe > EMPTY_CODE:
            node = <int> (probe & 15)
            if (msg_mask >> node) & 1:  # repeated node
                ok = 0
                break
            if not (self.orig_out_c[node] >> succ) & 1:  # missing edge
                ok = 0
                break
            msg_mask |= (<long long> 1) << node
            succ = node
            probe >>= 4
        if ok and (msg_mask >> slabel) & 1:  # sender already on the path
            ok = 0
        msg_mask_out[0] = msg_mask
        if ok:
            # Only a rule-passing code is short enough for these shifts.
            fwd_code_out[0] = (code << 4) | slabel
            fwd_mask_out[0] = msg_mask | ((<long long> 1) << slabel)
            return 4
        return 1

    cdef void _apply(
        self,
        int v,
        int sender,
        int slabel,
        long long value,
        long long code,
        int tag,
        int kind,
        long long msg_mask,
        long long fwd_code,
        long long fwd_mask,
        int synth,
    ):
        cdef long long full = 0
        cdef long long key
        cdef int decision, vlabel
        cdef Pend item
        if kind == 0:
            decision = 0
        elif kind == 1:
            decision = 1
        else:
            key = (code << 4) | slabel
            if self.dedup_c[v].count(key):
                decision = 2
            else:
                self.dedup_c[v].insert(key)
                vlabel = self.labels_c[v]
                if (msg_mask >> vlabel) & 1:
                    decision = 3
                else:
                    decision = 4
                    full = (fwd_code << 4) | vlabel
                    self.records_c[v][full] = <char> value
                    if not (
                        (fwd_mask | ((<long long> 1) << vlabel))
                        & self.fstar_mask
                    ):
                        if tag >= 0:
                            self.origin_checked += 1
                            if value != tag:
                                self.origin_violations += 1
                        else:
                            self.origin_unknown_faultfree += 1
                    item.value = <int> value
                    item.code = fwd_code
                    item.tag = tag
                    self.pending_c[v].push_back(item)
        if self.trace is not None:
            self.trace.append(
                ("recv", self.round_no, sender, v, value, code, decision, full, synth)
            )
