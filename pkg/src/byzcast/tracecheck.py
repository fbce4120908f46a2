"""Independent replay validation for recorded run traces.

This module re-derives, from nothing but a trace's own lines, everything
the engine claims to have done, and reports every point where the trace
could not have come from a rule-abiding run:

* structure — the header line, phase order and fault-set enumeration,
  two floods per phase, round numbering, the all-emissions-then-all-
  deliveries order inside a round, and the final result line;
* local broadcast — each emission reaches exactly the sender's
  out-neighbors, every receiver sees identical content, and nothing is
  delivered that was never emitted;
* honest emissions — an uncorrupted node's round-one initiations carry
  its tracked bit, and its later emissions replay exactly what it
  accepted the round before, in order;
* receive rules — every delivery's recorded rule and stored path are
  recomputed from replayed per-receiver state: malformed content,
  non-paths of the graph, duplicates, receiver-on-path, acceptance;
* silent initiators — after round one, defaults substitute for exactly
  the expected silent sources, in the expected order;
* origins — an accepted record whose full path avoids every corrupted
  node must carry the value its initiator broadcast.

The replay keeps its own dictionaries and sets and decodes path codes
with its own reader; it deliberately shares no state or helpers with the
flood engine it audits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

_EMPTY = 1  # path-free sentinel code an initiation carries
_DEFAULT = 1  # value substituted for a silent expected initiator

_HEADER_KEYS = (
    "graph_sha256",
    "n",
    "edges",
    "f",
    "fstar",
    "adversary",
    "seed",
    "inputs",
    "labels",
    "sim_edges",
)


@dataclass(frozen=True)
class ReplayReport:
    """Everything the replay found, plus enough tallies to sanity-check."""

    violations: tuple[str, ...]
    complete: bool
    floods: int
    deliveries: int
    accepted: int
    origin_checked: int
    origin_defaulted: int

    @property
    def ok(self) -> bool:
        return self.complete and not self.violations


def replay_lines(lines: Sequence[str]) -> ReplayReport:
    """Validate one serialized run, given its lines in order."""
    replayer = _Replayer()
    for lineno, line in enumerate(lines, start=1):
        try:
            event = json.loads(line)
        except ValueError:
            replayer.fatal(lineno, "line is not valid JSON")
            break
        if not isinstance(event, dict):
            replayer.fatal(lineno, "line is not a JSON object")
            break
        replayer.feed(lineno, event)
        if replayer.dead:
            break
    return replayer.finish()


def replay_file(path) -> ReplayReport:
    with open(path, "r", encoding="ascii") as handle:
        return replay_lines(handle.read().splitlines())


def replay_recorded(recorded) -> ReplayReport:
    """Validate a RecordedRun (anything exposing ``.lines``)."""
    return replay_lines(recorded.lines)


def _fault_sets(n: int, f: int) -> list[tuple[int, ...]]:
    """Candidate fault sets, smallest first, bitmask order within a size."""
    by_size: list[list[tuple[int, ...]]] = [[] for _ in range(f + 1)]
    for mask in range(1 << n):
        bits = [u for u in range(n) if (mask >> u) & 1]
        if len(bits) <= f:
            by_size[len(bits)].append(tuple(bits))
    return [fs for size in by_size for fs in size]


class _Replayer:
    """Incremental trace consumer; collect with :meth:`finish`."""

    def __init__(self) -> None:
        self.violations: list[str] = []
        self.dead = False
        self.header: dict | None = None
        self.n = 0
        self.f = 0
        self.n_sim = 0
        self.labels: list[int] = []
        self.out_edges: list[set[int]] = []
        self.sim_out: list[tuple[int, ...]] = []
        self.sim_in: list[tuple[int, ...]] = []
        self.faulty: set[int] = set()
        self.fault_label_mask = 0
        self.gam: list[int] = []
        self.expected_phases: list[tuple[int, ...]] = []
        self.phase_pos = -1
        self.phase_skipped = False
        self.floods_in_phase = 0
        self.flood_b_mask = 0
        self.saw_result = False
        self.floods = 0
        self.deliveries = 0
        self.accepted = 0
        self.origin_checked = 0
        self.origin_defaulted = 0
        # Per-flood replay state, live between a flood line and its close.
        self.in_flood = False
        self.init_mask = 0
        self.round = 0
        self.dedup: list[set[int]] = []
        self.heard: list[set[int]] = []
        self.expect_emit: list[list[tuple]] = []
        self.emit_pos: list[int] = []
        self.accepted_now: list[list[tuple]] = []
        self.emitted: list[tuple[int, object, object, int]] = []
        self.emit_tags: dict[int, list[int]] = {}
        self.recv_queue: list[tuple[int, int, object, object, int]] = []
        self.recv_pos = 0
        self.synth_seen: list[tuple] = []

    # -- reporting ---------------------------------------------------------

    def flag(self, lineno: int, text: str) -> None:
        self.violations.append("line %d: %s" % (lineno, text))

    def fatal(self, lineno: int, text: str) -> None:
        self.flag(lineno, text)
        self.dead = True

    def finish(self) -> ReplayReport:
        if not self.dead:
            if self.header is None:
                self.fatal(0, "trace is empty")
            elif not self.saw_result:
                self.fatal(0, "trace ends without a result line")
        return ReplayReport(
            violations=tuple(self.violations),
            complete=not self.dead,
            floods=self.floods,
            deliveries=self.deliveries,
            accepted=self.accepted,
            origin_checked=self.origin_checked,
            origin_defaulted=self.origin_defaulted,
        )

    # -- dispatch ----------------------------------------------------------

    def feed(self, lineno: int, event: dict) -> None:
        kind = event.get("ev")
        if self.header is None:
            if kind != "header":
                self.fatal(lineno, "first line must be the run header")
                return
            self._load_header(lineno, event)
            return
        if self.saw_result:
            self.fatal(lineno, "event after the result line")
            return
        if kind == "phase":
            self._close_flood(lineno)
            self._on_phase(lineno, event)
        elif kind == "flood":
            self._close_flood(lineno)
            self._on_flood(lineno, event)
        elif kind == "emit":
            self._on_emit(lineno, event)
        elif kind == "recv":
            self._on_recv(lineno, event)
        elif kind == "update":
            self._on_update(lineno, event)
        elif kind == "nosupport":
            self._on_nosupport(lineno, event)
        elif kind == "gamma":
            self._close_flood(lineno)
            self._on_gamma(lineno, event)
        elif kind == "result":
            self._close_flood(lineno)
            self._on_result(lineno, event)
        elif kind == "header":
            self.fatal(lineno, "second header line")
        else:
            self.fatal(lineno, "unknown event kind %r" % (kind,))

    # -- header ------------------------------------------------------------

    def _load_header(self, lineno: int, event: dict) -> None:
        missing = [key for key in _HEADER_KEYS if key not in event]
        if missing:
            self.fatal(lineno, "header lacks %s" % ", ".join(missing))
            return
        n = event["n"]
        labels = event["labels"]
        inputs = event["inputs"]
        if not isinstance(n, int) or n < 1:
            self.fatal(lineno, "header node count is not a positive int")
            return
        if len(labels) != len(inputs):
            self.fatal(lineno, "labels and inputs disagree on network size")
            return
        if any(not isinstance(x, int) or not 0 <= x < n for x in labels):
            self.fatal(lineno, "label outside the graph's node range")
            return
        self.header = event
        self.n = n
        self.f = int(event["f"])
        self.n_sim = len(labels)
        self.labels = [int(x) for x in labels]
        self.out_edges = [set() for _ in range(n)]
        for u, v in event["edges"]:
            self.out_edges[u].add(v)
        outs: list[list[int]] = [[] for _ in range(self.n_sim)]
        ins: list[list[int]] = [[] for _ in range(self.n_sim)]
        for s, d in event["sim_edges"]:
            if not (0 <= s < self.n_sim and 0 <= d < self.n_sim):
                self.fatal(lineno, "sim edge outside the network")
                return
            outs[s].append(d)
            ins[d].append(s)
        self.sim_out = [tuple(sorted(row)) for row in outs]
        self.sim_in = [tuple(sorted(row)) for row in ins]
        self.faulty = set(int(s) for s in event["fstar"])
        for s in self.faulty:
            if not 0 <= s < self.n_sim:
                self.fatal(lineno, "corrupted sim outside the network")
                return
            self.fault_label_mask |= 1 << self.labels[s]
        if any(x not in (0, 1) for x in inputs):
            self.fatal(lineno, "header inputs must be bits")
            return
        self.gam = [int(x) for x in inputs]
        self.expected_phases = _fault_sets(n, self.f)

    # -- protocol-level events ---------------------------------------------

    def _on_phase(self, lineno: int, event: dict) -> None:
        if 0 <= self.phase_pos and self.floods_in_phase != 2:
            self.flag(lineno, "previous phase ran %d floods, wants 2"
                      % self.floods_in_phase)
        self.phase_pos += 1
        self.floods_in_phase = 0
        if self.phase_pos >= len(self.expected_phases):
            self.fatal(lineno, "more phases than candidate fault sets")
            return
        want = list(self.expected_phases[self.phase_pos])
        if event.get("phase") != self.phase_pos:
            self.flag(lineno, "phase index %r, expected %d"
                      % (event.get("phase"), self.phase_pos))
        if event.get("fault_set") != want:
            self.flag(lineno, "phase fault set %r, expected %r"
                      % (event.get("fault_set"), want))
        self.phase_skipped = bool(event.get("skipped"))

    def _on_flood(self, lineno: int, event: dict) -> None:
        if self.phase_pos < 0:
            self.fatal(lineno, "flood before any phase line")
            return
        if event.get("phase") != self.phase_pos:
            self.flag(lineno, "flood names phase %r during phase %d"
                      % (event.get("phase"), self.phase_pos))
        step = event.get("step")
        mask = event.get("init_mask")
        if not isinstance(mask, int) or mask < 0 or mask >> self.n:
            self.flag(lineno, "flood init mask %r out of range" % (mask,))
            mask = 0
        want_step = ("b", "e")[self.floods_in_phase] \
            if self.floods_in_phase < 2 else None
        if step != want_step:
            self.flag(lineno, "flood step %r, expected %r" % (step, want_step))
        self.floods_in_phase += 1
        if self.phase_skipped and mask:
            self.flag(lineno, "skipped phase floods with a non-empty mask")
        if step == "b":
            self.flood_b_mask = mask
        elif step == "e" and not self.phase_skipped:
            if mask == 0:
                self.flag(lineno, "live phase reflood has an empty mask")
            extra = mask & ~self.flood_b_mask
            if extra:
                self.flag(lineno, "reflood mask adds nodes %r absent from "
                          "the first flood" % (extra,))
            fmask = 0
            for u in self.expected_phases[self.phase_pos]:
                fmask |= 1 << u
            border = self.flood_b_mask & ~mask
            if border & ~fmask:
                self.flag(lineno, "first-flood extras %r stray outside the "
                          "phase fault set" % (border & ~fmask,))
        # open the flood
        self.in_flood = True
        self.floods += 1
        self.init_mask = mask
        self.round = 0
        self.dedup = [set() for _ in range(self.n_sim)]
        self.heard = [set() for _ in range(self.n_sim)]
        self.expect_emit = [[] for _ in range(self.n_sim)]
        for s in range(self.n_sim):
            if (mask >> self.labels[s]) & 1 and s not in self.faulty:
                self.expect_emit[s].append(("init",))
        self._reset_round_buffers()
        self.accepted_now = [[] for _ in range(self.n_sim)]

    def _on_update(self, lineno: int, event: dict) -> None:
        sim = event.get("sim")
        value = event.get("value")
        if not isinstance(sim, int) or not 0 <= sim < self.n_sim:
            self.flag(lineno, "update names sim %r" % (sim,))
            return
        if value not in (0, 1):
            self.flag(lineno, "update value %r is not a bit" % (value,))
            return
        self.gam[sim] = value

    def _on_nosupport(self, lineno: int, event: dict) -> None:
        sim = event.get("sim")
        if not isinstance(sim, int) or not 0 <= sim < self.n_sim:
            self.flag(lineno, "kept-bit event names sim %r" % (sim,))

    def _on_gamma(self, lineno: int, event: dict) -> None:
        values = event.get("values")
        if values != self.gam:
            self.flag(lineno, "phase-end bits %r disagree with the replayed "
                      "updates %r" % (values, self.gam))

    def _on_result(self, lineno: int, event: dict) -> None:
        if 0 <= self.phase_pos and self.floods_in_phase != 2:
            self.flag(lineno, "last phase ran %d floods, wants 2"
                      % self.floods_in_phase)
        self.saw_result = True
        want_phases = len(self.expected_phases)
        if self.phase_pos + 1 != want_phases:
            self.flag(lineno, "ran %d phases, wants %d"
                      % (self.phase_pos + 1, want_phases))
        want_rounds = 2 * self.n * want_phases
        if event.get("rounds") != want_rounds:
            self.flag(lineno, "result claims %r rounds, wants %d"
                      % (event.get("rounds"), want_rounds))
        outputs = event.get("outputs")
        if not isinstance(outputs, list) or len(outputs) != self.n_sim:
            self.flag(lineno, "result outputs do not cover the network")
        elif outputs != self.gam:
            self.flag(lineno, "result outputs %r disagree with the replayed "
                      "bits %r" % (outputs, self.gam))

    # -- flood rounds ------------------------------------------------------

    def _reset_round_buffers(self) -> None:
        self.emitted = []
        self.emit_tags = {}
        self.emit_pos = [0] * self.n_sim
        self.recv_queue = []
        self.recv_pos = 0
        self.synth_seen = []

    def _open_round(self, lineno: int, rnd: object) -> bool:
        """Advance to round ``rnd``; True when events may proceed."""
        if not self.in_flood:
            self.flag(lineno, "message event outside any flood")
            return False
        if not isinstance(rnd, int) or rnd < 1:
            self.flag(lineno, "round %r is not a positive int" % (rnd,))
            return False
        if rnd > self.n:
            self.flag(lineno, "round %d exceeds the %d-round flood"
                      % (rnd, self.n))
            return False
        if rnd < self.round:
            self.fatal(lineno, "round went backwards (%d after %d)"
                       % (rnd, self.round))
            return False
        while self.round < rnd:
            if self.round:
                self._close_round(lineno)
            self.round += 1
            self._reset_round_buffers()
        return True

    def _close_round(self, lineno: int) -> None:
        """Verify the finished round delivered and forwarded completely."""
        if self.recv_pos != len(self.recv_queue):
            self.flag(lineno, "round %d is missing %d deliveries"
                      % (self.round, len(self.recv_queue) - self.recv_pos))
        if self.round == 1:
            self._check_synthetics(lineno)
        for s in range(self.n_sim):
            if s in self.faulty:
                continue
            want = len(self.expect_emit[s])
            if self.emit_pos[s] != want:
                self.flag(lineno, "round %d: honest sim %d emitted %d of "
                          "its %d queued items"
                          % (self.round, s, self.emit_pos[s], want))
        self.expect_emit = [
            list(self.accepted_now[s]) for s in range(self.n_sim)
        ]
        self.accepted_now = [[] for _ in range(self.n_sim)]

    def _close_flood(self, lineno: int) -> None:
        if not self.in_flood:
            return
        if self.round:
            self._close_round(lineno)
        # Rounds with no traffic at the tail still happened; honest nodes
        # must have had nothing queued for them.
        rnd = self.round
        while rnd < self.n:
            rnd += 1
            for s in range(self.n_sim):
                if s in self.faulty:
                    continue
                if self.expect_emit[s]:
                    self.flag(lineno, "honest sim %d still held %d items "
                              "when the flood went silent in round %d"
                              % (s, len(self.expect_emit[s]), rnd))
                    break
            else:
                self.expect_emit = [[] for _ in range(self.n_sim)]
                continue
            break
        self.in_flood = False
        self.round = 0

    # -- emissions ---------------------------------------------------------

    def _on_emit(self, lineno: int, event: dict) -> None:
        if not self._open_round(lineno, event.get("round")):
            return
        if self.recv_pos or self.synth_seen:
            self.flag(lineno, "emission after round %d deliveries began"
                      % self.round)
        sim = event.get("sim")
        if not isinstance(sim, int) or not 0 <= sim < self.n_sim:
            self.flag(lineno, "emission from unknown sim %r" % (sim,))
            return
        if self.emitted and sim < self.emitted[-1][0]:
            self.flag(lineno, "emissions out of sim order (%d after %d)"
                      % (sim, self.emitted[-1][0]))
        value = event.get("value")
        code = event.get("code")
        if sim in self.faulty:
            tag = -1
        else:
            pos = self.emit_pos[sim]
            queue = self.expect_emit[sim]
            if pos >= len(queue):
                self.flag(lineno, "honest sim %d emitted more than it "
                          "accepted last round" % sim)
                tag = -1
            else:
                item = queue[pos]
                if item == ("init",):
                    if code != _EMPTY or value != self.gam[sim]:
                        self.flag(lineno, "initiator %d sent (%r, %r), its "
                                  "bit is %d" % (sim, value, code,
                                                 self.gam[sim]))
                    tag = self.gam[sim]
                else:
                    want_value, want_code, tag = item
                    if value != want_value or code != want_code:
                        self.flag(lineno, "honest sim %d forwarded (%r, %r) "
                                  "instead of (%r, %r)"
                                  % (sim, value, code, want_value, want_code))
            self.emit_pos[sim] = pos + 1
        self.emit_tags.setdefault(sim, []).append(tag)
        self.emitted.append((sim, value, code, tag))
        for v in self.sim_out[sim]:
            self.recv_queue.append((sim, v, value, code, tag))

    # -- deliveries --------------------------------------------------------

    def _decode_path(self, code: object) -> list[int] | None:
        """Own reading of a path code; None when the shape is invalid."""
        if not isinstance(code, int) or isinstance(code, bool):
            return None
        if code < _EMPTY:
            return None
        bits = code.bit_length() - 1
        if bits % 4 or bits > 60:  # wire format caps paths at fifteen hops
            return None
        nodes = []
        probe = code
        while probe > _EMPTY:
            node = probe & 15
            if node >= self.n:
                return None
            nodes.append(node)
            probe >>= 4
        nodes.reverse()  # stored most-recent-first; return walk order
        return nodes

    def _judge(self, receiver: int, slabel: int, value: object,
               code: object) -> tuple[int, int]:
        """Recompute the rule decision and stored path for one delivery."""
        path = self._decode_path(code)
        if value not in (0, 1) or isinstance(value, bool) or path is None:
            return 0, 0
        walk = path + [slabel]
        if len(set(walk)) != len(walk):
            return 1, 0
        for a, b in zip(walk, walk[1:]):
            if b not in self.out_edges[a]:
                return 1, 0
        key = (code << 4) | slabel
        if key in self.dedup[receiver]:
            return 2, 0
        self.dedup[receiver].add(key)
        vlabel = self.labels[receiver]
        if vlabel in path:
            return 3, 0
        full = (((code << 4) | slabel) << 4) | vlabel
        return 4, full

    def _on_recv(self, lineno: int, event: dict) -> None:
        if not self._open_round(lineno, event.get("round")):
            return
        self.deliveries += 1
        sender = event.get("from")
        receiver = event.get("sim")
        if not isinstance(sender, int) or not 0 <= sender < self.n_sim \
                or not isinstance(receiver, int) \
                or not 0 <= receiver < self.n_sim:
            self.flag(lineno, "delivery between unknown sims %r -> %r"
                      % (sender, receiver))
            return
        if event.get("synth"):
            if self.round != 1:
                self.flag(lineno, "substitute delivery in round %d"
                          % self.round)
                return
            self.synth_seen.append((lineno, event))
            return
        if self.synth_seen:
            self.flag(lineno, "real delivery after substitutes began")
        if self.recv_pos >= len(self.recv_queue):
            self.flag(lineno, "delivery %d -> %d was never emitted"
                      % (sender, receiver))
            return
        want_s, want_v, want_value, want_code, tag = \
            self.recv_queue[self.recv_pos]
        self.recv_pos += 1
        if (sender, receiver) != (want_s, want_v):
            self.flag(lineno, "delivery %d -> %d out of order, expected "
                      "%d -> %d" % (sender, receiver, want_s, want_v))
            return
        value = event.get("value")
        code = event.get("code")
        if value != want_value or code != want_code:
            self.flag(lineno, "receiver %d heard (%r, %r) where sim %d "
                      "broadcast (%r, %r)"
                      % (receiver, value, code, sender, want_value,
                         want_code))
        # Only a well-formed initiation (b, empty path) counts as having
        # flooded; after garbage alone, receivers still owe a default.
        if (
            self.round == 1
            and want_value in (0, 1)
            and want_code == _EMPTY
        ):
            self.heard[receiver].add(sender)
        rule, full = self._judge(
            receiver, self.labels[sender], want_value, want_code
        )
        if event.get("rule") != rule:
            self.flag(lineno, "delivery %d -> %d recorded rule %r, replay "
                      "says %d" % (sender, receiver, event.get("rule"), rule))
            return
        if event.get("full") != full:
            self.flag(lineno, "stored path %r, replay says %d"
                      % (event.get("full"), full))
            return
        if rule == 4:
            self._accept(lineno, receiver, want_value, (want_code << 4)
                         | self.labels[sender], full, tag, synth=False)

    def _accept(self, lineno: int, receiver: int, value: int, fwd: int,
                full: int, tag: int, synth: bool) -> None:
        self.accepted += 1
        self.accepted_now[receiver].append((value, fwd, tag))
        # The full path can run a nibble past the forwarding cap (receiver
        # appended), so mask its nodes directly instead of re-decoding.
        mask = 0
        probe = full
        while probe > _EMPTY:
            mask |= 1 << (probe & 15)
            probe >>= 4
        if mask & self.fault_label_mask:
            return
        if synth:
            self.origin_defaulted += 1
        elif tag < 0:
            self.flag(lineno, "fault-free path %d has no traceable origin"
                      % full)
        else:
            self.origin_checked += 1
            if value != tag:
                self.flag(lineno, "fault-free path %d delivered %r, its "
                          "origin broadcast %d" % (full, value, tag))

    # -- silent-initiator substitution --------------------------------------

    def _check_synthetics(self, lineno: int) -> None:
        expected: list[tuple[int, int, int, int]] = []
        for v in range(self.n_sim):
            for u in self.sim_in[v]:
                ulabel = self.labels[u]
                if (self.init_mask >> ulabel) & 1 and u not in self.heard[v]:
                    rule, full = self._judge(v, ulabel, _DEFAULT, _EMPTY)
                    expected.append((u, v, rule, full))
        seen = list(self.synth_seen)
        for (u, v, rule, full), actual in zip(expected, seen):
            actual_lineno, event = actual
            got = (event.get("from"), event.get("sim"), event.get("rule"),
                   event.get("full"))
            if got != (u, v, rule, full) or event.get("value") != _DEFAULT \
                    or event.get("code") != _EMPTY:
                self.flag(actual_lineno, "substitute delivery %r, expected "
                          "default for silent %d -> %d rule %d"
                          % (got, u, v, rule))
            elif rule == 4:
                self._accept(actual_lineno, v, _DEFAULT,
                             (_EMPTY << 4) | self.labels[u], full, -1,
                             synth=True)
        if len(seen) < len(expected):
            miss = expected[len(seen)]
            self.flag(lineno, "no substitute for silent initiator "
                      "%d -> %d" % (miss[0], miss[1]))
        for extra_lineno, event in seen[len(expected):]:
            self.flag(extra_lineno, "substitute %r -> %r was not owed"
                      % (event.get("from"), event.get("sim")))
