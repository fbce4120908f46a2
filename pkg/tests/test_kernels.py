"""Differential tests pinning the compiled kernels to the pure twins."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings

from byzcast import _fallback, kernels
from byzcast.digraph import Digraph
from byzcast.flooding import path_code

from test_flooding import flood_cases

_speedups = pytest.importorskip(
    "byzcast._speedups", reason="compiled kernels not built"
)


def _core_pair(n, edges, labels, sim_out, faulty, fstar_mask):
    g = Digraph(n, edges)
    masks = tuple(g.out_mask(v) for v in range(g.n))
    return tuple(
        mod.FloodCore(g.n, masks, labels, sim_out, faulty, fstar_mask)
        for mod in (_fallback, _speedups)
    )


def _drive(core, schedule, init_mask, gammas, rounds):
    trace = []
    core.set_trace(trace)
    core.begin_flood(init_mask, gammas)
    for rnd in range(1, rounds + 1):
        core.advance(schedule.get(rnd))
    return trace


class TestFloodCoreParity:
    @settings(max_examples=200, deadline=None)
    @given(case=flood_cases())
    def test_twins_agree_on_random_schedules(self, case):
        g, init_mask, gammas, faulty, schedules = case
        masks = tuple(g.out_mask(v) for v in range(g.n))
        labels = tuple(range(g.n))
        sim_out = [g.out(v) for v in range(g.n)]
        fstar = sum(1 << v for v in faulty)
        results = []
        for mod in (_fallback, _speedups):
            core = mod.FloodCore(g.n, masks, labels, sim_out, faulty, fstar)
            trace = _drive(core, schedules, init_mask, gammas, g.n)
            results.append((core, trace))
        (pure, pure_trace), (cxx, cxx_trace) = results
        assert pure_trace == cxx_trace
        for v in range(g.n):
            assert dict(pure.records_of(v)) == dict(cxx.records_of(v))
            assert pure.pending_of(v) == cxx.pending_of(v)
        assert pure.origin_checked == cxx.origin_checked
        assert pure.origin_violations == cxx.origin_violations
        assert pure.origin_unknown_faultfree == cxx.origin_unknown_faultfree
        assert pure.rounds_total == cxx.rounds_total

    def test_huge_adversary_integers_stay_malformed(self):
        # Values far outside the 64-bit range must classify malformed while
        # the trace still shows them verbatim.
        bad = [
            (1 << 200, path_code((0,))),
            (1, 1 << 200),
            (-(1 << 99), -(1 << 99)),
            (1, path_code((0,))),
        ]
        pure, cxx = _core_pair(
            3, [(0, 1), (1, 2)], (0, 1, 2),
            [(1,), (2,), ()], (1,), 1 << 1,
        )
        traces = []
        for core in (pure, cxx):
            trace = _drive(core, {2: {1: bad}}, 1 << 0, [0, 1, 1], 3)
            traces.append(trace)
        assert traces[0] == traces[1]
        assert dict(pure.records_of(2)) == dict(cxx.records_of(2))
        # The only well-formed forgery is the last pair.
        assert dict(cxx.records_of(2)) == {path_code((0, 1, 2)): 1}

    def test_silent_initiator_substitution_matches(self):
        pure, cxx = _core_pair(
            4, [(0, 1), (0, 2), (1, 3), (2, 3)], (0, 1, 2, 3),
            [(1, 2), (3,), (3,), ()], (0,), 1 << 0,
        )
        traces = [
            _drive(core, {}, 1 << 0, [1, 0, 0, 0], 4) for core in (pure, cxx)
        ]
        assert traces[0] == traces[1]
        assert dict(pure.records_of(3)) == dict(cxx.records_of(3))

    def test_node_cap_rejected_identically(self):
        for mod in (_fallback, _speedups):
            with pytest.raises(ValueError):
                mod.FloodCore(16, (0,) * 16, tuple(range(16)),
                              [()] * 16, (), 0)


class TestDisjointCountParity:
    def test_random_graphs_agree(self):
        rng = random.Random(20240817)
        for _ in range(300):
            n = rng.randint(2, 8)
            edges = [
                (u, v)
                for u in range(n)
                for v in range(n)
                if u != v and rng.random() < 0.4
            ]
            g = Digraph(n, edges)
            masks = tuple(g.out_mask(v) for v in range(g.n))
            target = rng.randrange(n)
            source_mask = rng.randrange(1, 1 << n) & ~(1 << target)
            if not source_mask:
                continue
            excluded = rng.randrange(1 << n) & ~(1 << target) & ~source_mask
            cap = rng.randint(1, n + 1)
            pure = _fallback.count_vertex_disjoint(
                n, masks, source_mask, target, excluded, cap
            )
            fast = _speedups.count_vertex_disjoint(
                n, masks, source_mask, target, excluded, cap
            )
            assert pure == fast

    def test_kernel_selection_reports_both(self):
        assert set(kernels.available()) == {"compiled", "pure"}
