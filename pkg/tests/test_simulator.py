"""Trace serialization and sweep determinism tests."""

from __future__ import annotations

import json

import pytest

from byzcast import simulator
from byzcast.digraph import Digraph

K2 = Digraph(2, [(0, 1), (1, 0)])
K4 = Digraph(4, [(u, v) for u in range(4) for v in range(4) if u != v])

# K2, f=1, inputs (0,1), flip-relay corrupting node 1, seed 7 — both kernel
# implementations must keep producing exactly these bytes.
GOLDEN_SHA256 = "3890f243e2b202d8ad2b9fe50e37fb027d2fada5cd869b1483e84abdf98f927c"
GOLDEN_LINES = 54


class TestTraceSerialization:
    def test_header_names_the_run(self):
        rec = simulator.run_recorded(
            K2, 1, (0, 1), adversary="silent", faulty=(1,), seed=5
        )
        header = json.loads(rec.lines[0])
        assert header["ev"] == "header"
        assert header["n"] == 2
        assert header["edges"] == [[0, 1], [1, 0]]
        assert header["graph_sha256"] == simulator.graph_fingerprint(K2)
        assert header["f"] == 1
        assert header["fstar"] == [1]
        assert header["adversary"] == "silent"
        assert header["seed"] == 5
        assert header["inputs"] == [0, 1]
        assert header["labels"] == [0, 1]
        assert header["sim_edges"] == [[0, 1], [1, 0]]

    def test_every_line_is_canonical_json(self):
        rec = simulator.run_recorded(
            K4, 1, (1, 0, 1, 0), adversary="random", faulty=(2,), seed=3
        )
        kinds = set()
        for line in rec.lines:
            obj = json.loads(line)
            assert json.dumps(obj, sort_keys=True, separators=(",", ":")) == line
            kinds.add(obj["ev"])
        assert {"header", "phase", "flood", "emit", "recv", "gamma", "result"} <= kinds
        rules = {
            json.loads(line)["rule"]
            for line in rec.lines
            if json.loads(line)["ev"] == "recv"
        }
        assert rules <= {0, 1, 2, 3, 4}
        assert 4 in rules

    def test_identical_config_gives_identical_bytes(self):
        runs = [
            simulator.run_recorded(
                K4, 1, (0, 1, 1, 0), adversary="random", faulty=(3,), seed=11
            )
            for _ in range(2)
        ]
        assert runs[0].lines == runs[1].lines
        assert runs[0].sha256() == runs[1].sha256()

    def test_zero_corrupted_matches_fault_free_reference(self):
        # With nobody corrupted the adversary never runs: the event stream
        # must byte-match a plain run.
        armed = simulator.run_recorded(
            K4, 1, (0, 1, 0, 1), adversary="random", seed=9
        )
        plain = simulator.run_recorded(K4, 1, (0, 1, 0, 1))
        assert armed.lines[1:] == plain.lines[1:]

    def test_golden_trace_bytes_are_stable(self):
        rec = simulator.run_recorded(
            K2, 1, (0, 1), adversary="flip-relay", faulty=(1,), seed=7
        )
        assert len(rec.lines) == GOLDEN_LINES
        assert rec.sha256() == GOLDEN_SHA256

    def test_write_round_trips(self, tmp_path):
        rec = simulator.run_recorded(K2, 1, (1, 1))
        path = tmp_path / "trace.jsonl"
        rec.write(path)
        assert path.read_text(encoding="ascii").splitlines() == list(rec.lines)

    def test_labeled_run_headers_expose_topology(self):
        labels = (0, 1, 0, 1)
        sim_out = ((1,), (0,), (3,), (2,))
        rec = simulator.run_recorded(
            K2, 1, (0, 0, 1, 1), labels=labels, sim_out=sim_out
        )
        header = json.loads(rec.lines[0])
        assert header["labels"] == [0, 1, 0, 1]
        assert header["sim_edges"] == [[0, 1], [1, 0], [2, 3], [3, 2]]

    def test_labels_without_topology_rejected(self):
        with pytest.raises(ValueError):
            simulator.run_recorded(K2, 1, (0, 1), labels=(0, 1), sim_out=None)


class TestInputAssignments:
    def test_enumerates_honest_positions(self):
        vecs = simulator.input_assignments(3, (1,), "all")
        assert len(vecs) == 4
        assert all(vec[1] == 1 for vec in vecs)
        assert {(vec[0], vec[2]) for vec in vecs} == {
            (0, 0), (0, 1), (1, 0), (1, 1)
        }

    def test_fixed_modes(self):
        assert simulator.input_assignments(3, (), "zeros") == ((0, 0, 0),)
        assert simulator.input_assignments(3, (0,), "ones", faulty_fill=0) == (
            (0, 1, 1),
        )

    def test_sampling_caps_and_repeats(self):
        a = simulator.input_assignments(12, (), "all", cap=16, seed=4)
        b = simulator.input_assignments(12, (), "all", cap=16, seed=4)
        assert len(a) == 16 and a == b
        assert len(set(a)) == 16

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            simulator.input_assignments(3, (), "mystery")


class TestSweep:
    def test_grid_shape_and_indexing(self):
        tasks = simulator.sweep_tasks(K2, 1)
        # Fault sets (), (0,), (1,) give 4+2+2 input vectors, times 6
        # adversaries.
        assert len(tasks) == 6 * 8
        assert [t.index for t in tasks] == list(range(len(tasks)))
        seeds = {t.seed for t in tasks}
        assert len(seeds) == len(tasks)

    def test_grid_respects_explicit_choices(self):
        tasks = simulator.sweep_tasks(
            K4, 1,
            fault_sets=[(2,)], adversaries=["silent"], input_mode="zeros",
        )
        assert len(tasks) == 1
        assert tasks[0].fstar == (2,)
        assert tasks[0].inputs == (0, 0, 1, 0)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            simulator.sweep_tasks(K2, 1, fault_sets=[])

    def test_cap_enforced(self, monkeypatch):
        monkeypatch.setattr(simulator, "SWEEP_CAP", 10)
        with pytest.raises(ValueError):
            simulator.sweep_tasks(K2, 1)

    def test_all_verdicts_pass_on_k4(self):
        tasks = simulator.sweep_tasks(K4, 1, input_mode="all")
        outcomes = simulator.run_sweep(K4, 1, tasks)
        summary = simulator.summarize(outcomes)
        assert summary["runs"] == len(tasks)
        assert summary["agreement_failures"] == 0
        assert summary["validity_failures"] == 0

    def test_thread_count_never_changes_results(self):
        tasks = simulator.sweep_tasks(
            K4, 1, fault_sets=[(), (0,)], input_mode="all"
        )
        lone = simulator.run_sweep(K4, 1, tasks, threads=1, hash_traces=True)
        wide = simulator.run_sweep(K4, 1, tasks, threads=4, hash_traces=True)
        assert lone == wide
        assert all(oc.trace_sha256 is not None for oc in lone)

    def test_outcome_reports_rounds(self):
        tasks = simulator.sweep_tasks(
            K2, 1, fault_sets=[()], adversaries=["silent"], input_mode="zeros"
        )
        (outcome,) = simulator.run_sweep(K2, 1, tasks)
        assert outcome.rounds == 3 * 2 * 2
        assert outcome.outputs == (0, 0)
