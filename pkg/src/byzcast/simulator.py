"""Recorded runs and deterministic sweeps over the consensus algorithm.

A recorded run serializes its trace to line-delimited JSON: one header
object naming the graph (with a content hash), the fault budget, the
corrupted set, the adversary, the seed, and the inputs, followed by one
object per event — floods, emissions, per-delivery accept/discard
decisions with their rule number, value updates, and the final outputs.
Serialization is canonical (sorted keys, fixed separators), so a fixed
configuration always produces byte-identical lines; golden-trace tests
pin that.

Sweeps enumerate (corrupted set, adversary, inputs) combinations as an
explicit task list, run them with no shared mutable state, and aggregate
by task index, so results are identical no matter how many worker
threads execute them.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

from .adversaries import adversary_names, make_adversary
from .conditions import fault_subsets
from .digraph import Digraph
from .protocol import ProtocolStatic, RunResult, run_on_network

SWEEP_CAP = 10**6
INPUT_SAMPLE_CAP = 256


def graph_fingerprint(g: Digraph) -> str:
    """Content hash of a graph: sha-256 over node count and sorted edges."""
    edges = sorted(
        (u, v) for u in range(g.n) for v in g.out(u)
    )
    blob = "%d|%s" % (g.n, ";".join("%d,%d" % e for e in edges))
    return hashlib.sha256(blob.encode("ascii")).hexdigest()


def _encode_event(event: tuple) -> dict:
    tag = event[0]
    if tag == "phase":
        _, index, fault_set, skipped = event
        return {
            "ev": "phase",
            "phase": index,
            "fault_set": list(fault_set),
            "skipped": skipped,
        }
    if tag == "flood":
        _, index, step, init_mask = event
        return {"ev": "flood", "phase": index, "step": step, "init_mask": init_mask}
    if tag == "emit":
        _, rnd, sim, value, code = event
        return {"ev": "emit", "round": rnd, "sim": sim, "value": value, "code": code}
    if tag == "recv":
        _, rnd, sender, sim, value, code, decision, full, synth = event
        return {
            "ev": "recv",
            "round": rnd,
            "from": sender,
            "sim": sim,
            "value": value,
            "code": code,
            "rule": decision,
            "full": full,
            "synth": synth,
        }
    if tag == "update":
        _, phase, step, sim, delta, amask, witnesses = event
        return {
            "ev": "update",
            "phase": phase,
            "step": step,
            "sim": sim,
            "value": delta,
            "side_mask": amask,
            "witnesses": list(witnesses),
        }
    if tag == "nosupport":
        _, phase, sim = event
        return {"ev": "nosupport", "phase": phase, "sim": sim}
    if tag == "gamma":
        _, index, values = event
        return {"ev": "gamma", "phase": index, "values": list(values)}
    if tag == "result":
        _, outputs, rounds = event
        return {"ev": "result", "outputs": list(outputs), "rounds": rounds}
    raise ValueError("unknown trace event %r" % (tag,))


def _dump(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def trace_lines(header: dict, events: Iterable[tuple]) -> list[str]:
    """Serialize a run header plus raw engine events to JSONL lines."""
    out = [_dump({"ev": "header", **header})]
    for event in events:
        out.append(_dump(_encode_event(event)))
    return out


@dataclass(frozen=True)
class RecordedRun:
    """A finished run bundled with its serialized trace."""

    result: RunResult
    lines: tuple[str, ...]

    def write(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            for line in self.lines:
                fh.write(line)
                fh.write("\n")

    def sha256(self) -> str:
        blob = "\n".join(self.lines) + "\n"
        return hashlib.sha256(blob.encode("ascii")).hexdigest()


def run_recorded(
    g: Digraph,
    f: int,
    inputs: Sequence[int],
    adversary: str | None = None,
    faulty: Iterable[int] = (),
    seed: int = 0,
    *,
    labels: Sequence[int] | None = None,
    sim_out: Sequence[Iterable[int]] | None = None,
    static: ProtocolStatic | None = None,
) -> RecordedRun:
    """Run once with tracing on and serialize the whole event stream.

    ``labels``/``sim_out`` switch to a labeled network run (both or
    neither); the default is the algorithm on ``g`` itself.
    """
    if (labels is None) != (sim_out is None):
        raise ValueError("labels and sim_out go together")
    if labels is None:
        labels = tuple(range(g.n))
        sim_out = [g.out(v) for v in range(g.n)]
    faulty = tuple(sorted(set(int(x) for x in faulty)))
    adv = make_adversary(adversary, seed) if adversary is not None else None
    events: list[tuple] = []
    result = run_on_network(
        g, f, labels, sim_out, inputs, faulty, adv,
        static=static, trace=events,
    )
    header = {
        "graph_sha256": graph_fingerprint(g),
        "n": g.n,
        "edges": sorted([u, v] for u in range(g.n) for v in g.out(u)),
        "f": f,
        "fstar": list(faulty),
        "adversary": adversary,
        "seed": seed,
        "inputs": list(int(x) for x in inputs),
        "labels": list(labels),
        "sim_edges": sorted(
            [s, v] for s, outs in enumerate(sim_out) for v in outs
        ),
    }
    return RecordedRun(result=result, lines=tuple(trace_lines(header, events)))


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepTask:
    """One independent run of a sweep: who is corrupted, how, with what."""

    index: int
    fstar: tuple[int, ...]
    adversary: str
    inputs: tuple[int, ...]
    seed: int


@dataclass(frozen=True)
class RunOutcome:
    """Aggregated verdicts of one sweep task."""

    task: SweepTask
    outputs: tuple[int, ...]
    agreement: bool
    validity: bool
    rounds: int
    no_support: int
    trace_sha256: str | None


def _task_seed(master_seed: int, fstar, adversary, inputs) -> int:
    key = "%d|%s|%s|%s" % (
        master_seed,
        ",".join(map(str, fstar)),
        adversary,
        "".join(map(str, inputs)),
    )
    return int.from_bytes(
        hashlib.sha256(key.encode("ascii")).digest()[:8], "big"
    )


def input_assignments(
    n: int,
    fstar: tuple[int, ...],
    mode: str = "all",
    *,
    cap: int = INPUT_SAMPLE_CAP,
    seed: int = 0,
    faulty_fill: int = 1,
) -> tuple[tuple[int, ...], ...]:
    """Input vectors varying the non-corrupted positions.

    ``all`` enumerates every honest combination, falling back to a seeded
    sample of ``cap`` distinct combinations when there are more than that;
    ``zeros``/``ones`` fix every honest input. Corrupted positions always
    hold ``faulty_fill`` (their value only feeds the adversary's shadow).
    """
    honest = [v for v in range(n) if v not in fstar]
    if mode == "zeros":
        combos: Iterable[tuple[int, ...]] = [(0,) * len(honest)]
    elif mode == "ones":
        combos = [(1,) * len(honest)]
    elif mode == "all":
        total = 1 << len(honest)
        if total <= cap:
            combos = itertools.product((0, 1), repeat=len(honest))
        else:
            rng = random.Random(seed)
            picked = set()
            while len(picked) < cap:
                picked.add(rng.getrandbits(len(honest)))
            combos = [
                tuple((bits >> i) & 1 for i in range(len(honest)))
                for bits in sorted(picked)
            ]
    else:
        raise ValueError("unknown input mode %r" % mode)
    out = []
    for combo in combos:
        vec = [faulty_fill] * n
        for v, bit in zip(honest, combo):
            vec[v] = bit
        out.append(tuple(vec))
    return tuple(out)


def sweep_tasks(
    g: Digraph,
    f: int,
    *,
    fault_sets: Iterable[tuple[int, ...]] | str = "all",
    adversaries: Iterable[str] | str = "suite",
    input_mode: str = "all",
    input_cap: int = INPUT_SAMPLE_CAP,
    faulty_fill: int = 1,
    seed: int = 0,
) -> tuple[SweepTask, ...]:
    """Build the deterministic task grid of a sweep; fails fast on the cap."""
    if fault_sets == "all":
        fault_sets = tuple(fault_subsets(g.n, f))
    else:
        fault_sets = tuple(tuple(sorted(fs)) for fs in fault_sets)
    if adversaries == "suite":
        adversaries = adversary_names()
    else:
        adversaries = tuple(adversaries)
    tasks: list[SweepTask] = []
    for fstar in fault_sets:
        vectors = input_assignments(
            g.n, fstar, input_mode,
            cap=input_cap, seed=seed, faulty_fill=faulty_fill,
        )
        for name in adversaries:
            for vec in vectors:
                tasks.append(
                    SweepTask(
                        index=len(tasks),
                        fstar=fstar,
                        adversary=name,
                        inputs=vec,
                        seed=_task_seed(seed, fstar, name, vec),
                    )
                )
                if len(tasks) > SWEEP_CAP:
                    raise ValueError(
                        "sweep exceeds the %d-run cap" % SWEEP_CAP
                    )
    if not tasks:
        raise ValueError("sweep space is empty")
    return tuple(tasks)


def _judge(result: RunResult, task: SweepTask) -> tuple[bool, bool]:
    honest = [
        (result.outputs[v], inp)
        for v, inp in enumerate(task.inputs)
        if v not in task.fstar
    ]
    outs = {o for o, _ in honest}
    agreement = len(outs) <= 1
    ins = {i for _, i in honest}
    validity = len(ins) != 1 or outs <= ins
    return agreement, validity


def execute_task(
    g: Digraph,
    f: int,
    task: SweepTask,
    *,
    static: ProtocolStatic | None = None,
    hash_traces: bool = False,
) -> RunOutcome:
    """Run one task; optionally hash its serialized trace for comparison."""
    if hash_traces:
        recorded = run_recorded(
            g, f, task.inputs, task.adversary, task.fstar,
            task.seed, static=static,
        )
        result = recorded.result
        digest = recorded.sha256()
    else:
        adv = make_adversary(task.adversary, task.seed)
        result = run_on_network(
            g, f, range(g.n), [g.out(v) for v in range(g.n)],
            task.inputs, task.fstar, adv, static=static,
        )
        digest = None
    agreement, validity = _judge(result, task)
    return RunOutcome(
        task=task,
        outputs=result.outputs,
        agreement=agreement,
        validity=validity,
        rounds=result.rounds,
        no_support=len(result.no_support),
        trace_sha256=digest,
    )


def run_sweep(
    g: Digraph,
    f: int,
    tasks: Sequence[SweepTask],
    *,
    threads: int = 1,
    static: ProtocolStatic | None = None,
    hash_traces: bool = False,
) -> tuple[RunOutcome, ...]:
    """Execute tasks (optionally on worker threads) and aggregate by index.

    Every task is self-contained — its own adversary instance, its own
    engine — so the thread count changes only scheduling, never results.
    """
    if static is None:
        static = ProtocolStatic.build(g, f)
    if threads <= 1:
        return tuple(
            execute_task(g, f, t, static=static, hash_traces=hash_traces)
            for t in tasks
        )
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(
                execute_task, g, f, t, static=static, hash_traces=hash_traces
            )
            for t in tasks
        ]
        outcomes = [fut.result() for fut in futures]
    outcomes.sort(key=lambda oc: oc.task.index)
    return tuple(outcomes)


def summarize(outcomes: Sequence[RunOutcome]) -> dict:
    """Aggregate verdict counts used by reports."""
    return {
        "runs": len(outcomes),
        "agreement_failures": sum(1 for oc in outcomes if not oc.agreement),
        "validity_failures": sum(1 for oc in outcomes if not oc.validity),
        "no_support_events": sum(oc.no_support for oc in outcomes),
    }
