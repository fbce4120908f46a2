"""Compare the compiled and pure kernel implementations.

Times the two hot paths on fixed seeded workloads and cross-checks that
both implementations produce identical results:

* condition checking on a dense 8-node digraph (disjoint-path counting),
* a full adversarial sweep on a 5-node digraph (flood processing).

Run from a checkout with the package importable::

    python3 scripts/benchmark_kernels.py [--repeat N]

The compiled extension is used when built; otherwise only the pure
implementation is timed and the comparison is skipped.
"""

from __future__ import annotations

import argparse
import time
from typing import Sequence

from byzcast import kernels
from byzcast.conditions import check_sc
from byzcast.generators import random_digraph
from byzcast.protocol import ProtocolStatic
from byzcast.simulator import run_sweep, sweep_tasks


def satisfying_graph(n: int, p: float):
    """First seeded random digraph of the given shape that satisfies
    the partition condition at f=1, so the sweep workload exercises the
    protocol the way real runs do."""
    for seed in range(200):
        g = random_digraph(n, p, seed=seed)
        if check_sc(g, 1).holds:
            return g, seed
    raise RuntimeError("no satisfying graph found in 200 seeds")


def time_best(repeat: int, fn) -> tuple[float, object]:
    best = float("inf")
    value = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - t0)
    return best, value


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        description="benchmark the compiled kernel against the pure one"
    )
    parser.add_argument(
        "--repeat", type=int, default=3,
        help="timing repetitions per workload; the best time is reported",
    )
    args = parser.parse_args(argv)

    dense = random_digraph(8, 0.75, seed=13)
    sweep_graph, sweep_seed = satisfying_graph(5, 0.7)
    static = ProtocolStatic.build(sweep_graph, 1)
    tasks = sweep_tasks(sweep_graph, 1)

    workloads = (
        (
            "condition check, n=8 f=2",
            lambda: check_sc(dense, 2).verdict,
        ),
        (
            "full sweep, n=5 seed=%d (%d runs)" % (sweep_seed, len(tasks)),
            lambda: tuple(
                (o.outputs, o.rounds, o.agreement, o.validity)
                for o in run_sweep(
                    sweep_graph, 1, tasks, threads=1, static=static,
                    hash_traces=False,
                )
            ),
        ),
    )

    implementations = [("pure", kernels.PURE)]
    if "compiled" in kernels.available():
        from byzcast import _speedups

        implementations.insert(0, ("compiled", _speedups))
    else:
        print("compiled kernel not built; timing the pure one only")

    original = kernels.impl
    times: dict[tuple[str, str], float] = {}
    try:
        for title, fn in workloads:
            results = []
            for name, impl in implementations:
                kernels.impl = impl
                seconds, value = time_best(args.repeat, fn)
                times[(name, title)] = seconds
                results.append(value)
                print("%-9s %-38s %8.3fs" % (name, title, seconds))
            if len(results) == 2 and results[0] != results[1]:
                print("MISMATCH: kernels disagree on %r" % title)
                return 1
    finally:
        kernels.impl = original

    if len(implementations) == 2:
        for title, _ in workloads:
            ratio = times[("pure", title)] / times[("compiled", title)]
            print("speedup   %-38s %7.1fx" % (title, ratio))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
