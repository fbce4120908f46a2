"""Operator command line: check conditions, run and sweep simulations,
demonstrate impossibility on violating graphs, and generate test graphs.

Subcommands
-----------
``check``      print both condition verdicts for a graph and fault budget
``run``        one simulation with a chosen adversary; writes the trace
``sweep``      Cartesian product of fault sets x adversaries x inputs
``necessity``  realize three indistinguishable executions on a violator
``gen``        write a generated graph as a canonical edge list

Exit codes are a stable contract: 0 success (condition holds / guarantees
met / demonstration complete), 1 usage or I/O error, 2 condition violated
or guarantee failure.  Set ``BYZCAST_LOG`` (e.g. ``DEBUG``, ``INFO``) to
raise log verbosity on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from collections.abc import Sequence
from pathlib import Path

from .adversaries import adversary_names
from .conditions import MAX_NC_NODES, MAX_SC_NODES, check_nc, check_sc
from .digraph import Digraph, format_edge_list, parse_edge_list
from .generators import (
    complete_bidirected,
    directed_cycle,
    layered_dag,
    random_digraph,
    undirected_threshold,
)
from .necessity import run_three_executions
from .protocol import ProtocolStatic
from .simulator import (
    graph_fingerprint,
    run_recorded,
    run_sweep,
    summarize,
    sweep_tasks,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATED = 2

log = logging.getLogger("byzcast.cli")


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _load_graph(path: str) -> Digraph:
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise ValueError("cannot read graph %r: %s" % (path, exc)) from exc
    return parse_edge_list(text)


def _parse_nodes(spec: str, n: int, what: str) -> tuple[int, ...]:
    """Comma-separated node ids; ``none``/empty means the empty set."""
    spec = spec.strip()
    if spec in ("", "none"):
        return ()
    try:
        nodes = sorted({int(tok) for tok in spec.split(",")})
    except ValueError:
        raise ValueError(
            "%s must be comma-separated node ids, got %r" % (what, spec)
        ) from None
    for v in nodes:
        if not 0 <= v < n:
            raise ValueError(
                "%s names node %d outside the graph (n=%d)" % (what, v, n)
            )
    return tuple(nodes)


def _parse_input_vector(spec: str, n: int) -> tuple[int, ...]:
    """One assignment: ``zeros``/``ones``, a length-n bitstring, or a
    ``node=bit`` map (unlisted nodes default to 0)."""
    spec = spec.strip()
    if spec == "zeros":
        return (0,) * n
    if spec == "ones":
        return (1,) * n
    if "=" in spec:
        vec = [0] * n
        for item in spec.split(","):
            node_txt, _, bit_txt = item.partition("=")
            try:
                node, bit = int(node_txt), int(bit_txt)
            except ValueError:
                raise ValueError("bad input map entry %r" % item) from None
            if not 0 <= node < n:
                raise ValueError(
                    "input map names node %d outside the graph (n=%d)"
                    % (node, n)
                )
            if bit not in (0, 1):
                raise ValueError("input bit for node %d must be 0 or 1" % node)
            vec[node] = bit
        return tuple(vec)
    if len(spec) == n and set(spec) <= {"0", "1"}:
        return tuple(int(ch) for ch in spec)
    raise ValueError(
        "inputs must be 'zeros', 'ones', a %d-bit string, or a node=bit map;"
        " got %r" % (n, spec)
    )


def _out_dir(args: argparse.Namespace, default: str | None = ".") -> Path | None:
    raw = args.out if args.out is not None else default
    if raw is None:
        return None
    path = Path(raw)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit_report(report: dict, fmt: str, lines: Sequence[str]) -> None:
    """Print the human or machine rendering of one command's report."""
    if fmt == "json":
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _write_json(path: Path, report: dict) -> None:
    path.write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="ascii"
    )


def _fmt_nodes(nodes) -> str:
    return "{%s}" % ",".join(str(v) for v in nodes)


def _graph_summary(g: Digraph) -> dict:
    return {
        "n": g.n,
        "edges": sum(len(g.out(v)) for v in range(g.n)),
        "sha256": graph_fingerprint(g),
    }


def _witness_lines(wit) -> list[str]:
    """Human-readable detail lines for a violation witness."""
    if wit.holds:
        return []
    out = ["  fault set: %s" % _fmt_nodes(wit.fault_set)]
    if wit.condition == "sc":
        side_a, side_b = wit.partition
        out.append(
            "  split: A=%s B=%s — neither survivor side receives f+1"
            " disjoint paths from the other"
            % (_fmt_nodes(side_a), _fmt_nodes(side_b))
        )
        for label, cert in zip(("A->B", "B->A"), wit.certificates):
            out.append(
                "  %s blocked at node %d by cut %s"
                % (label, cert.target, _fmt_nodes(cert.cut))
            )
    else:
        left, center, right = wit.partition
        out.append(
            "  partition: L=%s C=%s R=%s"
            % (_fmt_nodes(left), _fmt_nodes(center), _fmt_nodes(right))
        )
        into_left, into_right = wit.neighborhoods
        out.append(
            "  inbound borders too small: into-L=%s into-R=%s (both ≤ f)"
            % (_fmt_nodes(into_left), _fmt_nodes(into_right))
        )
    return out


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def cmd_check(args: argparse.Namespace) -> int:
    g = _load_graph(args.graph)
    if g.n > MAX_SC_NODES:
        raise ValueError(
            "check caps out at n=%d (path condition) and n=%d (cut"
            " condition); graph has n=%d" % (MAX_SC_NODES, MAX_NC_NODES, g.n)
        )
    log.info("checking conditions on %s at f=%d", args.graph, args.f)
    sc = check_sc(g, args.f)
    nc = check_nc(g, args.f) if g.n <= MAX_NC_NODES else None
    agree = None if nc is None else sc.holds == nc.holds

    report = {
        "graph": _graph_summary(g),
        "f": args.f,
        "sc": sc.to_dict(),
        "nc": None if nc is None else nc.to_dict(),
        "agree": agree,
    }
    lines = [
        "graph: %d nodes, %d edges (sha256 %s)"
        % (g.n, report["graph"]["edges"], report["graph"]["sha256"][:12]),
        "path condition (f=%d): %s" % (args.f, sc.verdict),
        *_witness_lines(sc),
    ]
    if nc is None:
        lines.append(
            "cut condition (f=%d): skipped — n=%d exceeds the 3^n cap (%d)"
            % (args.f, g.n, MAX_NC_NODES)
        )
    else:
        lines.append("cut condition (f=%d): %s" % (args.f, nc.verdict))
        lines.extend(_witness_lines(nc))
        lines.append("checkers agree: %s" % ("yes" if agree else "NO"))
    _emit_report(report, args.format, lines)

    out = _out_dir(args, default=None)
    if out is not None:
        _write_json(out / "check.json", report)
    if agree is False:
        # The two checkers are proved equivalent; disagreement is a bug.
        return EXIT_ERROR
    return EXIT_OK if sc.holds else EXIT_VIOLATED


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------


def _condition_verdict(g: Digraph, f: int) -> str:
    if g.n > MAX_SC_NODES:
        return "unchecked"
    return check_sc(g, f).verdict


def cmd_run(args: argparse.Namespace) -> int:
    g = _load_graph(args.graph)
    inputs = _parse_input_vector(args.inputs, g.n)
    faulty = _parse_nodes(args.faulty, g.n, "--faulty")
    if len(faulty) > args.f:
        raise ValueError(
            "corrupted set %s exceeds the budget f=%d"
            % (_fmt_nodes(faulty), args.f)
        )
    adversary = None if args.adversary == "none" else args.adversary
    log.info(
        "running %s f=%d adversary=%s faulty=%s",
        args.graph, args.f, adversary, faulty,
    )

    static = ProtocolStatic.build(g, f=args.f)
    recorded = run_recorded(
        g, args.f, inputs, adversary, faulty, args.seed, static=static,
    )
    result = recorded.result

    honest = [v for v in range(g.n) if v not in faulty]
    agreement = len({result.outputs[v] for v in honest}) <= 1
    honest_inputs = {inputs[v] for v in honest}
    validity = len(honest_inputs) != 1 or (
        {result.outputs[v] for v in honest} <= honest_inputs
    )
    terminated = result.rounds == static.total_rounds
    condition = _condition_verdict(g, args.f)

    out = _out_dir(args)
    trace_path = out / "run_trace.jsonl"
    recorded.write(trace_path)

    report = {
        "graph": _graph_summary(g),
        "f": args.f,
        "adversary": adversary,
        "faulty": list(faulty),
        "seed": args.seed,
        "inputs": list(inputs),
        "outputs": list(result.outputs),
        "agreement": agreement,
        "validity": validity,
        "rounds": result.rounds,
        "expected_rounds": static.total_rounds,
        "no_support_events": len(result.no_support),
        "condition": condition,
        "trace": str(trace_path),
        "trace_sha256": recorded.sha256(),
    }
    _write_json(out / "run_report.json", report)

    lines = [
        "graph: %d nodes, %d edges (sha256 %s)"
        % (g.n, report["graph"]["edges"], report["graph"]["sha256"][:12]),
        "f=%d adversary=%s faulty=%s seed=%d"
        % (args.f, adversary or "none", _fmt_nodes(faulty), args.seed),
        "inputs:  %s" % "".join(str(b) for b in inputs),
        "outputs: %s" % "".join(str(b) for b in result.outputs),
        "agreement: %s" % ("OK" if agreement else "FAIL"),
        "validity:  %s" % ("OK" if validity else "FAIL"),
        "rounds: %d of %d expected (%d phases)"
        % (result.rounds, static.total_rounds, len(static.phases)),
        "condition: %s" % condition,
    ]
    if condition == "violated":
        lines.append(
            "note: the graph violates the condition; outcome guarantees"
            " do not apply"
        )
    lines.append("trace: %s" % trace_path)
    _emit_report(report, args.format, lines)

    guarantees_met = agreement and validity and terminated
    if condition == "violated":
        return EXIT_VIOLATED
    return EXIT_OK if guarantees_met else EXIT_VIOLATED


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def cmd_sweep(args: argparse.Namespace) -> int:
    g = _load_graph(args.graph)
    if args.inputs not in ("all", "zeros", "ones"):
        raise ValueError(
            "sweep inputs must be one of all/zeros/ones, got %r" % args.inputs
        )
    if args.faulty == "sweep":
        fault_sets: str | tuple = "all"
    else:
        fault_sets = (_parse_nodes(args.faulty, g.n, "--faulty"),)
        if len(fault_sets[0]) > args.f:
            raise ValueError(
                "corrupted set %s exceeds the budget f=%d"
                % (_fmt_nodes(fault_sets[0]), args.f)
            )
    if args.adversary == "suite":
        adversaries: str | tuple = "suite"
    else:
        adversaries = (args.adversary,)

    tasks = sweep_tasks(
        g, args.f,
        fault_sets=fault_sets,
        adversaries=adversaries,
        input_mode=args.inputs,
        seed=args.seed,
    )
    condition = _condition_verdict(g, args.f)
    log.info(
        "sweeping %s: %d tasks on %d threads (condition %s)",
        args.graph, len(tasks), args.threads, condition,
    )

    static = ProtocolStatic.build(g, f=args.f)
    outcomes = run_sweep(
        g, args.f, tasks,
        threads=args.threads, static=static, hash_traces=True,
    )
    stats = summarize(outcomes)
    failures = [
        oc.task.index
        for oc in outcomes
        if not (oc.agreement and oc.validity)
        or oc.rounds != static.total_rounds
    ]

    out = _out_dir(args)
    csv_path = out / "sweep_runs.csv"
    with open(csv_path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "index", "faulty", "adversary", "inputs",
                "agreement", "validity", "rounds", "no_support",
                "trace_sha256",
            ]
        )
        for oc in outcomes:
            writer.writerow(
                [
                    oc.task.index,
                    ";".join(str(v) for v in oc.task.fstar),
                    oc.task.adversary,
                    "".join(str(b) for b in oc.task.inputs),
                    int(oc.agreement),
                    int(oc.validity),
                    oc.rounds,
                    oc.no_support,
                    oc.trace_sha256,
                ]
            )

    report = {
        "graph": _graph_summary(g),
        "f": args.f,
        "adversaries": list(adversary_names())
        if adversaries == "suite"
        else list(adversaries),
        "fault_sets": "all" if fault_sets == "all" else [
            list(fs) for fs in fault_sets
        ],
        "input_mode": args.inputs,
        "seed": args.seed,
        "threads": args.threads,
        "condition": condition,
        "expected_rounds": static.total_rounds,
        "summary": stats,
        "failed_tasks": failures,
        "csv": str(csv_path),
    }
    _write_json(out / "sweep_summary.json", report)

    if condition == "holds":
        verdict = "PASS" if not failures else "FAIL (%d runs)" % len(failures)
    else:
        verdict = (
            "not applicable — condition %s; %d failures tallied"
            % (condition, len(failures))
        )
    lines = [
        "graph: %d nodes, %d edges (sha256 %s)"
        % (g.n, report["graph"]["edges"], report["graph"]["sha256"][:12]),
        "tasks: %d (inputs=%s, faulty=%s, adversary=%s, threads=%d)"
        % (len(tasks), args.inputs, args.faulty, args.adversary, args.threads),
        "condition: %s" % condition,
        "agreement failures: %d, validity failures: %d, no-support"
        " events: %d"
        % (
            stats["agreement_failures"],
            stats["validity_failures"],
            stats["no_support_events"],
        ),
        "guarantee verdict: %s" % verdict,
        "runs csv: %s" % csv_path,
    ]
    if args.format == "csv":
        print(csv_path.read_text(encoding="ascii"), end="")
    else:
        _emit_report(report, args.format, lines)

    if condition == "violated":
        return EXIT_OK  # failures are expected evidence, not a defect
    return EXIT_OK if not failures else EXIT_VIOLATED


# ---------------------------------------------------------------------------
# necessity
# ---------------------------------------------------------------------------


def cmd_necessity(args: argparse.Namespace) -> int:
    g = _load_graph(args.graph)
    if g.n > MAX_NC_NODES:
        raise ValueError(
            "the impossibility harness searches cut witnesses; capped at"
            " n=%d, graph has n=%d" % (MAX_NC_NODES, g.n)
        )
    witness = check_nc(g, args.f)
    if witness.holds:
        raise ValueError(
            "graph satisfies the condition at f=%d; the impossibility"
            " construction needs a violated cut witness" % args.f
        )
    log.info("realizing three executions on %s at f=%d", args.graph, args.f)
    triple = run_three_executions(g, args.f, witness)
    net = triple.network
    verdict = triple.verdict()

    out = _out_dir(args)
    trace_path = out / "necessity_trace.jsonl"
    triple.recorded.write(trace_path)

    report = {
        "graph": _graph_summary(g),
        "f": args.f,
        "witness": witness.to_dict(),
        "copies": net.n_sim,
        "verdict": verdict,
        "trace": str(trace_path),
    }
    _write_json(out / "necessity_report.json", report)

    left, center, right = witness.partition
    lines = [
        "graph: %d nodes, %d edges (sha256 %s)"
        % (g.n, report["graph"]["edges"], report["graph"]["sha256"][:12]),
        "witness at f=%d: fault=%s L=%s C=%s R=%s"
        % (
            args.f, _fmt_nodes(witness.fault_set), _fmt_nodes(left),
            _fmt_nodes(center), _fmt_nodes(right),
        ),
        "copy network: %d copies of %d nodes" % (net.n_sim, g.n),
    ]
    for entry in verdict["executions"]:
        outputs = ", ".join(
            "%s->%d" % (node, bit)
            for node, bit in sorted(
                entry["outputs"].items(), key=lambda kv: int(kv[0])
            )
        )
        lines.append(
            "execution %d: corrupted=%s; honest outputs: %s"
            % (entry["execution"], _fmt_nodes(entry["faulty"]), outputs)
        )
    disagrees = verdict["execution3_disagrees"]
    lines.append(
        "execution 3 splits along the cut: %s"
        % ("yes — agreement is impossible here" if disagrees else "NO")
    )
    lines.append("trace: %s" % trace_path)
    _emit_report(report, args.format, lines)
    return EXIT_OK if disagrees else EXIT_VIOLATED


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------


def _build_generated(args: argparse.Namespace) -> tuple[Digraph, dict]:
    family = args.family
    params: dict = {"family": family}
    if family == "complete":
        g = complete_bidirected(args.n)
        params["n"] = args.n
    elif family == "cycle":
        g = directed_cycle(args.n)
        params["n"] = args.n
    elif family == "random":
        if args.p is None:
            raise ValueError("random graphs need --p")
        g = random_digraph(args.n, args.p, seed=args.seed)
        params.update(n=args.n, p=args.p, seed=args.seed)
    elif family == "layered":
        if not args.layers:
            raise ValueError("layered DAGs need --layers, e.g. 2,3,2")
        sizes = tuple(int(tok) for tok in args.layers.split(","))
        g = layered_dag(sizes, p=args.p if args.p is not None else 1.0,
                        seed=args.seed)
        params.update(layers=list(sizes), p=args.p, seed=args.seed)
    elif family == "threshold":
        if args.f is None:
            raise ValueError("threshold graphs need --f")
        g = undirected_threshold(args.n, args.f)
        params.update(n=args.n, f=args.f)
    else:  # pragma: no cover - argparse restricts choices
        raise ValueError("unknown family %r" % family)
    return g, params


def cmd_gen(args: argparse.Namespace) -> int:
    g, params = _build_generated(args)
    out = _out_dir(args)
    path = out / "graph.txt"
    path.write_text(format_edge_list(g), encoding="ascii")
    report = {
        **params,
        "n": g.n,
        "edges": sum(len(g.out(v)) for v in range(g.n)),
        "sha256": graph_fingerprint(g),
        "path": str(path),
    }
    lines = [
        "wrote %s: %d nodes, %d edges (sha256 %s)"
        % (path, g.n, report["edges"], report["sha256"][:12]),
    ]
    _emit_report(report, args.format, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="byzcast",
        description="Byzantine broadcast consensus on directed graphs:"
        " condition checks, simulations, sweeps, impossibility"
        " demonstrations, and graph generation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, *, out_default: str | None) -> None:
        p.add_argument("--graph", required=True, help="edge-list file")
        p.add_argument("--f", type=int, required=True,
                       help="fault budget (number of corruptible nodes)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument(
            "--out",
            default=None,
            help="directory for report artifacts (default: %s)"
            % (out_default if out_default is not None else "no files"),
        )
        p.add_argument("--format", choices=("json", "csv", "text"),
                       default="text")

    p_check = sub.add_parser(
        "check", help="decide both equivalent conditions for the graph"
    )
    common(p_check, out_default=None)
    p_check.set_defaults(func=cmd_check)

    p_run = sub.add_parser("run", help="one simulation; writes its trace")
    common(p_run, out_default=".")
    p_run.add_argument(
        "--inputs", default="zeros",
        help="zeros | ones | bitstring (e.g. 0101) | map (e.g. 0=1,3=0)",
    )
    p_run.add_argument(
        "--faulty", default="none",
        help="comma-separated corrupted nodes, or 'none'",
    )
    p_run.add_argument(
        "--adversary", default="none",
        choices=("none",) + adversary_names(),
        help="behavior of the corrupted nodes",
    )
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser(
        "sweep", help="run every (fault set, adversary, input) combination"
    )
    common(p_sweep, out_default=".")
    p_sweep.add_argument(
        "--inputs", default="all", help="all | zeros | ones",
    )
    p_sweep.add_argument(
        "--faulty", default="sweep",
        help="'sweep' for every set within budget, or one explicit set",
    )
    p_sweep.add_argument(
        "--adversary", default="suite",
        choices=("suite",) + adversary_names(),
    )
    p_sweep.add_argument("--threads", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    p_nec = sub.add_parser(
        "necessity",
        help="realize three indistinguishable executions on a violating"
        " graph",
    )
    common(p_nec, out_default=".")
    p_nec.set_defaults(func=cmd_necessity)

    p_gen = sub.add_parser("gen", help="generate a graph as an edge list")
    p_gen.add_argument(
        "--family", required=True,
        choices=("complete", "cycle", "random", "layered", "threshold"),
    )
    p_gen.add_argument("--n", type=int, default=4, help="node count")
    p_gen.add_argument("--p", type=float, default=None,
                       help="edge probability (random/layered)")
    p_gen.add_argument("--layers", default="",
                       help="layer sizes for layered DAGs, e.g. 2,3,2")
    p_gen.add_argument("--f", type=int, default=None,
                       help="fault budget (threshold family)")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", default=".",
                       help="directory for graph.txt (default: .)")
    p_gen.add_argument("--format", choices=("json", "csv", "text"),
                       default="text")
    p_gen.set_defaults(func=cmd_gen)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    level = os.environ.get("BYZCAST_LOG", "").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; 2 means "condition violated"
        # here, so fold usage problems into the generic error code.
        code = exc.code if isinstance(exc.code, int) else EXIT_ERROR
        return EXIT_OK if code == 0 else EXIT_ERROR
    try:
        if args.format == "csv" and args.command != "sweep":
            raise ValueError(
                "format 'csv' applies to sweep only; use text or json"
            )
        return args.func(args)
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover - exercised via the script
    sys.exit(main())
