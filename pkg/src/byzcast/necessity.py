"""Why the cut condition is necessary: a copy-network impossibility harness.

Given a graph, a fault budget f, and a violated cut-condition witness
(fault set F with partition L / C / R where neither L∪C nor R∪C has more
than f members with edges into the opposite remainder), this module builds
one larger network whose nodes are *copies* of the original nodes.  Every
copy honestly runs the original node's program, yet the single run of the
copy network simultaneously realizes three executions of the algorithm on
the original graph:

* execution 1 — every non-faulty node starts with 0; the ≤ f nodes of
  R∪C with edges into L−F are corrupted;
* execution 2 — every non-faulty node starts with 1; the ≤ f nodes of
  L∪C with edges into R−F are corrupted;
* execution 3 — L starts with 0, C∪R with 1; the nodes of F∩(L∪R) are
  corrupted.

Nodes in L−F cannot distinguish executions 1 and 3 (they are the *same*
copies), so they output 0 in both; nodes in R−F likewise share copies
between executions 2 and 3 and output 1.  Execution 3 therefore breaks
agreement, which is the whole point: no algorithm — this one included —
can decide correctly on a graph whose cut condition fails.

The construction assigns every original node a class from the witness
geometry (core/border on each side, four center variants), instantiates a
fixed table of copy groups (class, participating executions, input bit),
and wires copy edges so that within each execution every receiver hears
exactly one copy of each in-neighbor — honest nodes their own copy, the
execution's corrupted nodes a designated foreign copy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .conditions import ConditionWitness, in_neighborhood
from .digraph import Digraph
from .protocol import ProtocolStatic, RunResult
from .simulator import RecordedRun, run_recorded

EXECUTIONS = (1, 2, 3)

# Copy groups: (node class, executions the group's copies serve, input bit).
# Groups with an empty class simply hold no copies.
_GROUP_TABLE: tuple[tuple[str, tuple[int, ...], int], ...] = (
    ("left_faulty_core", (1,), 0),
    ("left_faulty_core", (2,), 1),
    ("left_core", (1, 3), 0),
    ("left_core", (2,), 1),
    ("left_faulty_border", (1,), 0),
    ("left_border", (1, 3), 0),
    ("right_faulty_core", (1,), 0),
    ("right_faulty_core", (2,), 1),
    ("right_core", (1,), 0),
    ("right_core", (2, 3), 1),
    ("right_faulty_border", (2,), 1),
    ("right_border", (2, 3), 1),
    ("center_border_both", (3,), 1),
    ("center_border_left", (3,), 1),
    ("center_border_left", (2,), 1),
    ("center_border_right", (1,), 0),
    ("center_border_right", (3,), 1),
    ("center_core", (1,), 0),
    ("center_core", (2,), 1),
    ("center_core", (3,), 1),
)

# Node classes corrupted in each execution.  Their members stay within the
# fault budget: executions 1 and 2 corrupt exactly the two witness
# neighborhoods, execution 3 corrupts F ∩ (L ∪ R).
_FAULTY_CLASSES: dict[int, frozenset[str]] = {
    1: frozenset(
        {
            "right_faulty_border",
            "right_border",
            "center_border_both",
            "center_border_left",
        }
    ),
    2: frozenset(
        {
            "left_faulty_border",
            "left_border",
            "center_border_both",
            "center_border_right",
        }
    ),
    3: frozenset(
        {
            "left_faulty_core",
            "left_faulty_border",
            "right_faulty_core",
            "right_faulty_border",
        }
    ),
}

# For a node corrupted in execution T, the group whose copy the honest
# receivers of T hear.  Keys are (class, executions) pairs naming a group.
_FAULTY_HEARD: dict[int, dict[str, tuple[str, tuple[int, ...]]]] = {
    1: {
        "right_faulty_border": ("right_faulty_border", (2,)),
        "right_border": ("right_border", (2, 3)),
        "center_border_both": ("center_border_both", (3,)),
        "center_border_left": ("center_border_left", (3,)),
    },
    2: {
        "left_faulty_border": ("left_faulty_border", (1,)),
        "left_border": ("left_border", (1, 3)),
        "center_border_both": ("center_border_both", (3,)),
        "center_border_right": ("center_border_right", (3,)),
    },
    3: {
        "left_faulty_core": ("left_faulty_core", (1,)),
        "left_faulty_border": ("left_faulty_border", (1,)),
        "right_faulty_core": ("right_faulty_core", (2,)),
        "right_faulty_border": ("right_faulty_border", (2,)),
    },
}


def _group_name(node_class: str, executions: tuple[int, ...]) -> str:
    return "%s/e%s" % (node_class, "".join(str(t) for t in executions))


@dataclass(frozen=True)
class CopyGroup:
    """One block of copies: a node class bound to executions and an input."""

    name: str
    node_class: str
    executions: tuple[int, ...]
    input_bit: int
    members: tuple[int, ...]


@dataclass(frozen=True)
class CopyNetwork:
    """The assembled copy network, ready for the labeled-network runner."""

    graph: Digraph
    fault_budget: int
    fault_set: tuple[int, ...]
    left: tuple[int, ...]
    center: tuple[int, ...]
    right: tuple[int, ...]
    node_class: tuple[str, ...]
    groups: tuple[CopyGroup, ...]
    sim_node: tuple[int, ...]
    sim_group: tuple[int, ...]
    sim_out: tuple[tuple[int, ...], ...]
    inputs: tuple[int, ...]
    sim_index: Mapping[tuple[int, int], int] = field(compare=False, repr=False)

    @property
    def n_sim(self) -> int:
        return len(self.sim_node)

    def faulty_nodes(self, execution: int) -> tuple[int, ...]:
        """Original nodes corrupted in the given execution."""
        bad = _FAULTY_CLASSES[execution]
        return tuple(
            u for u in range(self.graph.n) if self.node_class[u] in bad
        )

    def honest_sim(self, execution: int, node: int) -> int:
        """The copy whose run *is* the node's run in the given execution."""
        if self.node_class[node] in _FAULTY_CLASSES[execution]:
            raise ValueError(
                "node %d is corrupted in execution %d" % (node, execution)
            )
        gi = _honest_group_table()[(execution, self.node_class[node])]
        return self.sim_index[(gi, node)]

    def heard_sim(self, execution: int, node: int) -> int:
        """The copy the execution's honest receivers hear the node as."""
        cls = self.node_class[node]
        if cls in _FAULTY_CLASSES[execution]:
            gi = _GROUP_INDEX[_FAULTY_HEARD[execution][cls]]
            return self.sim_index[(gi, node)]
        return self.honest_sim(execution, node)


_GROUP_INDEX: dict[tuple[str, tuple[int, ...]], int] = {
    (cls, execs): gi for gi, (cls, execs, _) in enumerate(_GROUP_TABLE)
}


def _honest_group_table() -> dict[tuple[int, str], int]:
    """Map (execution, honest class) to its unique serving group."""
    table: dict[tuple[int, str], int] = {}
    for gi, (cls, execs, _) in enumerate(_GROUP_TABLE):
        for t in execs:
            if (t, cls) in table:
                raise AssertionError(
                    "two copy groups serve class %s in execution %d"
                    % (cls, t)
                )
            table[(t, cls)] = gi
    for t in EXECUTIONS:
        for cls, _, _ in _GROUP_TABLE:
            if cls in _FAULTY_CLASSES[t]:
                continue
            if (t, cls) not in table:
                raise AssertionError(
                    "no copy group serves honest class %s in execution %d"
                    % (cls, t)
                )
    return table


_HONEST_GROUP: dict[tuple[int, str], int] = _honest_group_table()


def validate_witness(
    g: Digraph, f: int, witness: ConditionWitness
) -> tuple[frozenset[int], frozenset[int], frozenset[int], frozenset[int]]:
    """Check a violated cut-condition witness against the graph.

    Returns the witness sets (fault, left, center, right) as frozensets.
    Raises ValueError when the witness is malformed or does not describe
    an actual violation for ``g`` and ``f``.
    """
    if witness.condition != "nc":
        raise ValueError("expected a cut-condition witness")
    if witness.holds:
        raise ValueError("expected a violated witness, got one that holds")
    if len(witness.partition) != 3:
        raise ValueError("cut witness needs a three-set partition")
    fault = frozenset(witness.fault_set)
    left, center, right = (frozenset(p) for p in witness.partition)
    nodes = frozenset(range(g.n))
    if not fault <= nodes:
        raise ValueError("fault set names nodes outside the graph")
    if len(fault) > f:
        raise ValueError("fault set exceeds the budget f=%d" % f)
    if left | center | right != nodes:
        raise ValueError("partition does not cover the node set")
    if len(left) + len(center) + len(right) != g.n:
        raise ValueError("partition sets overlap")
    if not left - fault or not right - fault:
        raise ValueError("both outer sides must survive the fault set")
    into_left = in_neighborhood(g, right | center, left - fault)
    if len(into_left) > f:
        raise ValueError("right side reaches the left remainder: no violation")
    into_right = in_neighborhood(g, left | center, right - fault)
    if len(into_right) > f:
        raise ValueError("left side reaches the right remainder: no violation")
    return fault, left, center, right


def classify_nodes(
    g: Digraph,
    fault: frozenset[int],
    left: frozenset[int],
    center: frozenset[int],
    right: frozenset[int],
) -> tuple[str, ...]:
    """Assign every node its copy-construction class.

    Side nodes split on fault membership and on having an edge into the
    opposite remainder (border) or not (core); center nodes split on which
    remainders they feed.
    """
    left_rest = left - fault
    right_rest = right - fault
    lf_border = in_neighborhood(g, left & fault, right_rest)
    l_border = in_neighborhood(g, left - fault, right_rest)
    rf_border = in_neighborhood(g, right & fault, left_rest)
    r_border = in_neighborhood(g, right - fault, left_rest)
    c_left = in_neighborhood(g, center, left_rest)
    c_right = in_neighborhood(g, center, right_rest)
    classes = [""] * g.n
    for u in left:
        if u in fault:
            classes[u] = (
                "left_faulty_border" if u in lf_border else "left_faulty_core"
            )
        else:
            classes[u] = "left_border" if u in l_border else "left_core"
    for u in right:
        if u in fault:
            classes[u] = (
                "right_faulty_border" if u in rf_border else "right_faulty_core"
            )
        else:
            classes[u] = "right_border" if u in r_border else "right_core"
    for u in center:
        if u in c_left:
            classes[u] = (
                "center_border_both" if u in c_right else "center_border_left"
            )
        else:
            classes[u] = (
                "center_border_right" if u in c_right else "center_core"
            )
    return tuple(classes)


def build_copy_network(
    g: Digraph, f: int, witness: ConditionWitness
) -> CopyNetwork:
    """Instantiate the copy network for a violated cut-condition witness.

    Raises ValueError for an invalid witness and AssertionError if the
    construction's own invariants break (which would be a bug, not an
    input problem).
    """
    fault, left, center, right = validate_witness(g, f, witness)
    node_class = classify_nodes(g, fault, left, center, right)

    members: list[list[int]] = [[] for _ in _GROUP_TABLE]
    for u in range(g.n):
        for gi, (cls, _, _) in enumerate(_GROUP_TABLE):
            if node_class[u] == cls:
                members[gi].append(u)
    groups = tuple(
        CopyGroup(
            name=_group_name(cls, execs),
            node_class=cls,
            executions=execs,
            input_bit=bit,
            members=tuple(members[gi]),
        )
        for gi, (cls, execs, bit) in enumerate(_GROUP_TABLE)
    )

    sim_node: list[int] = []
    sim_group: list[int] = []
    sim_index: dict[tuple[int, int], int] = {}
    for gi, group in enumerate(groups):
        for u in group.members:
            sim_index[(gi, u)] = len(sim_node)
            sim_node.append(u)
            sim_group.append(gi)

    def heard_group(x: int, t: int) -> int:
        cls = node_class[x]
        if cls in _FAULTY_CLASSES[t]:
            return _GROUP_INDEX[_FAULTY_HEARD[t][cls]]
        return _HONEST_GROUP[(t, cls)]

    out_lists: list[list[int]] = [[] for _ in sim_node]
    for gi, group in enumerate(groups):
        for y in group.members:
            for x in sorted(g.inn(y)):
                heard = {heard_group(x, t) for t in group.executions}
                if len(heard) != 1:
                    raise AssertionError(
                        "copies of node %d heard ambiguously by %s"
                        % (x, group.name)
                    )
                src = sim_index[(heard.pop(), x)]
                out_lists[src].append(sim_index[(gi, y)])

    net = CopyNetwork(
        graph=g,
        fault_budget=f,
        fault_set=tuple(sorted(fault)),
        left=tuple(sorted(left)),
        center=tuple(sorted(center)),
        right=tuple(sorted(right)),
        node_class=node_class,
        groups=groups,
        sim_node=tuple(sim_node),
        sim_group=tuple(sim_group),
        sim_out=tuple(tuple(sorted(out)) for out in out_lists),
        inputs=tuple(groups[gi].input_bit for gi in sim_group),
        sim_index=sim_index,
    )
    validate_network(net)
    return net


def validate_network(net: CopyNetwork) -> None:
    """Re-check the assembled network's structural invariants from scratch.

    Raises AssertionError on the first violation: per-copy in-neighbor
    uniqueness, per-execution hearing consistency, input correctness, and
    the fault budget of every realized execution.
    """
    g = net.graph
    sim_in: list[list[int]] = [[] for _ in range(net.n_sim)]
    for src, outs in enumerate(net.sim_out):
        for dst in outs:
            sim_in[dst].append(src)
    # Every copy of y hears exactly one copy of each in-neighbor of y and
    # nothing else.
    for s in range(net.n_sim):
        y = net.sim_node[s]
        heard_from = sorted(net.sim_node[p] for p in sim_in[s])
        if heard_from != sorted(g.inn(y)):
            raise AssertionError(
                "copy %d of node %d hears %r, wants one copy of each of %r"
                % (s, y, heard_from, sorted(g.inn(y)))
            )
    for t in EXECUTIONS:
        corrupted = net.faulty_nodes(t)
        if len(corrupted) > net.fault_budget:
            raise AssertionError(
                "execution %d corrupts %d nodes, budget is %d"
                % (t, len(corrupted), net.fault_budget)
            )
        bad = set(corrupted)
        for y in range(g.n):
            if y in bad:
                continue
            s = net.honest_sim(t, y)
            # Within the execution the copy hears exactly the designated
            # copy of every in-neighbor, corrupted or not.
            want = sorted(net.heard_sim(t, x) for x in g.inn(y))
            if sorted(sim_in[s]) != want:
                have = sorted(sim_in[s])
                raise AssertionError(
                    "execution %d: copy %d hears sims %r, wants %r"
                    % (t, s, have, want)
                )
            got = net.inputs[s]
            expect = _expected_input(net, t, y)
            if got != expect:
                raise AssertionError(
                    "execution %d: node %d starts with %d, wants %d"
                    % (t, y, got, expect)
                )


def _expected_input(net: CopyNetwork, execution: int, node: int) -> int:
    if execution == 1:
        return 0
    if execution == 2:
        return 1
    return 0 if node in set(net.left) else 1


@dataclass(frozen=True)
class ExecutionTriple:
    """One copy-network run read back as three executions."""

    network: CopyNetwork
    recorded: RecordedRun
    faulty: tuple[tuple[int, ...], ...]
    outputs: tuple[tuple[tuple[int, int], ...], ...]

    @property
    def result(self) -> RunResult:
        return self.recorded.result

    def output_map(self, execution: int) -> dict[int, int]:
        return dict(self.outputs[execution - 1])

    @property
    def disagrees(self) -> bool:
        """True when execution 3 splits the two sides as predicted."""
        outs = self.output_map(3)
        net = self.network
        fault = set(net.fault_set)
        left_rest = [u for u in net.left if u not in fault]
        right_rest = [u for u in net.right if u not in fault]
        return all(outs[u] == 0 for u in left_rest) and all(
            outs[u] == 1 for u in right_rest
        )

    def execution_events(self, execution: int) -> tuple[dict, ...]:
        """Delivery events seen by the execution's honest copies."""
        honest = {sim for _, sim in self._honest_sims(execution)}
        picked = []
        for line in self.recorded.lines:
            event = json.loads(line)
            if event.get("ev") == "recv" and event["sim"] in honest:
                picked.append(event)
        return tuple(picked)

    def _honest_sims(self, execution: int) -> tuple[tuple[int, int], ...]:
        net = self.network
        bad = set(self.faulty[execution - 1])
        return tuple(
            (u, net.honest_sim(execution, u))
            for u in range(net.graph.n)
            if u not in bad
        )

    def verdict(self) -> dict:
        """Summary of the three extracted executions, JSON-ready."""
        per_exec = []
        for t in EXECUTIONS:
            outs = self.output_map(t)
            per_exec.append(
                {
                    "execution": t,
                    "faulty": list(self.faulty[t - 1]),
                    "outputs": {str(u): outs[u] for u in sorted(outs)},
                }
            )
        return {
            "executions": per_exec,
            "execution3_disagrees": self.disagrees,
            "rounds": self.result.rounds,
        }


def run_three_executions(
    g: Digraph,
    f: int,
    witness: ConditionWitness,
    *,
    static: ProtocolStatic | None = None,
) -> ExecutionTriple:
    """Run the copy network once and read the three executions out of it.

    The run itself is fully honest — every copy follows the algorithm —
    and takes the algorithm's exact round count.  Executions 1 and 2 must
    come out all-0 and all-1 (anything else is raised as a construction
    bug); execution 3's split is reported by the returned triple.
    """
    net = build_copy_network(g, f, witness)
    recorded = run_recorded(
        g,
        f,
        net.inputs,
        labels=net.sim_node,
        sim_out=net.sim_out,
        static=static,
    )
    outputs = []
    faulty = []
    for t in EXECUTIONS:
        bad = net.faulty_nodes(t)
        faulty.append(bad)
        pairs = tuple(
            (u, recorded.result.outputs[net.honest_sim(t, u)])
            for u in range(g.n)
            if u not in set(bad)
        )
        outputs.append(pairs)
    for u, value in outputs[0]:
        if value != 0:
            raise AssertionError(
                "execution 1: node %d output %d from all-zero inputs"
                % (u, value)
            )
    for u, value in outputs[1]:
        if value != 1:
            raise AssertionError(
                "execution 2: node %d output %d from all-one inputs"
                % (u, value)
            )
    return ExecutionTriple(
        network=net,
        recorded=recorded,
        faulty=tuple(faulty),
        outputs=tuple(outputs),
    )
