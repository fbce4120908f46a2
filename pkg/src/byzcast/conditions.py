"""Connectivity conditions that characterize achievable consensus.

Two equivalent formulations are implemented side by side:

* the path-based form (``sc_with_param`` / ``check_sc``), built on counting
  node-disjoint paths, and
* the cut-based form (``nc_with_param`` / ``check_nc``), built on
  in-neighborhood sizes across three-way partitions.

Both return a :class:`ConditionWitness` that either says "holds" or carries
a concrete violating partition together with certificates that can be
re-validated against the graph primitives.  Enumeration orders are fixed so
witnesses are reproducible run to run.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .digraph import (
    Digraph,
    count_disjoint_paths,
    in_neighborhood,
    mask_from,
    mask_nodes,
    separating_cut,
    source_components,
)

#: Enumerating 2^n partitions per fault set stays tractable only at desk
#: scale; beyond these sizes the checkers refuse rather than crawl.
MAX_SC_NODES = 12
MAX_NC_NODES = 9


@dataclass(frozen=True)
class FaultBudget:
    """Number of tolerated faulty nodes, valid only when 0 < f < n."""

    f: int
    n: int

    def __post_init__(self) -> None:
        if not 0 < self.f < self.n:
            raise ValueError(
                "fault budget f=%r requires 0 < f < n=%r" % (self.f, self.n)
            )


class MultipleSourceComponentsError(ValueError):
    """The fault-free part of the graph has more than one source component."""

    def __init__(self, components: tuple[tuple[int, ...], ...]):
        self.components = components
        super().__init__(
            "expected a unique source component, found %d: %s"
            % (len(components), list(components))
        )


@dataclass(frozen=True)
class DirectionCertificate:
    """Evidence that one partition side cannot reach the other.

    ``target`` is a node with fewer than f+1 disjoint incoming paths from
    the opposite side; ``cut`` is a vertex set of size ≤ f meeting every
    such path.
    """

    target: int
    cut: tuple[int, ...]


@dataclass(frozen=True)
class ConditionWitness:
    """Outcome of a condition check, self-contained enough to re-validate."""

    condition: str  # "sc" | "nc"
    verdict: str  # "holds" | "violated"
    fault_set: tuple[int, ...] = ()
    partition: tuple[tuple[int, ...], ...] = ()
    certificates: tuple[DirectionCertificate, ...] = ()  # sc violations
    neighborhoods: tuple[tuple[int, ...], ...] = ()  # nc violations

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_dict(self) -> dict:
        out: dict = {"condition": self.condition, "verdict": self.verdict}
        if not self.holds:
            out["fault_set"] = list(self.fault_set)
            out["partition"] = [list(part) for part in self.partition]
            if self.certificates:
                out["certificates"] = [
                    {"target": c.target, "cut": list(c.cut)}
                    for c in self.certificates
                ]
            if self.neighborhoods:
                out["neighborhoods"] = [list(h) for h in self.neighborhoods]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ConditionWitness":
        return cls(
            condition=data["condition"],
            verdict=data["verdict"],
            fault_set=tuple(data.get("fault_set", ())),
            partition=tuple(tuple(p) for p in data.get("partition", ())),
            certificates=tuple(
                DirectionCertificate(c["target"], tuple(c["cut"]))
                for c in data.get("certificates", ())
            ),
            neighborhoods=tuple(
                tuple(h) for h in data.get("neighborhoods", ())
            ),
        )

    def revalidate(self, g: Digraph, f: int) -> bool:
        """Check a violation witness against the primitives from scratch."""
        if self.holds:
            return True
        fault = set(self.fault_set)
        if self.condition == "sc":
            side_a, side_b = (set(p) for p in self.partition)
            if not side_a - fault or not side_b - fault:
                return False
            if len(self.certificates) != 2:
                return False
            for senders, cert in zip((side_a, side_b), self.certificates):
                receivers = (side_b if senders is side_a else side_a) - fault
                if cert.target not in receivers:
                    return False
                if len(cert.cut) > f:
                    return False
                if count_disjoint_paths(g, senders, cert.target, fault) > f:
                    return False
                # The cut must meet every counted path: with cut sources
                # dropped and cut interiors excluded, nothing remains.
                if count_disjoint_paths(
                    g,
                    senders - set(cert.cut),
                    cert.target,
                    fault | set(cert.cut),
                ) != 0:
                    return False
            return True
        left, mid, right = (set(p) for p in self.partition)
        if not left - fault or not right - fault:
            return False
        if len(self.neighborhoods) != 2:
            return False
        into_left = in_neighborhood(g, frozenset(right | mid), frozenset(left - fault))
        into_right = in_neighborhood(g, frozenset(left | mid), frozenset(right - fault))
        return (
            into_left == set(self.neighborhoods[0])
            and into_right == set(self.neighborhoods[1])
            and len(into_left) <= f
            and len(into_right) <= f
        )


# ---------------------------------------------------------------------------
# relation primitives


def adjacent(g: Digraph, senders: Iterable[int], receivers: Iterable[int], f: int) -> bool:
    """True iff more than ``f`` sender nodes have an edge into ``receivers``."""
    return len(in_neighborhood(g, frozenset(senders), frozenset(receivers))) > f


def propagates(
    g: Digraph,
    senders: Iterable[int],
    receivers: Iterable[int],
    excluded: Iterable[int],
    f: int,
) -> bool:
    """True iff every receiver has f+1 disjoint sender-paths avoiding
    ``excluded`` internally.

    Vacuously true for an empty receiver set.  Callers pass receiver sets
    already stripped of the excluded nodes; a receiver inside ``excluded``
    is an error.
    """
    return _failing_receiver(g, senders, receivers, excluded, f) is None


def _failing_receiver(
    g: Digraph,
    senders: Iterable[int],
    receivers: Iterable[int],
    excluded: Iterable[int],
    f: int,
) -> int | None:
    """First receiver (ascending) lacking f+1 disjoint paths, if any."""
    sender_set = set(senders)
    excluded_set = set(excluded)
    if not sender_set:
        raise ValueError("propagates requires a non-empty sender set")
    for v in sorted(receivers):
        if v in excluded_set:
            raise ValueError("receiver %d lies in the excluded set" % v)
        if count_disjoint_paths(g, sender_set, v, excluded_set, limit=f + 1) < f + 1:
            return v
    return None


# ---------------------------------------------------------------------------
# per-parameter condition checks


def fault_subsets(n: int, f: int) -> Iterator[tuple[int, ...]]:
    """All candidate fault sets with |F| ≤ f, ascending by (size, bitmask)."""
    for size in range(f + 1):
        for combo in _combinations_by_bitmask(n, size):
            yield combo


def _combinations_by_bitmask(n: int, size: int) -> Iterator[tuple[int, ...]]:
    # itertools.combinations over ascending node ids enumerates ascending
    # bitmask order only for sets of equal size if the most significant
    # member varies slowest; sort explicitly to keep the order contractual.
    combos = sorted(
        itertools.combinations(range(n), size),
        key=lambda c: mask_from(c),
    )
    return iter(combos)


def sc_with_param(g: Digraph, fault_set: Iterable[int], f: int) -> ConditionWitness:
    """Path-based condition for one candidate fault set.

    Scans every two-set partition (A, B) in ascending A-bitmask order and
    requires one side to reach the other minus the fault set along f+1
    disjoint paths.
    """
    fmask = mask_from(fault_set)
    if bin(fmask).count("1") > f:
        raise ValueError("candidate fault set larger than budget f=%d" % f)
    full = (1 << g.n) - 1
    fault = set(mask_nodes(fmask))
    for amask in range(full + 1):
        bmask = full & ~amask
        if not amask & ~fmask or not bmask & ~fmask:
            continue
        side_a = set(mask_nodes(amask))
        side_b = set(mask_nodes(bmask))
        fail_b = _failing_receiver(g, side_a, side_b - fault, fault, f)
        if fail_b is None:
            continue
        fail_a = _failing_receiver(g, side_b, side_a - fault, fault, f)
        if fail_a is None:
            continue
        return ConditionWitness(
            condition="sc",
            verdict="violated",
            fault_set=mask_nodes(fmask),
            partition=(mask_nodes(amask), mask_nodes(bmask)),
            certificates=(
                DirectionCertificate(fail_b, separating_cut(g, side_a, fail_b, fault)),
                DirectionCertificate(fail_a, separating_cut(g, side_b, fail_a, fault)),
            ),
        )
    return ConditionWitness(condition="sc", verdict="holds")


def nc_with_param(g: Digraph, fault_set: Iterable[int], f: int) -> ConditionWitness:
    """Cut-based condition for one candidate fault set.

    Scans every three-set partition (L, C, R), node 0 as the most
    significant ternary digit, and requires one cross in-neighborhood to
    exceed f.
    """
    fmask = mask_from(fault_set)
    if bin(fmask).count("1") > f:
        raise ValueError("candidate fault set larger than budget f=%d" % f)
    fault = set(mask_nodes(fmask))
    for digits in itertools.product((0, 1, 2), repeat=g.n):
        left = frozenset(u for u in range(g.n) if digits[u] == 0)
        mid = frozenset(u for u in range(g.n) if digits[u] == 1)
        right = frozenset(u for u in range(g.n) if digits[u] == 2)
        left_rest = left - fault
        right_rest = right - fault
        if not left_rest or not right_rest:
            continue
        into_left = in_neighborhood(g, right | mid, left_rest)
        if len(into_left) > f:
            continue
        into_right = in_neighborhood(g, left | mid, right_rest)
        if len(into_right) > f:
            continue
        return ConditionWitness(
            condition="nc",
            verdict="violated",
            fault_set=mask_nodes(fmask),
            partition=(
                tuple(sorted(left)),
                tuple(sorted(mid)),
                tuple(sorted(right)),
            ),
            neighborhoods=(
                tuple(sorted(into_left)),
                tuple(sorted(into_right)),
            ),
        )
    return ConditionWitness(condition="nc", verdict="holds")


# ---------------------------------------------------------------------------
# full checks over all candidate fault sets


def check_sc(g: Digraph, f: int) -> ConditionWitness:
    """Path-based condition over every fault set with |F| ≤ f."""
    FaultBudget(f, g.n)
    if g.n > MAX_SC_NODES:
        raise ValueError(
            "check_sc enumerates 2^n partitions; refusing n=%d > %d"
            % (g.n, MAX_SC_NODES)
        )
    for fault in fault_subsets(g.n, f):
        witness = sc_with_param(g, fault, f)
        if not witness.holds:
            return witness
    return ConditionWitness(condition="sc", verdict="holds")


def check_nc(g: Digraph, f: int) -> ConditionWitness:
    """Cut-based condition over every fault set with |F| ≤ f."""
    FaultBudget(f, g.n)
    if g.n > MAX_NC_NODES:
        raise ValueError(
            "check_nc enumerates 3^n partitions; refusing n=%d > %d"
            % (g.n, MAX_NC_NODES)
        )
    for fault in fault_subsets(g.n, f):
        witness = nc_with_param(g, fault, f)
        if not witness.holds:
            return witness
    return ConditionWitness(condition="nc", verdict="holds")


# ---------------------------------------------------------------------------
# source component of the fault-free part


def unique_source_component(g: Digraph, fault_set: Iterable[int]) -> frozenset[int]:
    """The single source component of the graph minus the fault set.

    Callers rely on the path-based condition holding for ``fault_set``,
    which guarantees uniqueness; if it fails, every source component is
    reported in the raised error.
    """
    remaining = set(range(g.n)) - set(fault_set)
    comps = source_components(g, within=remaining)
    if len(comps) != 1:
        raise MultipleSourceComponentsError(comps)
    return frozenset(comps[0])
