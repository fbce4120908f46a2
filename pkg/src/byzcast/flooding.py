"""Flooding subprotocol: message shapes, path codes, and the receive rules.

Messages have the form ``(value, path)`` where ``path`` is the relay prefix
(empty for an initiation).  A receiver applies four rules, in order:

* rule 0 — malformed: the value is not a bit or the path does not decode;
* rule (i) — the claimed path extended by the sender is not a simple path
  of the graph;
* rule (ii) — a message with the same (sender, path) pair was already
  taken in during this flood;
* rule (iii) — the receiver itself appears on the claimed path;
* rule (iv) — otherwise the value is recorded along path+sender+receiver
  and the message is queued for forwarding as (value, path+sender).

Paths travel inside messages as nibble-packed integers (4 bits per node id,
a sentinel bit on top), which keeps every path key a small int and bounds
the node-id space at 15; graphs driven through flooding are capped at 15
nodes so that every live path key fits a 64-bit word.  One flood lasts exactly n rounds; a node silent
in the first round despite being an expected initiator is substituted by
the default message ``(1, empty)`` at each of its live out-neighbors.

The functions here are the single-node reference semantics; the batched
engine in the kernel modules implements the same rules for whole-network
runs, and tests hold the two routes equal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .digraph import Digraph

#: Largest node id that fits a nibble; graphs driven through flooding must
#: keep ids at or below this.
MAX_FLOOD_NODE = 15

#: Path code of the empty path (just the sentinel bit).
EMPTY_CODE = 1

#: Default message substituted for a silent expected initiator.
DEFAULT_VALUE = 1

# Decision outcomes for a delivered message, in rule order.
MALFORMED = "malformed"  # rule 0
INVALID_PATH = "invalid-path"  # rule (i)
DUPLICATE = "duplicate"  # rule (ii)
OWN_NODE = "own-node"  # rule (iii)
ACCEPT = "accept"  # rule (iv)

#: Origin tag for messages whose initiating value is unknowable (adversary
#: submissions and substituted defaults).
UNKNOWN_ORIGIN = -1


# ---------------------------------------------------------------------------
# nibble-packed path codes


def code_append(code: int, node: int) -> int:
    """Path code with ``node`` appended at the end."""
    return (code << 4) | node


def path_code(path: Iterable[int]) -> int:
    """Pack a node sequence into its integer code."""
    code = EMPTY_CODE
    for node in path:
        if not 0 <= node <= MAX_FLOOD_NODE:
            raise ValueError("node %r does not fit the path encoding" % (node,))
        code = (code << 4) | node
    return code


def code_valid(code: int, n: int) -> bool:
    """True iff ``code`` decodes to a node sequence over ids < n.

    Repeats and edge violations are deliberately not checked here; those
    are path-of-the-graph questions answered by rule (i).
    """
    if code < EMPTY_CODE:
        return False
    bits = code.bit_length() - 1
    if bits % 4 or bits > 4 * MAX_FLOOD_NODE:
        return False
    probe = code
    while probe > EMPTY_CODE:
        if probe & 15 >= n:
            return False
        probe >>= 4
    return probe == EMPTY_CODE


def decode_path(code: int) -> tuple[int, ...]:
    """Inverse of :func:`path_code`."""
    nodes = []
    while code > EMPTY_CODE:
        nodes.append(code & 15)
        code >>= 4
    if code != EMPTY_CODE:
        raise ValueError("invalid path code")
    return tuple(reversed(nodes))


def code_len(code: int) -> int:
    """Number of nodes in the coded path."""
    return (code.bit_length() - 1) // 4


def code_mask(code: int) -> int:
    """Bitmask of the node ids appearing in the coded path."""
    mask = 0
    while code > EMPTY_CODE:
        mask |= 1 << (code & 15)
        code >>= 4
    return mask


# ---------------------------------------------------------------------------
# reference single-node semantics


@dataclass(frozen=True)
class FloodMessage:
    """One transmission: a bit plus the relay path prefix."""

    value: int
    path: tuple[int, ...] = ()

    @property
    def code(self) -> int:
        return path_code(self.path)


@dataclass
class FloodState:
    """Per-node flood bookkeeping: taken-in keys, records, outbox."""

    node: int
    records: dict[int, int] = field(default_factory=dict)
    seen: set[tuple[int, int]] = field(default_factory=set)
    outbox: list[FloodMessage] = field(default_factory=list)


def flood_init(state: FloodState, value: int) -> FloodMessage:
    """Queue this node's initiation ``(value, empty)`` for the first round."""
    if value not in (0, 1):
        raise ValueError("flood value must be a bit, got %r" % (value,))
    message = FloodMessage(value, ())
    state.outbox.append(message)
    return message


def flood_receive(
    g: Digraph, state: FloodState, sender: int, message: FloodMessage
) -> str:
    """Apply the receive rules for one delivered message.

    Returns the decision constant; on ACCEPT the value is recorded along
    the full path and the forwarded copy is queued on ``state.outbox``.
    """
    v = state.node
    if message.value not in (0, 1):
        return MALFORMED
    try:
        code = path_code(message.path)
    except ValueError:
        return MALFORMED
    if not code_valid(code, g.n):
        return MALFORMED
    # rule (i): path + sender must be a simple path of the graph
    extended = message.path + (sender,)
    if len(set(extended)) != len(extended):
        return INVALID_PATH
    if any(not g.has_edge(a, b) for a, b in zip(extended, extended[1:])):
        return INVALID_PATH
    # rule (ii): keyed on (sender, claimed path); keys register as soon as
    # rule (i) passes, so a repeat is a duplicate even if rule (iii)
    # discarded the first copy
    key = (sender, code)
    if key in state.seen:
        return DUPLICATE
    state.seen.add(key)
    # rule (iii)
    if v in message.path:
        return OWN_NODE
    # rule (iv)
    full = path_code(extended + (v,))
    state.records[full] = message.value
    state.outbox.append(FloodMessage(message.value, extended))
    return ACCEPT


def record_along(records: dict[int, int], path: Iterable[int]) -> int | None:
    """Value recorded along a full path, or None."""
    return records.get(path_code(path))
