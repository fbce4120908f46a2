"""Byzantine adversary strategies for corrupted simulation nodes.

Each strategy decides, round by round, what every corrupted node emits.
Local broadcast is structural: a strategy returns one bundle per corrupted
sender and the engine delivers it identically to all of that sender's
out-neighbors, so equivocation toward different neighbors is impossible by
construction — the interesting attacks are lying about values, fabricating
paths, replaying, and staying silent.

A strategy sees a :class:`~byzcast.protocol.FloodView` before every round;
through it, ``engine.pending_of(sim)`` exposes what an honest node in the
corrupted node's position would send this round (shadow state), which is
what relay-style attacks mutate.  Strategies hold no state that outlives
``reset``, so one instance replays identically across runs with the same
seed — the determinism contract relies on that.
"""

from __future__ import annotations

import random
from typing import Iterable, Mapping, Sequence

from .flooding import EMPTY_CODE

Bundle = Sequence[tuple[int, int]]


class Adversary:
    """Base strategy: silent unless a subclass overrides :meth:`bundles`."""

    name = "silent"

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed
        self.rng = random.Random(seed)
        self.ctx: dict = {}

    def reset(self, **ctx) -> None:
        """Start a fresh run: rewind the generator, remember the context."""
        self.rng = random.Random(self.seed)
        self.ctx = ctx
        self._clear()

    def _clear(self) -> None:
        """Hook for per-run strategy state; default none."""

    def bundles(self, view) -> Mapping[int, Bundle]:
        """Emissions for this round, keyed by corrupted sim id."""
        return {}

    def __repr__(self) -> str:  # pragma: no cover - debugging nicety
        return "%s(seed=%d)" % (type(self).__name__, self.seed)


class SilentAdversary(Adversary):
    """Crashed from the start: never emits anything."""

    name = "silent"


class FlipRelayAdversary(Adversary):
    """Forwards honestly but flips the bit on every relayed message.

    Initiations (empty-path messages) keep their value, so the lie is
    confined to what the node relays for others.
    """

    name = "flip-relay"

    def bundles(self, view) -> Mapping[int, Bundle]:
        out = {}
        for s in view.faulty:
            bundle = []
            for value, code in view.engine.pending_of(s):
                if code != EMPTY_CODE:
                    value = 1 - value
                bundle.append((value, code))
            out[s] = bundle
        return out


class ForgePathsAdversary(Adversary):
    """Emits honest traffic plus fabricated messages with invented paths.

    Half the fabrications are arbitrary node strings (discarded by the
    path-of-the-graph rule), half are genuine backward walks ending at the
    sender (well-formed lies the vote-counting layers must absorb).
    """

    name = "forge-paths"

    def bundles(self, view) -> Mapping[int, Bundle]:
        g, rng = view.g, self.rng
        out = {}
        for s in view.faulty:
            bundle = list(view.engine.pending_of(s))
            label = view.labels[s]
            for _ in range(rng.randrange(1, 3)):
                if rng.random() < 0.5:
                    code = EMPTY_CODE
                    for _ in range(rng.randrange(1, 4)):
                        code = (code << 4) | rng.randrange(g.n)
                else:
                    code = self._backward_walk(g, label, rng)
                bundle.append((rng.randrange(2), code))
            out[s] = bundle
        return out

    @staticmethod
    def _backward_walk(g, label: int, rng: random.Random) -> int:
        walk = []
        cur = label
        for _ in range(rng.randrange(1, 4)):
            preds = [u for u in g.inn(cur) if u != label and u not in walk]
            if not preds:
                break
            cur = rng.choice(preds)
            walk.append(cur)
        code = EMPTY_CODE
        for node in reversed(walk):
            code = (code << 4) | node
        return code


class WithholdInitAdversary(Adversary):
    """Suppresses its own initiations but relays everything honestly.

    First-round silence makes every out-neighbor substitute the default
    message in the corrupted node's name.
    """

    name = "withhold-init"

    def bundles(self, view) -> Mapping[int, Bundle]:
        return {
            s: [
                (value, code)
                for value, code in view.engine.pending_of(s)
                if code != EMPTY_CODE
            ]
            for s in view.faulty
        }


class SplitBrainAdversary(Adversary):
    """Replays last round's first message with the opposite value.

    The repeated (sender, path) key must be discarded by the duplicate
    rule, so the first value delivered on a path is the one that sticks.
    """

    name = "split-brain"

    def _clear(self) -> None:
        self._last: dict[int, tuple[int, int]] = {}

    def bundles(self, view) -> Mapping[int, Bundle]:
        if view.round_no == 1:
            self._last = {}
        out = {}
        for s in view.faulty:
            bundle = list(view.engine.pending_of(s))
            prev = self._last.get(s)
            if prev is not None:
                value, code = prev
                bundle.append((1 - value, code))
            if bundle:
                self._last[s] = bundle[0]
            out[s] = bundle
        return out


class RandomAdversary(Adversary):
    """Seeded generator of arbitrary traffic: noise, lies, and garbage."""

    name = "random"

    def bundles(self, view) -> Mapping[int, Bundle]:
        rng = self.rng
        out = {}
        for s in view.faulty:
            bundle = []
            for _ in range(rng.randrange(0, 4)):
                roll = rng.random()
                if roll < 0.4 and view.engine.pending_of(s):
                    value, code = rng.choice(view.engine.pending_of(s))
                    if rng.random() < 0.5:
                        value = 1 - value
                elif roll < 0.7:
                    code = EMPTY_CODE
                    for _ in range(rng.randrange(0, 3)):
                        code = (code << 4) | rng.randrange(view.g.n)
                    value = rng.randrange(2)
                else:
                    value = rng.choice((0, 1, 7, -3))
                    code = rng.randrange(-4, 1 << 12)
                bundle.append((value, code))
            out[s] = bundle
        return out


def adversary_suite(seed: int = 0) -> tuple[Adversary, ...]:
    """Fresh instances of every strategy, seeded for reproducibility."""
    return (
        SilentAdversary(seed),
        FlipRelayAdversary(seed),
        ForgePathsAdversary(seed),
        WithholdInitAdversary(seed),
        SplitBrainAdversary(seed),
        RandomAdversary(seed),
    )


_REGISTRY = {
    cls.name: cls
    for cls in (
        SilentAdversary,
        FlipRelayAdversary,
        ForgePathsAdversary,
        WithholdInitAdversary,
        SplitBrainAdversary,
        RandomAdversary,
    )
}


def adversary_names() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def make_adversary(name: str, seed: int = 0) -> Adversary:
    """Instantiate a strategy by registry name."""
    try:
        cls = _REGISTRY[name]
    except KeyError:
        raise ValueError(
            "unknown adversary %r (known: %s)" % (name, ", ".join(adversary_names()))
        ) from None
    return cls(seed)
