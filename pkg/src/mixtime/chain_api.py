"""Pluggable Markov-chain interface and the random-walk sampler."""

from __future__ import annotations

from typing import Hashable, NamedTuple

import numpy as np


class Proposal(NamedTuple):
    """One random choice of a transition rule that leaves the current state."""

    target: Hashable
    kappa: float


class MarkovChain:
    """Base class for chains analysed by the toolkit.

    Subclasses hold a validated instance and implement
    :meth:`arbitrary_state` and :meth:`neighbours`. States must be hashable
    and totally ordered; the built-in chains use non-negative integers
    (bitmasks), so equal states always have identical encodings.

    Chains whose weights depend on the whole state space set
    ``needs_weight_pass`` and implement :meth:`finalize_weights`, which the
    state-graph builder calls once the state list is known.
    """

    kind = "abstract"
    needs_weight_pass = False

    def arbitrary_state(self):
        raise NotImplementedError

    def neighbours(self, state) -> list[Proposal]:
        """Every random choice not resolving to "stay", with its kappa.

        Duplicate targets are allowed; the probability of staying is one
        minus the sum of the returned kappas.
        """
        raise NotImplementedError

    def weight(self, state) -> float:
        return 1.0

    def finalize_weights(self, states) -> None:
        pass

    def encode(self, state) -> str:
        return str(state)

    def decode(self, text: str):
        raise NotImplementedError

    def instance_id(self) -> str:
        return str(getattr(self, "instance", ""))


def arbitrary_state(chain: MarkovChain):
    return chain.arbitrary_state()


def neighbours(chain: MarkovChain, state) -> list[Proposal]:
    return chain.neighbours(state)


def weight(chain: MarkovChain, state) -> float:
    return chain.weight(state)


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator; ``seed`` may already be a Generator or SeedSequence.

    Independent streams for parallel work come from
    ``np.random.SeedSequence(seed).spawn(k)``.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def random_walk(chain: MarkovChain, start, t: int, seed=None):
    """Run ``t`` Metropolis steps from ``start`` and return the final state.

    Each step draws one uniform to select a proposal by kappa (the leftover
    mass means "stay") and, when the weight ratio is below one, a second
    uniform for the acceptance test.
    """
    if t < 0:
        raise ValueError("step count must be non-negative")
    rng = make_rng(seed)
    x = start
    wx = chain.weight(x)
    for _ in range(t):
        r = rng.random()
        acc = 0.0
        y = None
        for p in chain.neighbours(x):
            acc += p.kappa
            if r < acc:
                y = p.target
                break
        if y is None:
            continue
        wy = chain.weight(y)
        if wy >= wx or rng.random() < wy / wx:
            x, wx = y, wy
    return x
