"""Deadline samplers.

A sampler picks the activation deadline of a transition when it becomes
active and the production deadline when it starts producing.  It also hands
out seeds for the random token-removal policy.  Samplers are keyed by
transition index and an episode counter, so the draws of one transition do
not depend on what any other transition does.
"""

from __future__ import annotations

import hashlib
import logging
import math
from collections import defaultdict
from fractions import Fraction
from typing import Mapping

from .timeval import Time, as_time, is_inf

log = logging.getLogger(__name__)

ALPHA = "alpha"
BETA = "beta"


def keyed_int(*key) -> int:
    """A 64-bit integer derived from ``key`` (counter-based, platform independent)."""
    digest = hashlib.blake2b(repr(key).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class SamplerError(ValueError):
    pass


class SeededSampler:
    """Uniform draws on the grid ``low + k/resolution`` within ``[low, high]``.

    An infinite ``high`` is replaced by ``low + horizon_cap``.
    """

    def __init__(self, seed: int = 0, resolution: int = 1000, horizon_cap: Time = Fraction(1000)):
        if resolution < 1:
            raise SamplerError("resolution must be >= 1")
        self.seed = seed
        self.resolution = resolution
        self.horizon_cap = as_time(horizon_cap)
        self._episodes: dict[tuple, int] = defaultdict(int)
        self._warned: set[tuple] = set()

    def deadline(self, t: int, phase: str, low: Fraction, high: Time) -> Fraction:
        if is_inf(high):
            if (t, phase) not in self._warned:
                self._warned.add((t, phase))
                log.warning("transition %d: unbounded %s interval capped at +%s", t, phase, self.horizon_cap)
            high = low + self.horizon_cap
        ep = self._episodes[(t, phase)]
        self._episodes[(t, phase)] += 1
        steps = math.floor((high - low) * self.resolution)
        k = keyed_int(self.seed, t, phase, ep) % (steps + 1)
        return low + Fraction(k, self.resolution)

    def removal_seed(self, t: int) -> int:
        ep = self._episodes[(t, "remove")]
        self._episodes[(t, "remove")] += 1
        return keyed_int(self.seed, t, "remove", ep)


class FixedSampler:
    """Deterministic deadlines: the same ``(alpha, beta)`` pair for every episode of a transition.

    ``deadlines`` maps transition index to ``(alpha_deadline, beta_deadline)``.
    Each value must lie inside the transition's interval; that is checked on use.
    """

    def __init__(self, deadlines: Mapping[int, tuple], seed: int = 0):
        self.deadlines = {t: (as_time(a), as_time(b)) for t, (a, b) in deadlines.items()}
        self.seed = seed
        self._removals: dict[int, int] = defaultdict(int)

    @classmethod
    def for_net(cls, net, deadlines: Mapping[str, tuple], seed: int = 0) -> "FixedSampler":
        return cls({net.t_index(tid): pair for tid, pair in deadlines.items()}, seed)

    def deadline(self, t: int, phase: str, low: Fraction, high: Time) -> Fraction:
        try:
            value = self.deadlines[t][0 if phase == ALPHA else 1]
        except KeyError:
            raise SamplerError(f"no fixed deadline for transition {t}") from None
        if not low <= value <= high:
            raise SamplerError(f"fixed {phase} deadline {value} outside [{low}, {high}]")
        return value

    def removal_seed(self, t: int) -> int:
        ep = self._removals[t]
        self._removals[t] += 1
        return keyed_int(self.seed, t, "remove", ep)
