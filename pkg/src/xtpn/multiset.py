"""Token multisets: per-place bags of token lifetimes and the place-indexed family of them.

A bag is stored as a sorted tuple; equal lifetimes are interchangeable
tokens, so no identity beyond the value is tracked.  A *delta* is a plain
sequence (one entry per place) of token tuples, used for the produced and
consumed sets of a transition.
"""

from __future__ import annotations

import bisect
import enum
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .net import ArcKind, XtpnNet
from .timeval import Time, is_inf

Tokens = tuple[Fraction, ...]
Delta = tuple[Tokens, ...]


class Probe(enum.Enum):
    """Markers for entries of an activation probe that are not token subsets."""

    ABSENT = "absent"  # place is not an input of the transition
    NOT_ENOUGH = "#"  # input place without enough mature tokens


ABSENT = Probe.ABSENT
NOT_ENOUGH = Probe.NOT_ENOUGH


class RemovalPolicy(enum.Enum):
    OLDEST = "oldest"
    YOUNGEST = "youngest"
    RANDOM = "random"


class ReadArcMode(enum.Enum):
    """What happens to tokens behind a read arc when production runs.

    MODE1: never taken, never returned (the default).
    MODE2I: taken at production start, returned as fresh tokens.
    MODE2II: taken at production start, returned aged by the production time.
    """

    MODE1 = "1"
    MODE2I = "2i"
    MODE2II = "2ii"


class MultisetError(ValueError):
    pass


@dataclass(frozen=True)
class TokenBag:
    """Lifetimes of the tokens in one place; ``bound`` is the place's lifetime limit."""

    bound: Time
    items: Tokens = ()

    def __post_init__(self):
        items = tuple(sorted(self.items))
        if items and (items[0] < 0 or items[-1] > self.bound):
            raise MultisetError(f"lifetime outside [0, {self.bound}]: {items}")
        object.__setattr__(self, "items", items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def count_at_least(self, threshold) -> int:
        return len(self.items) - bisect.bisect_left(self.items, threshold)


Marking = tuple[TokenBag, ...]


def is_submultiset(sub: Iterable, bag: Iterable) -> bool:
    need = Counter(sub)
    have = Counter(bag)
    return all(have[k] >= n for k, n in need.items())


def age_bag(bag: TokenBag, tau: Fraction) -> TokenBag:
    """Add ``tau`` to every lifetime, dropping tokens that end up beyond the bound."""
    if tau < 0:
        raise MultisetError("negative elapse")
    if is_inf(bag.bound):
        return TokenBag(bag.bound, tuple(k + tau for k in bag.items))
    return TokenBag(bag.bound, tuple(k + tau for k in bag.items if k + tau <= bag.bound))


def age_marking(marking: Marking, tau: Fraction) -> Marking:
    return tuple(age_bag(b, tau) for b in marking)


def add_fresh(bag: TokenBag, v: int) -> TokenBag:
    return TokenBag(bag.bound, (Fraction(0),) * v + bag.items)


def activating_subset(bag: TokenBag, gamma_low, weight: int) -> Tokens | Probe:
    """All mature tokens (lifetime >= ``gamma_low``) if there are at least ``weight`` of them."""
    start = bisect.bisect_left(bag.items, gamma_low)
    mature = bag.items[start:]
    return mature if len(mature) >= weight else NOT_ENOUGH


def remove_tokens(
    bag: TokenBag,
    activating: Sequence[Fraction],
    v: int,
    policy: RemovalPolicy = RemovalPolicy.OLDEST,
    seed: int | None = None,
) -> tuple[TokenBag, Tokens]:
    """Take ``v`` tokens out of ``activating`` (a sub-multiset of ``bag``).

    Returns the remaining bag and the removed tokens (sorted).  ``seed`` drives
    the RANDOM policy and is ignored otherwise.
    """
    activating = sorted(activating)
    if v > len(activating):
        raise MultisetError(f"need {v} tokens, activating subset has {len(activating)}")
    if not is_submultiset(activating, bag.items):
        raise MultisetError("activating subset is not part of the bag")
    if v == 0:
        return bag, ()
    if policy is RemovalPolicy.OLDEST:
        removed = activating[-v:]
    elif policy is RemovalPolicy.YOUNGEST:
        removed = activating[:v]
    elif policy is RemovalPolicy.RANDOM:
        removed = sorted(random.Random(seed).sample(activating, v))
    else:
        raise MultisetError(f"unknown policy {policy!r}")
    return TokenBag(bag.bound, _difference(bag.items, removed)), tuple(removed)


def _difference(items: Sequence, removed: Iterable) -> Tokens:
    left = Counter(removed)
    out = []
    for k in items:
        if left[k]:
            left[k] -= 1
        else:
            out.append(k)
    if +left:
        raise MultisetError(f"cannot remove {sorted(left.elements())}: not present")
    return tuple(out)


def m_include(probe: Sequence, marking: Marking) -> bool:
    """Inclusion of a probe in a marking; NOT_ENOUGH entries are never included."""
    if len(probe) != len(marking):
        raise MultisetError("size mismatch")
    for entry, bag in zip(probe, marking):
        if entry is ABSENT:
            continue
        if entry is NOT_ENOUGH or not is_submultiset(entry, bag.items):
            return False
    return True


def m_add(marking: Marking, delta: Sequence[Sequence[Fraction]]) -> Marking:
    if len(delta) != len(marking):
        raise MultisetError("size mismatch")
    return tuple(TokenBag(b.bound, b.items + tuple(d)) if d else b for b, d in zip(marking, delta))


def m_subtract(marking: Marking, delta: Sequence[Sequence[Fraction]]) -> Marking:
    if len(delta) != len(marking):
        raise MultisetError("size mismatch")
    return tuple(TokenBag(b.bound, _difference(b.items, d)) if d else b for b, d in zip(marking, delta))


def empty_delta(n: int) -> Delta:
    return ((),) * n


# -- transition-specific sets ------------------------------------------------

def activation_probe(net: XtpnNet, marking: Marking, t) -> tuple:
    """Per place: the activating subset, NOT_ENOUGH, or ABSENT, over Normal and Read inputs."""
    probe = [ABSENT] * len(net.places)
    for j, w, kind in net.input_arcs(t):
        if kind is ArcKind.INHIBITOR:
            continue
        probe[j] = activating_subset(marking[j], net.places[j].gamma_low, w)
    return tuple(probe)


def build_produce_set(net: XtpnNet, t, mode: ReadArcMode = ReadArcMode.MODE1,
                      held: Sequence[Sequence[Fraction]] | None = None,
                      duration: Fraction = Fraction(0)) -> Delta:
    """Tokens created when ``t`` ends production.

    Normal output arcs yield ``W(t, p)`` fresh tokens.  Under the alternative
    read-arc modes the tokens ``held`` since production start come back to
    their read-arc places: fresh (MODE2I) or aged by ``duration`` with those
    past the place limit dropped (MODE2II).
    """
    out = [[] for _ in net.places]
    for j, w in net.output_arcs(t):
        out[j].extend([Fraction(0)] * w)
    if mode is not ReadArcMode.MODE1:
        for j, w, kind in net.input_arcs(t):
            if kind is not ArcKind.READ:
                continue
            taken = held[j] if held is not None else ()
            if mode is ReadArcMode.MODE2I:
                out[j].extend([Fraction(0)] * (len(taken) if held is not None else w))
            else:
                limit = net.places[j].gamma_high
                out[j].extend(k + duration for k in taken if k + duration <= limit)
    return tuple(tuple(sorted(x)) for x in out)


def build_consume_set(net: XtpnNet, marking: Marking, t,
                      policy: RemovalPolicy = RemovalPolicy.OLDEST,
                      mode: ReadArcMode = ReadArcMode.MODE1,
                      seed: int | None = None) -> Delta:
    """Tokens taken from input places when ``t`` starts production."""
    out: list[Tokens] = [()] * len(net.places)
    for j, w, kind in net.input_arcs(t):
        if kind is ArcKind.INHIBITOR or (kind is ArcKind.READ and mode is ReadArcMode.MODE1):
            continue
        sub = activating_subset(marking[j], net.places[j].gamma_low, w)
        if sub is NOT_ENOUGH:
            raise MultisetError(f"transition {t!r} is not active: place {net.places[j].id} short")
        place_seed = None if seed is None else (seed * 0x9E3779B1 + j) % 2**64
        _, out[j] = remove_tokens(marking[j], sub, w, policy, place_seed)
    return tuple(out)
