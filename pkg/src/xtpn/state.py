"""Net state (marking plus transition timers) and the rules that change it.

Every rule returns a new :class:`NetState`.  After each rule the timers of
non-producing transitions are re-evaluated against the new marking:

* inactive, now active      -> Active(0, freshly sampled deadline)
* active, still active      -> timer untouched (conflicts never reset it)
* active, no longer active  -> Inactive
* producing                 -> untouched (activation is not checked)
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Protocol

from .multiset import (
    Marking,
    ReadArcMode,
    RemovalPolicy,
    TokenBag,
    activating_subset,
    activation_probe,
    age_marking,
    build_consume_set,
    build_produce_set,
    m_add,
    m_include,
    m_subtract,
    NOT_ENOUGH,
)
from .net import ArcKind, XtpnNet
from .sampling import ALPHA, BETA
from .timeval import is_inf


class Sampler(Protocol):
    def deadline(self, t: int, phase: str, low: Fraction, high) -> Fraction: ...

    def removal_seed(self, t: int) -> int: ...


class StateError(RuntimeError):
    """A rule was applied to a state that does not satisfy its precondition."""


@dataclass(frozen=True)
class Inactive:
    phase = "inactive"


@dataclass(frozen=True)
class Active:
    u: Fraction
    deadline: Fraction
    phase = "active"


@dataclass(frozen=True)
class Producing:
    w: Fraction
    deadline: Fraction
    held: tuple = ()  # per place: tokens taken through read arcs, kept for return
    phase = "producing"


INACTIVE = Inactive()
Timer = Inactive | Active | Producing


@dataclass(frozen=True)
class NetState:
    marking: Marking
    timers: tuple[Timer, ...]
    now: Fraction = Fraction(0)

    def tokens(self, j: int) -> tuple[Fraction, ...]:
        return self.marking[j].items


@dataclass(frozen=True)
class ModeConfig:
    policy: RemovalPolicy = RemovalPolicy.OLDEST
    read_arcs: ReadArcMode = ReadArcMode.MODE1


DEFAULT_MODE = ModeConfig()


def marking_from(net: XtpnNet, tokens=None) -> Marking:
    tokens = net.initial_tokens if tokens is None else tokens
    return tuple(TokenBag(p.gamma_high, tuple(ks)) for p, ks in zip(net.places, tokens))


def is_active(net: XtpnNet, marking: Marking, t) -> bool:
    """Whether ``t`` has an activating subset on every Normal/Read input and no blocking inhibitor."""
    if not m_include(activation_probe(net, marking, t), marking):
        return False
    for j, w, kind in net.input_arcs(t):
        if kind is ArcKind.INHIBITOR and activating_subset(
                marking[j], net.places[j].gamma_low, w) is not NOT_ENOUGH:
            return False
    return True


def _activate(net: XtpnNet, i: int, sampler: Sampler) -> Active:
    t = net.transitions[i]
    return Active(Fraction(0), sampler.deadline(i, ALPHA, t.alpha_low, t.alpha_high))


def initial_state(net: XtpnNet, sampler: Sampler, tokens=None) -> NetState:
    marking = marking_from(net, tokens)
    timers = tuple(
        _activate(net, i, sampler) if is_active(net, marking, i) else INACTIVE
        for i in range(len(net.transitions))
    )
    return NetState(marking, timers, Fraction(0))


def _reevaluate(net: XtpnNet, timers, marking: Marking, sampler: Sampler, skip: int | None = None):
    out = list(timers)
    for i, timer in enumerate(timers):
        if i == skip or isinstance(timer, Producing):
            continue
        active = is_active(net, marking, i)
        if isinstance(timer, Active):
            if not active:
                out[i] = INACTIVE
        elif active:
            out[i] = _activate(net, i, sampler)
    return tuple(out)


def elapse(net: XtpnNet, z: NetState, tau: Fraction, sampler: Sampler) -> NetState:
    """Let ``tau`` time units pass: age tokens, advance timers, update activation."""
    if tau < 0:
        raise StateError("negative elapse")
    marking = age_marking(z.marking, tau)
    timers = []
    for i, timer in enumerate(z.timers):
        if isinstance(timer, Producing):
            timers.append(replace(timer, w=timer.w + tau))
        elif not is_active(net, marking, i):
            timers.append(INACTIVE)
        elif isinstance(timer, Active):
            timers.append(replace(timer, u=timer.u + tau))
        else:
            timers.append(_activate(net, i, sampler))
    return NetState(marking, tuple(timers), z.now + tau)


def start_production(net: XtpnNet, z: NetState, t, sampler: Sampler,
                     mode: ModeConfig = DEFAULT_MODE) -> tuple[NetState, tuple]:
    """Start production of ``t``; returns the new state and the consumed tokens per place."""
    i = net.t_index(t)
    timer = z.timers[i]
    if not isinstance(timer, Active) or timer.u != timer.deadline:
        raise StateError(f"{net.transitions[i].id} is not at its activation deadline: {timer}")
    if not is_active(net, z.marking, i):
        raise StateError(f"{net.transitions[i].id} is not active")
    consumed = build_consume_set(net, z.marking, i, mode.policy, mode.read_arcs,
                                 sampler.removal_seed(i))
    marking = m_subtract(z.marking, consumed)
    held = ()
    if mode.read_arcs is not ReadArcMode.MODE1:
        read = {j for j, _, kind in net.input_arcs(i) if kind is ArcKind.READ}
        held = tuple(consumed[j] if j in read else () for j in range(len(net.places)))
    spec = net.transitions[i]
    timers = list(z.timers)
    timers[i] = Producing(Fraction(0), sampler.deadline(i, BETA, spec.beta_low, spec.beta_high), held)
    timers = _reevaluate(net, timers, marking, sampler, skip=i)
    return NetState(marking, timers, z.now), consumed


def end_production(net: XtpnNet, z: NetState, t, sampler: Sampler,
                   mode: ModeConfig = DEFAULT_MODE) -> tuple[NetState, tuple]:
    """Finish production of ``t``; returns the new state and the produced tokens per place."""
    i = net.t_index(t)
    timer = z.timers[i]
    if not isinstance(timer, Producing) or timer.w != timer.deadline:
        raise StateError(f"{net.transitions[i].id} is not at its production deadline: {timer}")
    held = timer.held or ((),) * len(net.places)
    produced = build_produce_set(net, i, mode.read_arcs, held, timer.deadline)
    marking = m_add(z.marking, produced)
    timers = list(z.timers)
    timers[i] = INACTIVE  # re-evaluated below like any other transition
    timers = _reevaluate(net, timers, marking, sampler)
    return NetState(marking, timers, z.now), produced


def expire_at_limit(net: XtpnNet, z: NetState, sampler: Sampler) -> tuple[NetState, tuple]:
    """Remove tokens whose lifetime has reached the place limit.

    Such tokens are still valid at this instant but would exceed the limit
    after any further delay.  Returns the new state and the removed tokens.
    """
    removed = tuple(
        tuple(k for k in bag.items if not is_inf(bag.bound) and k >= bag.bound)
        for bag in z.marking
    )
    if not any(removed):
        return z, removed
    marking = m_subtract(z.marking, removed)
    return NetState(marking, _reevaluate(net, z.timers, marking, sampler), z.now), removed


def check_consistency(net: XtpnNet, z: NetState) -> list[str]:
    """Invariant violations of ``z``; empty for every state reachable by the rules."""
    problems = []
    for j, (p, bag) in enumerate(zip(net.places, z.marking)):
        if bag.bound != p.gamma_high:
            problems.append(f"{p.id}: bag bound {bag.bound} != {p.gamma_high}")
        if bag.items and (bag.items[0] < 0 or bag.items[-1] > p.gamma_high):
            problems.append(f"{p.id}: lifetime outside [0, {p.gamma_high}]")
    for i, (t, timer) in enumerate(zip(net.transitions, z.timers)):
        if isinstance(timer, Producing):
            if not (0 <= timer.w <= timer.deadline and t.beta_low <= timer.deadline <= t.beta_high):
                problems.append(f"{t.id}: producing timer out of range {timer}")
            continue
        active = is_active(net, z.marking, i)
        if active != isinstance(timer, Active):
            problems.append(f"{t.id}: timer {timer.phase} but is_active={active}")
        if isinstance(timer, Active) and not (
                0 <= timer.u <= timer.deadline and t.alpha_low <= timer.deadline <= t.alpha_high):
            problems.append(f"{t.id}: active timer out of range {timer}")
    return problems
