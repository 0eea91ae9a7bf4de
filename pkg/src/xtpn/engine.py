"""Event-driven simulation: jump from one relevant state to the next.

A relevant state is reached when a token matures, a token hits its place
limit, an active transition reaches its activation deadline, or a producing
transition reaches its production deadline.  Between two relevant states only
lifetimes and timers grow, so the engine elapses straight to the nearest one.

Everything that happens at one timestamp is processed as a sequence of
micro-steps, always taking the highest-priority ready one:

1. the first (declaration order) transition whose production is complete,
2. the first active transition at its activation deadline,
3. removal of the tokens sitting exactly at their place limit.

Maturity needs no micro-step: activation is re-evaluated while elapsing.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .multiset import ReadArcMode, RemovalPolicy
from .net import XtpnNet, validate
from .sampling import SeededSampler, keyed_int
from .state import (
    Active,
    ModeConfig,
    NetState,
    Producing,
    Sampler,
    elapse,
    end_production,
    expire_at_limit,
    initial_state,
    start_production,
)
from .timeval import Time, as_time, is_inf
from .trace import EventKind, Trace, TraceRecord, deltas, phase_changes

Observer = Callable[[str, int | None, NetState, NetState], None]


class SimulationError(RuntimeError):
    pass


class ZeroTimeCascadeError(SimulationError):
    def __init__(self, message: str, at: Fraction | None = None):
        super().__init__(message)
        self.at = at


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    max_time: Time = Fraction(100)
    resolution: int = 1000
    horizon_cap: Time = Fraction(1000)
    removal_policy: RemovalPolicy = RemovalPolicy.OLDEST
    read_arc_mode: ReadArcMode = ReadArcMode.MODE1
    max_zero_time_steps: int = 100_000
    max_events: int | None = None
    shuffle_conflicts: bool = False

    def __post_init__(self):
        object.__setattr__(self, "max_time", as_time(self.max_time))
        object.__setattr__(self, "horizon_cap", as_time(self.horizon_cap))
        if self.resolution < 1:
            raise ValueError("resolution must be >= 1")
        if self.max_time < 0:
            raise ValueError("max_time must be >= 0")

    @property
    def mode(self) -> ModeConfig:
        return ModeConfig(self.removal_policy, self.read_arc_mode)

    def sampler(self) -> SeededSampler:
        return SeededSampler(self.seed, self.resolution, self.horizon_cap)


@dataclass(frozen=True)
class RelevantEvent:
    at: Fraction
    kind: EventKind
    element: str
    detail: Fraction  # token lifetime or timer value involved


_KIND_ORDER = {
    EventKind.PRODUCTION_END: 0,
    EventKind.PRODUCTION_START: 1,
    EventKind.EXPIRY: 2,
    EventKind.MATURITY: 3,
}


def next_relevant(net: XtpnNet, z: NetState) -> tuple[Fraction | None, list[RelevantEvent]]:
    """Delay to the nearest relevant state and every event due exactly then."""
    cands: list[tuple[Fraction, EventKind, int, str, Fraction]] = []
    for j, (p, bag) in enumerate(zip(net.places, z.marking)):
        pos = bisect.bisect_left(bag.items, p.gamma_low)
        if pos:  # the oldest immature token matures first
            k = bag.items[pos - 1]
            cands.append((p.gamma_low - k, EventKind.MATURITY, j, p.id, k))
        if bag.items and not is_inf(p.gamma_high):
            k = bag.items[-1]
            cands.append((p.gamma_high - k, EventKind.EXPIRY, j, p.id, k))
    for i, (t, timer) in enumerate(zip(net.transitions, z.timers)):
        if isinstance(timer, Active):
            cands.append((timer.deadline - timer.u, EventKind.PRODUCTION_START, i, t.id, timer.u))
        elif isinstance(timer, Producing):
            cands.append((timer.deadline - timer.w, EventKind.PRODUCTION_END, i, t.id, timer.w))
    if not cands:
        return None, []
    tau = min(c[0] for c in cands)
    due = sorted((c for c in cands if c[0] == tau), key=lambda c: (_KIND_ORDER[c[1]], c[2]))
    return tau, [RelevantEvent(z.now + tau, kind, el, detail) for _, kind, _, el, detail in due]


def _record(kind, element, at, place_ids, trans_ids, before, after, removed=(), added=()):
    return TraceRecord(
        at=at,
        kind=kind,
        element=element,
        removed=deltas(place_ids, removed),
        added=deltas(place_ids, added),
        phases=phase_changes(trans_ids, before.timers, after.timers),
    )


def _ready_start(z: NetState, config: SimConfig) -> int | None:
    ready = [i for i, tm in enumerate(z.timers) if isinstance(tm, Active) and tm.u == tm.deadline]
    if not ready:
        return None
    if config.shuffle_conflicts:
        ready.sort(key=lambda i: keyed_int(config.seed, "conflict", str(z.now), i))
    return ready[0]


def step(net: XtpnNet, z: NetState, config: SimConfig, sampler: Sampler,
         observer: Observer | None = None) -> tuple[NetState, list[TraceRecord]]:
    """Advance to the next relevant state and settle everything due at that instant."""
    tau, _ = next_relevant(net, z)
    if tau is None:
        raise SimulationError("no relevant state is reachable")
    pids = tuple(p.id for p in net.places)
    tids = tuple(t.id for t in net.transitions)
    mode = config.mode
    records: list[TraceRecord] = []

    before = z
    z = elapse(net, z, tau, sampler)
    if observer:
        observer("elapse", None, before, z)
    pending = phase_changes(tids, before.timers, z.timers)
    if tau > 0:
        for p, bag in zip(net.places, z.marking):
            n = sum(1 for k in bag.items if k == p.gamma_low)
            if n and p.gamma_low > 0:
                records.append(TraceRecord(z.now, EventKind.MATURITY, p.id, matured=n))

    for n_steps in range(config.max_zero_time_steps + 1):
        before = z
        done = next((i for i, tm in enumerate(z.timers)
                     if isinstance(tm, Producing) and tm.w == tm.deadline), None)
        if done is not None:
            z, produced = end_production(net, z, done, sampler, mode)
            records.append(_record(EventKind.PRODUCTION_END, tids[done], z.now, pids, tids,
                                   before, z, added=produced))
            action = ("end", done)
        elif (ready := _ready_start(z, config)) is not None:
            z, consumed = start_production(net, z, ready, sampler, mode)
            records.append(_record(EventKind.PRODUCTION_START, tids[ready], z.now, pids, tids,
                                   before, z, removed=consumed))
            action = ("start", ready)
        else:
            z, removed = expire_at_limit(net, z, sampler)
            if not any(removed):
                break
            changes = phase_changes(tids, before.timers, z.timers)
            for pid, ks in deltas(pids, removed):
                records.append(TraceRecord(z.now, EventKind.EXPIRY, pid, removed=((pid, ks),),
                                           phases=changes))
                changes = ()
            action = ("expire", None)
        if observer:
            observer(action[0], action[1], before, z)
    else:
        raise ZeroTimeCascadeError(
            f"more than {config.max_zero_time_steps} zero-time steps at t={z.now}", z.now)

    if pending and records:
        first = records[0]
        records[0] = TraceRecord(first.at, first.kind, first.element, first.removed,
                                 first.added, pending + first.phases, first.matured)
    return z, records


def simulate(net: XtpnNet, config: SimConfig = SimConfig(), *,
             sampler: Sampler | None = None, initial: NetState | None = None,
             observer: Observer | None = None) -> Trace:
    """Run the engine from the initial marking (or ``initial``) up to ``config.max_time``.

    Events due exactly at ``max_time`` are processed; the final state is the
    state at ``max_time`` unless ``max_events`` stopped the run earlier.
    """
    problems = validate(net)
    if problems:
        raise SimulationError("net is not well-formed: " + "; ".join(map(str, problems)))
    sampler = sampler or config.sampler()
    z = initial if initial is not None else initial_state(net, sampler)
    trace = Trace(tuple(p.id for p in net.places), tuple(t.id for t in net.transitions), z)
    horizon = config.max_time
    while z.now < horizon:
        tau, _ = next_relevant(net, z)
        if tau is None or z.now + tau > horizon:
            if not is_inf(horizon):
                before = z
                z = elapse(net, z, horizon - z.now, sampler)
                if observer:
                    observer("elapse", None, before, z)
            break
        z, records = step(net, z, config, sampler, observer)
        trace.records.extend(records)
        if config.max_events is not None and len(trace.records) >= config.max_events:
            break
    trace.final = z
    return trace


# -- statistics ----------------------------------------------------------------

@dataclass
class TransitionStats:
    starts: int = 0
    ends: int = 0
    producing_time: Fraction = Fraction(0)


@dataclass
class PlaceStats:
    series: list[tuple[Fraction, int]] = field(default_factory=list)
    max_tokens: int = 0
    min_tokens: int = 0
    expired: int = 0


@dataclass
class StatsReport:
    end_time: Fraction
    transitions: dict[str, TransitionStats]
    places: dict[str, PlaceStats]


def collect_stats(trace: Trace) -> StatsReport:
    counts = {pid: len(bag) for pid, bag in zip(trace.place_ids, trace.initial.marking)}
    places = {pid: PlaceStats([(trace.initial.now, n)], n, n) for pid, n in counts.items()}
    trans = {tid: TransitionStats() for tid in trace.transition_ids}
    started: dict[str, Fraction] = {
        tid: trace.initial.now - tm.w
        for tid, tm in zip(trace.transition_ids, trace.initial.timers) if isinstance(tm, Producing)
    }
    for rec in trace.records:
        if rec.kind is EventKind.PRODUCTION_START:
            trans[rec.element].starts += 1
            started[rec.element] = rec.at
        elif rec.kind is EventKind.PRODUCTION_END:
            trans[rec.element].ends += 1
            trans[rec.element].producing_time += rec.at - started.pop(rec.element, rec.at)
        for pid, ks in rec.removed:
            counts[pid] -= len(ks)
            if rec.kind is EventKind.EXPIRY:
                places[pid].expired += len(ks)
        for pid, ks in rec.added:
            counts[pid] += len(ks)
        for pid, n in counts.items():
            st = places[pid]
            st.series.append((rec.at, n))
            st.max_tokens = max(st.max_tokens, n)
            st.min_tokens = min(st.min_tokens, n)
    for tid, since in started.items():
        trans[tid].producing_time += trace.end_time - since
    return StatsReport(trace.end_time, trans, places)
