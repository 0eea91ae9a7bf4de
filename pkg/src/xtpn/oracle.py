"""Reference simulator that advances time in fixed ticks.

It re-applies the state-change rules from scratch on its own mutable state at
every tick and is meant only for cross-checking the event-driven engine on
small nets.  It shares the token multiset primitives with the engine but
none of the scheduling or state-change code.

All interval bounds, initial lifetimes, deadlines and ``max_time`` must be
multiples of ``tick``; otherwise events would fall between ticks.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .multiset import (
    NOT_ENOUGH,
    ReadArcMode,
    RemovalPolicy,
    TokenBag,
    activating_subset,
    age_bag,
    remove_tokens,
)
from .net import ArcKind, XtpnNet
from .sampling import ALPHA, BETA
from .state import INACTIVE, Active, NetState, Producing
from .timeval import Time, as_time, is_inf
from .trace import EventKind, Trace, TraceRecord


class OracleError(ValueError):
    pass


class OracleCascadeError(RuntimeError):
    def __init__(self, message: str, at: Fraction | None = None):
        super().__init__(message)
        self.at = at


@dataclass(frozen=True)
class OracleConfig:
    tick: Fraction
    max_time: Fraction
    removal_policy: RemovalPolicy = RemovalPolicy.OLDEST
    read_arc_mode: ReadArcMode = ReadArcMode.MODE1
    max_zero_time_steps: int = 100_000

    def __post_init__(self):
        object.__setattr__(self, "tick", as_time(self.tick))
        object.__setattr__(self, "max_time", as_time(self.max_time))
        if self.tick <= 0:
            raise OracleError("tick must be positive")


def _on_grid(value: Time, tick: Fraction) -> bool:
    return is_inf(value) or (value / tick).denominator == 1


class _Run:
    def __init__(self, net: XtpnNet, sampler, cfg: OracleConfig):
        self.net = net
        self.sampler = sampler
        self.cfg = cfg
        n = len(net.transitions)
        self.bags = [TokenBag(p.gamma_high, ks) for p, ks in zip(net.places, net.initial_tokens)]
        self.u: list[Fraction | None] = [None] * n
        self.alpha_dl: list[Fraction | None] = [None] * n
        self.w: list[Fraction | None] = [None] * n
        self.beta_dl: list[Fraction | None] = [None] * n
        self.held: list[tuple] = [()] * n
        self.now = Fraction(0)
        self.records: list[TraceRecord] = []

    # -- helpers ------------------------------------------------------------

    def draw(self, i: int, phase: str) -> Fraction:
        t = self.net.transitions[i]
        low, high = (t.alpha_low, t.alpha_high) if phase == ALPHA else (t.beta_low, t.beta_high)
        value = self.sampler.deadline(i, phase, low, high)
        if not _on_grid(value, self.cfg.tick):
            raise OracleError(f"deadline {value} of {t.id} is not a multiple of the tick")
        return value

    def enabled(self, i: int) -> bool:
        for j, weight, kind in self.net.input_arcs(i):
            mature = activating_subset(self.bags[j], self.net.places[j].gamma_low, weight)
            if kind is ArcKind.INHIBITOR:
                if mature is not NOT_ENOUGH:
                    return False
            elif mature is NOT_ENOUGH:
                return False
        return True

    def phase(self, i: int) -> str:
        if self.w[i] is not None:
            return "producing"
        return "active" if self.u[i] is not None else "inactive"

    def phases(self) -> list[str]:
        return [self.phase(i) for i in range(len(self.net.transitions))]

    def changed(self, before: list[str]) -> tuple:
        return tuple((t.id, self.phase(i)) for i, t in enumerate(self.net.transitions)
                     if self.phase(i) != before[i])

    def refresh(self):
        """Activation update after a discrete marking change."""
        for i in range(len(self.net.transitions)):
            if self.w[i] is not None:
                continue
            ok = self.enabled(i)
            if self.u[i] is None and ok:
                self.u[i] = Fraction(0)
                self.alpha_dl[i] = self.draw(i, ALPHA)
            elif self.u[i] is not None and not ok:
                self.u[i] = None
                self.alpha_dl[i] = None

    # -- the three kinds of micro-step ------------------------------------

    def finish(self, i: int):
        before = self.phases()
        mode = self.cfg.read_arc_mode
        added = [[] for _ in self.net.places]
        for j, weight in self.net.output_arcs(i):
            added[j] += [Fraction(0)] * weight
        for j, taken in enumerate(self.held[i]):
            if mode is ReadArcMode.MODE2I:
                added[j] += [Fraction(0)] * len(taken)
            elif mode is ReadArcMode.MODE2II:
                added[j] += [k + self.w[i] for k in taken if k + self.w[i] <= self.net.places[j].gamma_high]
        for j, ks in enumerate(added):
            if ks:
                self.bags[j] = TokenBag(self.bags[j].bound, self.bags[j].items + tuple(ks))
        self.w[i] = self.beta_dl[i] = None
        self.held[i] = ()
        self.refresh()
        self.records.append(TraceRecord(
            self.now, EventKind.PRODUCTION_END, self.net.transitions[i].id,
            added=tuple((self.net.places[j].id, tuple(sorted(ks))) for j, ks in enumerate(added) if ks),
            phases=self.changed(before)))

    def begin(self, i: int):
        before = self.phases()
        seed = self.sampler.removal_seed(i)
        mode = self.cfg.read_arc_mode
        removed = [()] * len(self.net.places)
        held = [()] * len(self.net.places)
        for j, weight, kind in self.net.input_arcs(i):
            if kind is ArcKind.INHIBITOR or (kind is ArcKind.READ and mode is ReadArcMode.MODE1):
                continue
            mature = activating_subset(self.bags[j], self.net.places[j].gamma_low, weight)
            place_seed = (seed * 0x9E3779B1 + j) % 2**64
            self.bags[j], removed[j] = remove_tokens(
                self.bags[j], mature, weight, self.cfg.removal_policy, place_seed)
            if kind is ArcKind.READ:
                held[j] = removed[j]
        self.u[i] = self.alpha_dl[i] = None
        self.w[i] = Fraction(0)
        self.held[i] = tuple(held) if mode is not ReadArcMode.MODE1 else ()
        self.beta_dl[i] = self.draw(i, BETA)
        self.refresh()
        self.records.append(TraceRecord(
            self.now, EventKind.PRODUCTION_START, self.net.transitions[i].id,
            removed=tuple((self.net.places[j].id, ks) for j, ks in enumerate(removed) if ks),
            phases=self.changed(before)))

    def expire(self) -> bool:
        before = self.phases()
        gone = []
        for j, bag in enumerate(self.bags):
            limit = bag.bound
            if is_inf(limit):
                continue
            old = tuple(k for k in bag.items if k >= limit)
            if old:
                self.bags[j] = TokenBag(limit, tuple(k for k in bag.items if k < limit))
                gone.append((self.net.places[j].id, old))
        if not gone:
            return False
        self.refresh()
        changes = self.changed(before)
        for pid, ks in gone:
            self.records.append(TraceRecord(self.now, EventKind.EXPIRY, pid,
                                            removed=((pid, ks),), phases=changes))
            changes = ()
        return True

    def settle(self):
        for _ in range(self.cfg.max_zero_time_steps + 1):
            n = len(self.net.transitions)
            due_end = [i for i in range(n) if self.w[i] is not None and self.w[i] == self.beta_dl[i]]
            if due_end:
                self.finish(due_end[0])
                continue
            due_start = [i for i in range(n) if self.u[i] is not None and self.u[i] == self.alpha_dl[i]]
            if due_start:
                self.begin(due_start[0])
                continue
            if not self.expire():
                return
        raise OracleCascadeError(f"zero-time cascade at t={self.now}", self.now)

    def advance(self):
        """One tick: age tokens, advance timers, update activation, note maturity."""
        tick = self.cfg.tick
        before = self.phases()
        self.bags = [age_bag(b, tick) for b in self.bags]
        self.now += tick
        for i in range(len(self.net.transitions)):
            if self.w[i] is not None:
                self.w[i] += tick
            elif not self.enabled(i):
                self.u[i] = self.alpha_dl[i] = None
            elif self.u[i] is not None:
                self.u[i] += tick
            else:
                self.u[i] = Fraction(0)
                self.alpha_dl[i] = self.draw(i, ALPHA)
        start = len(self.records)
        for p, bag in zip(self.net.places, self.bags):
            n = sum(1 for k in bag.items if k - tick < p.gamma_low <= k)
            if n:
                self.records.append(TraceRecord(self.now, EventKind.MATURITY, p.id, matured=n))
        return self.changed(before), start

    def state(self) -> NetState:
        timers = []
        for i in range(len(self.net.transitions)):
            if self.w[i] is not None:
                timers.append(Producing(self.w[i], self.beta_dl[i], self.held[i]))
            elif self.u[i] is not None:
                timers.append(Active(self.u[i], self.alpha_dl[i]))
            else:
                timers.append(INACTIVE)
        return NetState(tuple(self.bags), tuple(timers), self.now)


def oracle_simulate(net: XtpnNet, sampler, config: OracleConfig) -> Trace:
    """Tick-by-tick run of ``net`` up to ``config.max_time`` with deadlines from ``sampler``."""
    tick = config.tick
    values = [config.max_time]
    for p in net.places:
        values += [p.gamma_low, p.gamma_high]
    for t in net.transitions:
        values += [t.alpha_low, t.alpha_high, t.beta_low, t.beta_high]
    for ks in net.initial_tokens:
        values += list(ks)
    bad = [v for v in values if not _on_grid(v, tick)]
    if bad:
        raise OracleError(f"values not divisible by tick {tick}: {sorted(set(bad))}")

    run = _Run(net, sampler, config)
    run.refresh()
    trace = Trace(tuple(p.id for p in net.places), tuple(t.id for t in net.transitions), run.state())
    if config.max_time > 0:
        run.settle()
        while run.now < config.max_time:
            pending, first = run.advance()
            run.settle()
            if pending and len(run.records) > first:
                r = run.records[first]
                run.records[first] = TraceRecord(r.at, r.kind, r.element, r.removed, r.added,
                                                 pending + r.phases, r.matured)
    trace.records = run.records
    trace.final = run.state()
    return trace
