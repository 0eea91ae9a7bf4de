"""Static structure of an extended time Petri net and its well-formedness rules."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

from .timeval import INF, Time, as_time, is_inf


class ArcKind(enum.Enum):
    NORMAL = "normal"
    READ = "read"
    INHIBITOR = "inhibitor"


@dataclass(frozen=True)
class PlaceSpec:
    """A place with its token window: maturity ``gamma_low``, lifetime limit ``gamma_high``."""

    id: str
    gamma_low: Time = Fraction(0)
    gamma_high: Time = INF

    def __post_init__(self):
        object.__setattr__(self, "gamma_low", as_time(self.gamma_low))
        object.__setattr__(self, "gamma_high", as_time(self.gamma_high))


@dataclass(frozen=True)
class TransitionSpec:
    """A transition with activation interval ``alpha`` and production interval ``beta``."""

    id: str
    alpha_low: Time = Fraction(0)
    alpha_high: Time = Fraction(0)
    beta_low: Time = Fraction(0)
    beta_high: Time = Fraction(0)

    def __post_init__(self):
        for name in ("alpha_low", "alpha_high", "beta_low", "beta_high"):
            object.__setattr__(self, name, as_time(getattr(self, name)))

    @property
    def alpha(self) -> tuple[Time, Time]:
        return (self.alpha_low, self.alpha_high)

    @property
    def beta(self) -> tuple[Time, Time]:
        return (self.beta_low, self.beta_high)

    @property
    def is_immediate(self) -> bool:
        return self.alpha_low == self.alpha_high == self.beta_low == self.beta_high == 0


@dataclass(frozen=True)
class Arc:
    source: str
    target: str
    weight: int = 1
    kind: ArcKind = ArcKind.NORMAL

    @property
    def label(self) -> str:
        sym = {ArcKind.NORMAL: "->", ArcKind.READ: "<->", ArcKind.INHIBITOR: "-o"}[self.kind]
        return f"{self.source}{sym}{self.target}"


@dataclass(frozen=True)
class Violation:
    element: str
    rule: str
    message: str = ""

    def __str__(self) -> str:
        text = f"{self.element}: {self.rule}"
        return f"{text} ({self.message})" if self.message else text


class NetLookupError(KeyError):
    pass


@dataclass(frozen=True)
class XtpnNet:
    """Immutable net structure plus initial token lifetimes.

    ``initial_tokens`` is aligned with ``places``; each entry is a sorted tuple
    of lifetimes.  Use :meth:`build` for a friendlier constructor.
    """

    places: tuple[PlaceSpec, ...]
    transitions: tuple[TransitionSpec, ...]
    arcs: tuple[Arc, ...] = ()
    initial_tokens: tuple[tuple[Fraction, ...], ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "places", tuple(self.places))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "arcs", tuple(self.arcs))
        tokens = tuple(tuple(sorted(as_time(k) for k in ks)) for ks in self.initial_tokens)
        if not tokens:
            tokens = tuple(() for _ in self.places)
        object.__setattr__(self, "initial_tokens", tokens)

    @classmethod
    def build(
        cls,
        places: Iterable[PlaceSpec],
        transitions: Iterable[TransitionSpec],
        arcs: Iterable[Arc] = (),
        tokens: Mapping[str, Sequence | int] | None = None,
    ) -> "XtpnNet":
        """Construct a net; ``tokens`` maps place id to lifetimes or to a count of fresh tokens."""
        places = tuple(places)
        tokens = dict(tokens or {})
        unknown = set(tokens) - {p.id for p in places}
        if unknown:
            raise NetLookupError(f"tokens for undeclared places: {sorted(unknown)}")
        initial = []
        for p in places:
            spec = tokens.get(p.id, ())
            if isinstance(spec, int):
                spec = [Fraction(0)] * spec
            initial.append(tuple(as_time(k) for k in spec))
        return cls(places, tuple(transitions), tuple(arcs), tuple(initial))

    # -- lookups -----------------------------------------------------------

    @cached_property
    def place_index(self) -> dict[str, int]:
        return {p.id: i for i, p in enumerate(self.places)}

    @cached_property
    def transition_index(self) -> dict[str, int]:
        return {t.id: i for i, t in enumerate(self.transitions)}

    def place(self, pid: str) -> PlaceSpec:
        try:
            return self.places[self.place_index[pid]]
        except KeyError:
            raise NetLookupError(f"unknown place {pid!r}") from None

    def transition(self, tid: str) -> TransitionSpec:
        try:
            return self.transitions[self.transition_index[tid]]
        except KeyError:
            raise NetLookupError(f"unknown transition {tid!r}") from None

    def t_index(self, t: str | int) -> int:
        if isinstance(t, int):
            if not 0 <= t < len(self.transitions):
                raise NetLookupError(f"transition index {t} out of range")
            return t
        try:
            return self.transition_index[t]
        except KeyError:
            raise NetLookupError(f"unknown transition {t!r}") from None

    @cached_property
    def _arcs_by_transition(self):
        # per transition index: ([(place idx, weight, kind)] inputs, [(place idx, weight)] outputs)
        inputs = [[] for _ in self.transitions]
        outputs = [[] for _ in self.transitions]
        for a in self.arcs:
            if a.source in self.place_index and a.target in self.transition_index:
                inputs[self.transition_index[a.target]].append(
                    (self.place_index[a.source], a.weight, a.kind))
            elif (a.kind is ArcKind.NORMAL and a.source in self.transition_index
                  and a.target in self.place_index):
                outputs[self.transition_index[a.source]].append(
                    (self.place_index[a.target], a.weight))
        for lst in inputs:
            lst.sort(key=lambda x: (x[0], x[2].value))
        for lst in outputs:
            lst.sort()
        return tuple(map(tuple, inputs)), tuple(map(tuple, outputs))

    def input_arcs(self, t: str | int) -> tuple[tuple[int, int, ArcKind], ...]:
        """(place index, weight, kind) for every arc entering ``t``, inhibitors included."""
        return self._arcs_by_transition[0][self.t_index(t)]

    def output_arcs(self, t: str | int) -> tuple[tuple[int, int], ...]:
        """(place index, weight) for every Normal arc leaving ``t``."""
        return self._arcs_by_transition[1][self.t_index(t)]


def pre_places(net: XtpnNet, t: str) -> set[str]:
    """Places feeding ``t`` through Normal or Read arcs."""
    return {net.places[j].id for j, _, kind in net.input_arcs(t) if kind is not ArcKind.INHIBITOR}


def post_places(net: XtpnNet, t: str) -> set[str]:
    """Places receiving tokens from ``t`` through Normal arcs."""
    return {net.places[j].id for j, _ in net.output_arcs(t)}


def inhibitor_places(net: XtpnNet, t: str) -> set[str]:
    return {net.places[j].id for j, _, kind in net.input_arcs(t) if kind is ArcKind.INHIBITOR}


def _nonneg(value) -> bool:
    return is_inf(value) or value >= 0


def validate(net: XtpnNet) -> list[Violation]:
    """Return every well-formedness violation of ``net``; empty iff the net is usable."""
    out: list[Violation] = []
    add = lambda el, rule, msg="": out.append(Violation(el, rule, msg))

    if not net.places:
        add("net", "no places declared")

    seen: set[str] = set()
    for p in net.places:
        if p.id in seen:
            add(p.id, "duplicate id")
        seen.add(p.id)
        if is_inf(p.gamma_low):
            add(p.id, "gamma_low finite")
        elif p.gamma_low < 0:
            add(p.id, "gamma_low >= 0")
        if not is_inf(p.gamma_high) and p.gamma_high <= 0:
            add(p.id, "gamma_high > 0")
        if not p.gamma_low < p.gamma_high:
            add(p.id, "gamma_low < gamma_high",
                f"got [{p.gamma_low}, {p.gamma_high}]")

    for t in net.transitions:
        if t.id in seen:
            add(t.id, "duplicate id")
        seen.add(t.id)
        for name, lo, hi in (("alpha", t.alpha_low, t.alpha_high), ("beta", t.beta_low, t.beta_high)):
            if is_inf(lo):
                add(t.id, f"{name}_low finite")
            elif not (_nonneg(lo) and _nonneg(hi)):
                add(t.id, f"{name} non-negative")
            elif not lo <= hi:
                add(t.id, f"{name}_low <= {name}_high", f"got [{lo}, {hi}]")

    pids = {p.id for p in net.places}
    tids = {t.id for t in net.transitions}
    keys: set[tuple[str, str, ArcKind]] = set()
    pairs: dict[tuple[str, str], set[ArcKind]] = {}
    for a in net.arcs:
        el = a.label
        if not isinstance(a.weight, int) or isinstance(a.weight, bool) or a.weight < 1:
            add(el, "weight >= 1")
        p_to_t = a.source in pids and a.target in tids
        t_to_p = a.source in tids and a.target in pids
        if not (p_to_t or t_to_p):
            if a.source not in pids | tids or a.target not in pids | tids:
                add(el, "unresolved endpoint")
            else:
                add(el, "bipartite")
            continue
        if a.kind is not ArcKind.NORMAL and not p_to_t:
            add(el, f"{a.kind.value} arc must go place to transition")
        key = (a.source, a.target, a.kind)
        if key in keys:
            add(el, "duplicate arc")
        keys.add(key)
        if p_to_t:
            kinds = pairs.setdefault((a.source, a.target), set())
            kinds.add(a.kind)
            if {ArcKind.NORMAL, ArcKind.READ} <= kinds and a.kind in (ArcKind.NORMAL, ArcKind.READ):
                add(el, "normal and read arc on same pair")

    if len(net.initial_tokens) != len(net.places):
        add("net", "initial tokens aligned with places")
    else:
        for p, ks in zip(net.places, net.initial_tokens):
            for k in ks:
                if is_inf(k) or k < 0 or k > p.gamma_high:
                    add(p.id, "initial lifetime within [0, gamma_high]", f"got {k}")
                    break

    for t in net.transitions:
        if t.is_immediate and not pre_places(net, t.id):
            add(t.id, "immediate input transition")
    return out
