"""Trace records shared by the event-driven engine and the micro-step reference simulator."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

from .state import NetState


class EventKind(enum.Enum):
    MATURITY = "Maturity"
    EXPIRY = "Expiry"
    PRODUCTION_START = "ProductionStart"
    PRODUCTION_END = "ProductionEnd"


@dataclass(frozen=True)
class TraceRecord:
    """One discrete change at time ``at``.

    ``removed``/``added`` hold ``(place id, tokens)`` pairs for places whose
    contents changed; ``phases`` holds ``(transition id, new phase)`` for
    transitions whose phase changed as a consequence.  ``matured`` counts the
    tokens of a Maturity record.
    """

    at: Fraction
    kind: EventKind
    element: str
    removed: tuple = ()
    added: tuple = ()
    phases: tuple = ()
    matured: int = 0


@dataclass
class Trace:
    place_ids: tuple[str, ...]
    transition_ids: tuple[str, ...]
    initial: NetState
    records: list[TraceRecord] = field(default_factory=list)
    final: NetState | None = None

    @property
    def end_time(self) -> Fraction:
        return (self.final or self.initial).now


def phase_changes(transition_ids, before, after) -> tuple:
    return tuple(
        (tid, a.phase)
        for tid, b, a in zip(transition_ids, before, after)
        if a.phase != b.phase
    )


def deltas(place_ids, per_place) -> tuple:
    return tuple((pid, tuple(ks)) for pid, ks in zip(place_ids, per_place) if ks)
