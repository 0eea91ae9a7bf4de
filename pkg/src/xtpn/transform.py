"""Element classes of an xTPN and interval rewrites between them.

Special cases of the general model differ only in their time data:

==================  ==========================================
class               interval values
==================  ==========================================
classical place     gamma = [0, inf)
timed place         anything else
classical           alpha = beta = [0, 0]
TPN transition      beta = [0, 0], alpha != [0, 0]
DPN transition      alpha = [0, 0], beta = [d, d] with d > 0
ITPN transition     alpha = [0, 0], 0 < beta_low < beta_high < inf
full xTPN           anything else
==================  ==========================================

DPN is checked before ITPN, so ``beta = [d, d]`` is always DPN.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction

from .net import PlaceSpec, TransitionSpec, XtpnNet, validate
from .timeval import INF, Time, as_time, is_inf


class ElementClass(enum.Enum):
    CLASSICAL_PLACE = "classical-place"
    TIMED_PLACE = "timed-place"
    TPN = "tpn"
    ITPN = "itpn"
    DPN = "dpn"
    CLASSICAL = "classical"
    XTPN = "xtpn"

    @property
    def for_places(self) -> bool:
        return self in (ElementClass.CLASSICAL_PLACE, ElementClass.TIMED_PLACE)


PLACE_CLASSES = (ElementClass.CLASSICAL_PLACE, ElementClass.TIMED_PLACE)
TRANSITION_CLASSES = (ElementClass.TPN, ElementClass.ITPN, ElementClass.DPN,
                      ElementClass.CLASSICAL, ElementClass.XTPN)

ZERO = Fraction(0)


class TransformError(ValueError):
    pass


def classify_place(p: PlaceSpec) -> ElementClass:
    if p.gamma_low == 0 and is_inf(p.gamma_high):
        return ElementClass.CLASSICAL_PLACE
    return ElementClass.TIMED_PLACE


def classify_transition(t: TransitionSpec) -> ElementClass:
    no_alpha = t.alpha_low == t.alpha_high == 0
    no_beta = t.beta_low == t.beta_high == 0
    if no_alpha and no_beta:
        return ElementClass.CLASSICAL
    if no_beta:
        return ElementClass.TPN
    if no_alpha and t.beta_low == t.beta_high:
        return ElementClass.DPN
    if no_alpha and 0 < t.beta_low < t.beta_high and not is_inf(t.beta_high):
        return ElementClass.ITPN
    return ElementClass.XTPN


def _pair(name: str, value) -> tuple[Time, Time]:
    try:
        lo, hi = value
    except (TypeError, ValueError):
        raise TransformError(f"{name} must be a (low, high) pair") from None
    return as_time(lo), as_time(hi)


def transform_element(net: XtpnNet, element: str, target: ElementClass | str, *,
                      duration=None, alpha=None, beta=None, gamma=None) -> XtpnNet:
    """Return a copy of ``net`` whose ``element`` is rewritten to class ``target``.

    Only interval values change.  Parameters a target leaves free must be
    given: ``gamma`` for a timed place, ``alpha`` for TPN, ``beta`` for ITPN,
    ``duration`` for DPN, and both ``alpha`` and ``beta`` for a full xTPN
    transition.
    """
    target = ElementClass(target)
    given = {"duration": duration, "alpha": alpha, "beta": beta, "gamma": gamma}
    needed = {
        ElementClass.CLASSICAL_PLACE: (),
        ElementClass.TIMED_PLACE: ("gamma",),
        ElementClass.TPN: ("alpha",),
        ElementClass.ITPN: ("beta",),
        ElementClass.DPN: ("duration",),
        ElementClass.CLASSICAL: (),
        ElementClass.XTPN: ("alpha", "beta"),
    }[target]
    missing = [name for name in needed if given[name] is None]
    if missing:
        raise TransformError("missing: " + ", ".join(missing))
    unused = [name for name, v in given.items() if v is not None and name not in needed]
    if unused:
        raise TransformError(f"not used by {target.value}: " + ", ".join(unused))

    places = list(net.places)
    transitions = list(net.transitions)
    if element in net.place_index:
        if not target.for_places:
            raise TransformError(f"{element} is a place; {target.value} is a transition class")
        j = net.place_index[element]
        if target is ElementClass.CLASSICAL_PLACE:
            lo, hi = ZERO, INF
        else:
            lo, hi = _pair("gamma", gamma)
        places[j] = replace(places[j], gamma_low=lo, gamma_high=hi)
        got = classify_place(places[j])
    elif element in net.transition_index:
        if target.for_places:
            raise TransformError(f"{element} is a transition; {target.value} is a place class")
        i = net.transition_index[element]
        if target is ElementClass.CLASSICAL:
            a, b = (ZERO, ZERO), (ZERO, ZERO)
        elif target is ElementClass.TPN:
            a, b = _pair("alpha", alpha), (ZERO, ZERO)
        elif target is ElementClass.ITPN:
            a, b = (ZERO, ZERO), _pair("beta", beta)
        elif target is ElementClass.DPN:
            d = as_time(duration)
            a, b = (ZERO, ZERO), (d, d)
        else:
            a, b = _pair("alpha", alpha), _pair("beta", beta)
        transitions[i] = replace(transitions[i], alpha_low=a[0], alpha_high=a[1],
                                 beta_low=b[0], beta_high=b[1])
        got = classify_transition(transitions[i])
    else:
        raise TransformError(f"unknown element {element!r}")

    if got is not target:
        raise TransformError(f"the given values make {element} {got.value}, not {target.value}")
    out = XtpnNet(tuple(places), tuple(transitions), net.arcs, net.initial_tokens)
    problems = validate(out)
    if problems:
        raise TransformError("result is not well-formed: " + "; ".join(map(str, problems)))
    return out


_OVERALL = {
    ElementClass.CLASSICAL: "Classical",
    ElementClass.TPN: "TPN",
    ElementClass.ITPN: "ITPN",
    ElementClass.DPN: "DPN",
}


@dataclass(frozen=True)
class NetClassReport:
    places: tuple[tuple[str, ElementClass], ...]
    transitions: tuple[tuple[str, ElementClass], ...]
    overall: str


def classify_net(net: XtpnNet) -> NetClassReport:
    """Per-element classes plus an overall label.

    The net is Classical, TPN, ITPN or DPN when every place is classical and
    every transition has that class; anything else is a mixed xTPN.
    """
    places = tuple((p.id, classify_place(p)) for p in net.places)
    transitions = tuple((t.id, classify_transition(t)) for t in net.transitions)
    overall = "mixed xTPN"
    if all(c is ElementClass.CLASSICAL_PLACE for _, c in places):
        kinds = {c for _, c in transitions}
        if not kinds:
            overall = "Classical"
        elif len(kinds) == 1:
            overall = _OVERALL.get(kinds.pop(), overall)
    return NetClassReport(places, transitions, overall)


def format_report(report: NetClassReport, color: bool = False) -> str:
    bold = (lambda s: f"\x1b[1m{s}\x1b[0m") if color else (lambda s: s)
    lines = [f"place {pid}: {c.value}" for pid, c in report.places]
    lines += [f"trans {tid}: {c.value}" for tid, c in report.transitions]
    lines.append(f"overall: {bold(report.overall)}")
    return "\n".join(lines) + "\n"
