"""Small hand-built nets shared by the unit and acceptance tests."""

from fractions import Fraction as F

from xtpn.multiset import TokenBag
from xtpn.net import Arc, ArcKind, PlaceSpec, TransitionSpec, XtpnNet
from xtpn.state import INACTIVE, Active, NetState
from xtpn.timeval import INF


def producer_consumer() -> XtpnNet:
    """Input transition t0 feeds p0; output transition t1 drains it."""
    return XtpnNet.build(
        [PlaceSpec("p0", 1, 5)],
        [TransitionSpec("t0", 2, 2, 1, 4), TransitionSpec("t1", 1, 3, 2, 2)],
        [Arc("t0", "p0"), Arc("p0", "t1")],
    )


def expiry_window(tokens) -> XtpnNet:
    """One place with window [2, 10] and a transition needing 3 mature tokens.

    t0 cannot fire before 5 time units, so only the marking decides what
    happens in the first half unit.
    """
    return XtpnNet.build(
        [PlaceSpec("p0", 2, 10)],
        [TransitionSpec("t0", 5, 6, 1, 1)],
        [Arc("p0", "t0", 3)],
        {"p0": tokens},
    )


# the two starting bags: the young token matures just before the old one expires, or too late
EXPIRY_KEEPS = [F(3, 2), 4, 4, F(19, 2)]
EXPIRY_LOSES = [1, 4, 4, F(19, 2)]


def read_arc_net() -> XtpnNet:
    """Place p0 (window [2, 20]) tied to t0 by a read arc of weight 4."""
    return XtpnNet.build(
        [PlaceSpec("p0", 2, 20)],
        [TransitionSpec("t0", 2, 2, 4, 4)],
        [Arc("p0", "t0", 4, ArcKind.READ)],
        {"p0": [1, 6, 7, 15, 17]},
    )


def read_arc_ready(net: XtpnNet) -> NetState:
    """t0 has been active for exactly its activation time and starts now."""
    marking = (TokenBag(F(20), tuple(F(k) for k in (1, 6, 7, 15, 17))),)
    return NetState(marking, (Active(F(2), F(2)),), F(0))


def inhibitor_net(p0_tokens) -> XtpnNet:
    """t0 needs 3 mature tokens in p1 and is blocked by 5 mature tokens in p0."""
    return XtpnNet.build(
        [PlaceSpec("p0", 2, INF), PlaceSpec("p1", 1, INF)],
        [TransitionSpec("t0", 1, 1, 1, 1)],
        [Arc("p0", "t0", 5, ArcKind.INHIBITOR), Arc("p1", "t0", 3)],
        {"p0": p0_tokens, "p1": [1, 2, 3]},
    )


def shared_place(n_tokens: int, n_trans: int = 2, alphas=None) -> XtpnNet:
    """``n_trans`` transitions drawing one token each from the same classical place."""
    alphas = alphas or [(1, 1)] * n_trans
    return XtpnNet.build(
        [PlaceSpec("p")],
        [TransitionSpec(f"t{i}", a, b, 1, 1) for i, (a, b) in enumerate(alphas)],
        [Arc("p", f"t{i}") for i in range(n_trans)],
        {"p": n_tokens},
    )


def idle_state(net: XtpnNet) -> NetState:
    marking = tuple(TokenBag(p.gamma_high, ks) for p, ks in zip(net.places, net.initial_tokens))
    return NetState(marking, (INACTIVE,) * len(net.transitions), F(0))
