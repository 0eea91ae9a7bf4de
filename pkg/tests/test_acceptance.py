"""Acceptance checks.  Each test carries a ``criterion`` marker; conftest prints
one PASS/FAIL line per criterion after the run."""

import itertools
import random
import time
from collections import Counter, defaultdict
from fractions import Fraction as F

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from netgen import random_deadlines, random_net
from scenarios import (
    EXPIRY_KEEPS,
    EXPIRY_LOSES,
    expiry_window,
    inhibitor_net,
    read_arc_net,
    read_arc_ready,
    shared_place,
)
from xtpn.engine import SimConfig, ZeroTimeCascadeError, simulate
from xtpn.multiset import NOT_ENOUGH, ReadArcMode, RemovalPolicy, TokenBag, activating_subset, age_bag, remove_tokens
from xtpn.net import XtpnNet
from xtpn.netio import ParseError, parse_net, serialize_net, write_trace
from xtpn.oracle import OracleCascadeError, OracleConfig, oracle_simulate
from xtpn.sampling import FixedSampler
from xtpn.state import INACTIVE, Active, Inactive, Producing, check_consistency, elapse, initial_state, is_active
from xtpn.timeval import INF, is_inf
from xtpn.trace import EventKind
from xtpn.transform import ElementClass, classify_net, transform_element

EPS = F(1, 1000)
SUITE = settings(max_examples=1000, deadline=None, database=None,
                 suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])


def criterion(number, title):
    return pytest.mark.criterion(number, title)


# -- 1 ------------------------------------------------------------------------------

C1 = criterion(1, "token at its lifetime limit: activation kept or lost after a further epsilon")


@C1
def test_limit_token_then_epsilon_keeps_activation():
    start = time.perf_counter()
    net = expiry_window(EXPIRY_KEEPS)
    sampler = FixedSampler.for_net(net, {"t0": (5, 1)})
    z = elapse(net, initial_state(net, sampler), F(1, 2), sampler)
    assert z.marking[0].items == (2, F(9, 2), F(9, 2), 10)
    assert isinstance(z.timers[0], Active)
    z = elapse(net, z, EPS, sampler)
    assert z.marking[0].items == (2 + EPS, F(9, 2) + EPS, F(9, 2) + EPS)
    assert isinstance(z.timers[0], Active)
    assert z.timers[0].u == F(1, 2) + EPS
    # the engine reaches the same state, the expiry recorded at the limit instant
    trace = simulate(net, SimConfig(max_time=F(1, 2) + EPS), sampler=FixedSampler.for_net(net, {"t0": (5, 1)}))
    assert trace.final == z
    assert [(r.at, r.kind) for r in trace.records if r.kind is EventKind.EXPIRY] == [(F(1, 2), EventKind.EXPIRY)]
    assert time.perf_counter() - start < 1


@C1
def test_limit_token_then_epsilon_loses_activation():
    start = time.perf_counter()
    net = expiry_window(EXPIRY_LOSES)
    sampler = FixedSampler.for_net(net, {"t0": (5, 1)})
    z0 = initial_state(net, sampler)
    assert isinstance(elapse(net, z0, F(1, 2), sampler).timers[0], Active)
    z = elapse(net, z0, F(1, 2) + EPS, sampler)
    assert z.timers[0] is INACTIVE
    assert z.marking[0].items == (F(3, 2) + EPS, F(9, 2) + EPS, F(9, 2) + EPS)
    trace = simulate(net, SimConfig(max_time=F(1, 2) + EPS), sampler=FixedSampler.for_net(net, {"t0": (5, 1)}))
    assert trace.final == z
    assert time.perf_counter() - start < 1


# -- 2 ------------------------------------------------------------------------------

C2 = criterion(2, "read arc returning aged tokens drops the one past the limit; default mode only ages")


@C2
def test_read_arc_aged_return():
    start = time.perf_counter()
    net = read_arc_net()
    trace = simulate(net, SimConfig(max_time=F(4), read_arc_mode=ReadArcMode.MODE2II),
                     sampler=FixedSampler.for_net(net, {"t0": (2, 4)}), initial=read_arc_ready(net))
    begin = [r for r in trace.records if r.kind is EventKind.PRODUCTION_START]
    end = [r for r in trace.records if r.kind is EventKind.PRODUCTION_END]
    assert [(r.at, r.removed) for r in begin] == [(0, (("p0", (6, 7, 15, 17)),))]
    assert [(r.at, r.added) for r in end] == [(4, (("p0", (10, 11, 19)),))]
    assert len(end[0].added[0][1]) == 3
    assert trace.final.marking[0].items == (5, 10, 11, 19)
    assert time.perf_counter() - start < 1


@C2
def test_read_arc_default_mode_only_ages():
    start = time.perf_counter()
    net = read_arc_net()
    z0 = read_arc_ready(net)
    seen = []

    def observe(action, i, before, after):
        if action in ("start", "end"):
            seen.append(action)
            assert after.marking == before.marking

    trace = simulate(net, SimConfig(max_time=F(4)), sampler=FixedSampler.for_net(net, {"t0": (2, 4)}),
                     initial=z0, observer=observe)
    assert seen == ["start", "end"]
    assert all(not r.removed or r.kind is EventKind.EXPIRY for r in trace.records)
    assert all(not r.added for r in trace.records)
    assert trace.final.marking[0] == age_bag(z0.marking[0], F(4))
    assert time.perf_counter() - start < 1


# -- 3 ------------------------------------------------------------------------------

C3 = criterion(3, "inhibitor arc blocks with enough mature tokens, releases with one fewer")


@C3
def test_inhibitor_blocking_and_release():
    start = time.perf_counter()
    blocked = inhibitor_net([1, 2, 3, 4, 5, 6])
    assert sum(1 for k in blocked.initial_tokens[0] if k >= 2) == 5
    z = initial_state(blocked, FixedSampler.for_net(blocked, {"t0": (1, 1)}))
    assert z.timers[0] is INACTIVE
    assert activating_subset(z.marking[1], F(1), 3) is not NOT_ENOUGH

    released = inhibitor_net([1, 3, 4, 5, 6])
    z = initial_state(released, FixedSampler.for_net(released, {"t0": (1, 1)}))
    assert is_active(released, z.marking, "t0")
    assert z.timers[0] == Active(0, 1)
    assert time.perf_counter() - start < 1


# -- 4 ------------------------------------------------------------------------------

@criterion(4, "event-driven engine matches the tick oracle on 200 random nets")
def test_engine_matches_oracle():
    start = time.perf_counter()
    compared = aborted = 0
    for seed in range(200):
        rng = random.Random(seed)
        net = random_net(rng, max_places=4, max_trans=4, max_weight=3, den=4)
        deadlines = random_deadlines(rng, net, den=4)
        policy = rng.choice(list(RemovalPolicy))
        mode = rng.choice(list(ReadArcMode))
        engine = oracle = None
        try:
            engine = simulate(net, SimConfig(max_time=F(16), removal_policy=policy, read_arc_mode=mode,
                                             max_zero_time_steps=300),
                              sampler=FixedSampler.for_net(net, deadlines, seed=seed))
        except ZeroTimeCascadeError as e:
            engine_abort = e.at
        try:
            oracle = oracle_simulate(net, FixedSampler.for_net(net, deadlines, seed=seed),
                                     OracleConfig(F(1, 8), F(16), policy, mode, max_zero_time_steps=300))
        except OracleCascadeError as e:
            oracle_abort = e.at
        assert (engine is None) == (oracle is None), f"seed {seed}: only one side aborted"
        if engine is None:
            assert engine_abort == oracle_abort, f"seed {seed}"
            aborted += 1
            continue
        assert engine.records == oracle.records, f"seed {seed}: traces differ"
        assert engine.final == oracle.final, f"seed {seed}: final states differ"
        compared += 1
    elapsed = time.perf_counter() - start
    print(f"\n{compared} traces identical, {aborted} identical zero-time aborts, {elapsed:.1f}s")
    assert compared + aborted == 200
    assert elapsed < 60


# -- 5 ------------------------------------------------------------------------------

C5 = criterion(5, "transformed nets: DPN episodes have exact lengths, TPN production takes no time")


def _classical_places(net):
    for p in net.places:
        net = transform_element(net, p.id, ElementClass.CLASSICAL_PLACE)
    return net


@C5
def test_all_dpn_net():
    runs_with_100 = 0
    for seed in range(60):
        rng = random.Random(seed)
        net = _classical_places(random_net(rng))
        durations = {t.id: F(rng.randint(1, 12), 4) for t in net.transitions}
        for tid, d in durations.items():
            net = transform_element(net, tid, ElementClass.DPN, duration=d)
        assert classify_net(net).overall == "DPN"

        active_since = {}
        producing_since = {}
        episodes = []

        def observe(action, i, before, after):
            for t, b, a in zip(net.transitions, before.timers, after.timers):
                if isinstance(a, Active) and not isinstance(b, Active):
                    active_since[t.id] = after.now
                if isinstance(b, Active) and not isinstance(a, Active):
                    episodes.append(("active", t.id, after.now - active_since.pop(t.id)))
            if action == "start":
                producing_since[net.transitions[i].id] = after.now
            elif action == "end":
                tid = net.transitions[i].id
                episodes.append(("producing", tid, after.now - producing_since.pop(tid)))

        config = SimConfig(seed=seed, max_time=F(10**6), max_events=100)
        z0 = initial_state(net, config.sampler())
        for t, tm in zip(net.transitions, z0.timers):
            if isinstance(tm, Active):
                active_since[t.id] = z0.now
        trace = simulate(net, config, initial=z0, observer=observe)
        runs_with_100 += len(trace.records) >= 100
        for kind, tid, length in episodes:
            assert length == (0 if kind == "active" else durations[tid]), (seed, kind, tid, length)
        assert all(since == trace.final.now for since in active_since.values())
    assert runs_with_100 >= 10


@C5
def test_all_tpn_net():
    for seed in range(60):
        rng = random.Random(seed)
        net = random_net(rng)
        for t in net.transitions:
            lo = F(rng.randint(1, 8), 4)
            net = transform_element(net, t.id, ElementClass.TPN, alpha=(lo, lo + F(rng.randint(0, 8), 4)))
        assert all(t.beta == (0, 0) for t in net.transitions)

        def observe(action, i, before, after):
            if action == "elapse" and after.now > before.now:
                assert not any(isinstance(tm, Producing) for tm in before.timers)

        trace = simulate(net, SimConfig(seed=seed, max_time=F(10**6), max_events=100), observer=observe)
        by_time = defaultdict(list)
        for r in trace.records:
            by_time[r.at].append(r)
        for at, recs in by_time.items():
            fired = Counter(r.element for r in recs if r.kind is EventKind.PRODUCTION_START)
            ended = Counter(r.element for r in recs if r.kind is EventKind.PRODUCTION_END)
            assert fired == ended, at
            delta = Counter()
            for r in recs:
                if r.kind in (EventKind.PRODUCTION_START, EventKind.PRODUCTION_END):
                    for pid, ks in r.added:
                        delta[pid] += len(ks)
                    for pid, ks in r.removed:
                        delta[pid] -= len(ks)
            expected = Counter()
            for tid, n in fired.items():
                for j, w in net.output_arcs(tid):
                    expected[net.places[j].id] += n * w
                for j, w, kind in net.input_arcs(tid):
                    if kind.value == "normal":
                        expected[net.places[j].id] -= n * w
            assert +delta == +expected and -delta == -expected, at


# -- 6 ------------------------------------------------------------------------------

C6 = criterion(6, "state invariants, conflict no-reset and seed determinism on random runs")


@st.composite
def runs(draw):
    rng = draw(st.randoms(use_true_random=False))
    net = random_net(rng, den=rng.choice([1, 2, 4]))
    config = SimConfig(
        seed=draw(st.integers(0, 2**32)),
        max_time=F(draw(st.integers(0, 40)), 4),
        resolution=draw(st.sampled_from([1, 2, 4, 8])),
        horizon_cap=F(4),
        removal_policy=draw(st.sampled_from(list(RemovalPolicy))),
        read_arc_mode=draw(st.sampled_from(list(ReadArcMode))),
        max_zero_time_steps=200,
        shuffle_conflicts=draw(st.booleans()),
    )
    return net, config


def _run(net, config, observer):
    try:
        return simulate(net, config, observer=observer)
    except ZeroTimeCascadeError:
        return None


@C6
@SUITE
@given(runs())
def test_timer_exclusivity(run):
    net, config = run

    def observe(action, i, before, after):
        assert len(after.timers) == len(net.transitions)
        for tm in after.timers:
            assert sum(isinstance(tm, cls) for cls in (Inactive, Active, Producing)) == 1
            if isinstance(tm, Active):
                assert not hasattr(tm, "w")
            if isinstance(tm, Producing):
                assert not hasattr(tm, "u")

    _run(net, config, observe)


@C6
@SUITE
@given(runs())
def test_lifetimes_within_limits(run):
    net, config = run

    def observe(action, i, before, after):
        for p, bag in zip(net.places, after.marking):
            assert all(0 <= k <= p.gamma_high for k in bag.items)
            assert bag.bound == p.gamma_high

    _run(net, config, observe)


@C6
@SUITE
@given(runs())
def test_timers_within_deadlines(run):
    net, config = run

    def observe(action, i, before, after):
        for t, tm in zip(net.transitions, after.timers):
            if isinstance(tm, Active):
                assert 0 <= tm.u <= tm.deadline <= t.alpha_high and tm.deadline >= t.alpha_low
            elif isinstance(tm, Producing):
                assert 0 <= tm.w <= tm.deadline <= t.beta_high and tm.deadline >= t.beta_low

    _run(net, config, observe)


@C6
@SUITE
@given(runs())
def test_activation_flags_match_marking(run):
    net, config = run

    def observe(action, i, before, after):
        for k, tm in enumerate(after.timers):
            if not isinstance(tm, Producing):
                assert isinstance(tm, Active) == is_active(net, after.marking, k)
        assert check_consistency(net, after) == []

    _run(net, config, observe)


@C6
@SUITE
@given(runs())
def test_conflict_does_not_reset_timers(run):
    net, config = run

    def observe(action, i, before, after):
        if action == "elapse":
            return
        for k, (b, a) in enumerate(zip(before.timers, after.timers)):
            if isinstance(b, Active) and isinstance(a, Active) and k != i:
                assert a == b, (action, net.transitions[k].id)

    _run(net, config, observe)


@C6
@SUITE
@given(st.integers(3, 8), st.integers(1, 6), st.integers(1, 6), st.integers(1, 3), st.integers(0, 2**32))
def test_shared_place_no_reset(tokens, a1, a2, a0, seed):
    # t0 fires first and takes one token; t1 and t2 keep enough tokens and their clocks
    net = shared_place(tokens, 3, [(F(a0, 4), F(a0, 4)), (a0 + a1, a0 + a1 + 2), (a0 + a2, a0 + a2 + 2)])
    config = SimConfig(seed=seed, max_time=F(a0, 4))
    trace = simulate(net, config)
    assert any(r.kind is EventKind.PRODUCTION_START and r.element == "t0" for r in trace.records)
    z0 = trace.initial
    assert trace.final.timers[1] == Active(F(a0, 4), z0.timers[1].deadline)
    assert trace.final.timers[2] == Active(F(a0, 4), z0.timers[2].deadline)


@C6
@SUITE
@given(runs())
def test_same_seed_same_trace_bytes(run):
    net, config = run
    first = _run(net, config, None)
    second = _run(net, config, None)
    if first is None:
        assert second is None
        return
    assert write_trace(first) == write_trace(second)


# -- 7 ------------------------------------------------------------------------------

@criterion(7, "oldest-first removal takes a maximal-sum subset of the mature tokens")
@settings(max_examples=3000, deadline=None, database=None)
@given(st.data())
def test_oldest_removal_is_maximal(data):
    bound = data.draw(st.one_of(st.just(INF), st.integers(1, 40).map(lambda n: F(n, 4))))
    top = 40 if is_inf(bound) else int(bound * 4)
    ks = data.draw(st.lists(st.integers(0, top).map(lambda n: F(n, 4)), min_size=1, max_size=8))
    bag = TokenBag(bound, tuple(ks))
    gamma_low = F(data.draw(st.integers(0, top)), 4)
    mature = [k for k in bag.items if k >= gamma_low]
    if not mature:
        return
    v = data.draw(st.integers(1, len(mature)))
    sub = activating_subset(bag, gamma_low, v)
    left, removed = remove_tokens(bag, sub, v, RemovalPolicy.OLDEST)
    best = max(sum(c) for c in itertools.combinations(mature, v))
    assert sum(removed) == best
    assert len(removed) == v and Counter(removed) <= Counter(mature)
    assert Counter(left.items) + Counter(removed) == Counter(bag.items)


# -- 8 ------------------------------------------------------------------------------

C8 = criterion(8, "parser survives 100000 random inputs and round-trips 1000 random nets")

_VOCAB = [b"place", b"trans", b"arc", b"tokens", b"count", b"gamma", b"alpha", b"beta", b"w", b"normal",
          b"version", b"->", b"<->", b"-o", b"inf", b"#", b"\n", b" ", b"\t", b"\r", b"0", b"1", b"3/4",
          b"1/0", b"2.5", b"p0", b"t0", b"p1", b"999999999999999999999", b"\xff", b"\xc3\xa9", b"\x00"]


def _fuzz_input(rng: random.Random, seeds: list[bytes]) -> bytes:
    mode = rng.random()
    if mode < 0.35:
        return bytes(rng.getrandbits(8) for _ in range(rng.randint(0, 120)))
    if mode < 0.65:
        return b" ".join(rng.choice(_VOCAB) for _ in range(rng.randint(0, 40)))
    data = bytearray(rng.choice(seeds))
    for _ in range(rng.randint(1, 6)):
        op = rng.randrange(4)
        pos = rng.randint(0, len(data))
        if op == 0 and data:
            del data[pos:pos + rng.randint(1, 8)]
        elif op == 1:
            data[pos:pos] = rng.choice(_VOCAB)
        elif op == 2 and data:
            data[min(pos, len(data) - 1)] = rng.getrandbits(8)
        else:
            lines = data.split(b"\n")
            rng.shuffle(lines)
            data = bytearray(b"\n".join(lines))
    return bytes(data)


@C8
def test_parser_fuzz():
    rng = random.Random(2024)
    seeds = [serialize_net(random_net(random.Random(s))).encode() for s in range(50)]
    parsed = rejected = 0
    for _ in range(100_000):
        data = _fuzz_input(rng, seeds)
        try:
            net = parse_net(data)
        except ParseError as e:
            assert e.line >= 1 and e.column >= 1
            rejected += 1
        else:
            assert isinstance(net, XtpnNet)
            parsed += 1
    print(f"\nfuzz: {parsed} parsed, {rejected} rejected with a position")
    assert parsed + rejected == 100_000


def _renamed(net: XtpnNet, rng: random.Random) -> XtpnNet:
    """Same net with random identifiers, to exercise the identifier grammar."""
    alphabet = "abcxyzPQ_0189."
    names = {}
    for el in list(net.places) + list(net.transitions):
        while True:
            name = rng.choice("abcxyz_PQ") + "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 6)))
            if name not in names.values():
                names[el.id] = name
                break
    from dataclasses import replace
    return XtpnNet(
        tuple(replace(p, id=names[p.id]) for p in net.places),
        tuple(replace(t, id=names[t.id]) for t in net.transitions),
        tuple(replace(a, source=names[a.source], target=names[a.target]) for a in net.arcs),
        net.initial_tokens,
    )


@C8
def test_round_trip_1000_nets():
    rng = random.Random(7)
    for k in range(1000):
        net = random_net(rng, max_places=6, max_trans=6, den=rng.choice([1, 2, 3, 4, 6, 12]))
        if k % 2:
            net = _renamed(net, rng)
        text = serialize_net(net)
        back = parse_net(text)
        assert back == net, text
        assert serialize_net(back) == text
