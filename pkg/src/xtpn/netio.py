"""Text formats: nets, traces and statistics.

Net files are line oriented, UTF-8, one declaration per line::

    version 1
    place p0 gamma 1 5
    trans t0 alpha 2 2 beta 1 4
    arc t0 -> p0 w 1
    arc p0 <-> t1 w 2      # read arc
    arc p1 -o t1 w 5       # inhibitor arc
    tokens p0 0 1/2 3
    tokens p1 count 4

Times are ``n``, ``n/d``, decimals like ``1.25``, or ``inf``.  ``w n`` may be
left out for weight 1.  Declarations may appear in any order; declaration
order of places and transitions is kept because it decides conflicts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import BinaryIO, Iterable

from .engine import StatsReport
from .multiset import TokenBag
from .net import Arc, ArcKind, PlaceSpec, TransitionSpec, Violation, XtpnNet, validate
from .state import INACTIVE, Active, NetState, Producing
from .timeval import format_time, parse_time
from .trace import EventKind, Trace, TraceRecord

FORMAT_VERSION = 1
MAX_COUNT = 1_000_000

_ID = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")
_TOKEN = re.compile(r"[^ \t\r]+")
_ARROWS = {"->": ArcKind.NORMAL, "<->": ArcKind.READ, "-o": ArcKind.INHIBITOR}
_SYMBOL = {v: k for k, v in _ARROWS.items()}


class ParseError(ValueError):
    def __init__(self, line: int, column: int, message: str, expected: Iterable[str] = ()):
        self.line = line
        self.column = column
        self.message = message
        self.expected = tuple(expected)
        text = f"line {line}, column {column}: {message}"
        if self.expected:
            text += f" (expected {' or '.join(self.expected)})"
        super().__init__(text)


class NetValidationError(ParseError):
    """The file parsed but the net is not well-formed."""

    def __init__(self, violations: list[tuple[int, Violation]]):
        self.violations = violations
        self.line, self.column = violations[0][0], 1
        self.message = "; ".join(f"line {n}: {v}" for n, v in violations)
        self.expected = ()
        ValueError.__init__(self, self.message)


@dataclass
class _Tok:
    text: str
    column: int


@dataclass
class _Doc:
    places: list[PlaceSpec] = field(default_factory=list)
    transitions: list[TransitionSpec] = field(default_factory=list)
    arcs: list[Arc] = field(default_factory=list)
    tokens: dict[str, tuple] = field(default_factory=dict)
    lines: dict[str, int] = field(default_factory=dict)  # element / arc label -> line
    token_lines: dict[str, tuple[int, int]] = field(default_factory=dict)


class _Line:
    def __init__(self, number: int, text: str):
        self.number = number
        self.toks = [_Tok(m.group(), m.start() + 1) for m in _TOKEN.finditer(text)]
        self.pos = 0
        self.end_col = len(text) + 1

    def fail(self, message: str, expected=()) -> ParseError:
        col = self.toks[self.pos].column if self.pos < len(self.toks) else self.end_col
        return ParseError(self.number, col, message, expected)

    def take(self, what: str) -> _Tok:
        if self.pos >= len(self.toks):
            raise self.fail("unexpected end of line", (what,))
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def keyword(self, word: str):
        tok = self.take(repr(word))
        if tok.text != word:
            self.pos -= 1
            raise self.fail(f"unexpected {tok.text!r}", (repr(word),))

    def ident(self) -> str:
        tok = self.take("identifier")
        if not _ID.fullmatch(tok.text):
            self.pos -= 1
            raise self.fail(f"bad identifier {tok.text!r}", ("identifier",))
        return tok.text

    def time(self):
        tok = self.take("time value")
        try:
            return parse_time(tok.text)
        except ValueError:
            self.pos -= 1
            raise self.fail(f"bad time value {tok.text!r}", ("time value",)) from None

    def integer(self, what: str, limit: int | None = None) -> int:
        tok = self.take(what)
        if not re.fullmatch(r"[0-9]{1,18}", tok.text) or (limit is not None and int(tok.text) > limit):
            self.pos -= 1
            raise self.fail(f"bad {what} {tok.text!r}", (what,))
        return int(tok.text)

    def more(self) -> bool:
        return self.pos < len(self.toks)

    def done(self):
        if self.more():
            raise self.fail(f"unexpected {self.toks[self.pos].text!r}", ("end of line",))


def _decode(data: str | bytes) -> str:
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as e:
        line = data.count(b"\n", 0, e.start) + 1
        col = e.start - (data.rfind(b"\n", 0, e.start) + 1) + 1
        raise ParseError(line, col, "invalid UTF-8") from None


def _parse_line(ln: _Line, doc: _Doc, first: bool):
    head = ln.take("declaration").text
    if head == "version":
        if not first:
            ln.pos -= 1
            raise ln.fail("version must come first and only once")
        v = ln.integer("version number")
        if v != FORMAT_VERSION:
            ln.pos -= 1
            raise ln.fail(f"unsupported version {v}", (str(FORMAT_VERSION),))
    elif head == "place":
        pid = ln.ident()
        ln.keyword("gamma")
        lo, hi = ln.time(), ln.time()
        doc.places.append(PlaceSpec(pid, lo, hi))
        doc.lines.setdefault(pid, ln.number)
    elif head == "trans":
        tid = ln.ident()
        ln.keyword("alpha")
        a = ln.time(), ln.time()
        ln.keyword("beta")
        b = ln.time(), ln.time()
        doc.transitions.append(TransitionSpec(tid, *a, *b))
        doc.lines.setdefault(tid, ln.number)
    elif head == "arc":
        src = ln.ident()
        tok = ln.take("arc symbol")
        if tok.text not in _ARROWS:
            ln.pos -= 1
            raise ln.fail(f"unknown arc symbol {tok.text!r}", tuple(_ARROWS))
        kind = _ARROWS[tok.text]
        dst = ln.ident()
        weight = 1
        if ln.more() and ln.toks[ln.pos].text == "w":
            ln.pos += 1
            weight = ln.integer("weight")
        if ln.more() and ln.toks[ln.pos].text == "normal":
            if kind is not ArcKind.NORMAL:
                raise ln.fail("'normal' only applies to '->' arcs")
            ln.pos += 1
        arc = Arc(src, dst, weight, kind)
        doc.arcs.append(arc)
        doc.lines.setdefault(arc.label, ln.number)
    elif head == "tokens":
        pid = ln.ident()
        if pid in doc.tokens:
            ln.pos -= 1
            raise ln.fail(f"tokens for {pid} already given on line {doc.token_lines[pid][0]}")
        col = ln.toks[ln.pos - 1].column
        if ln.more() and ln.toks[ln.pos].text == "count":
            ln.pos += 1
            ks = (Fraction(0),) * ln.integer("count", MAX_COUNT)
        else:
            ks = []
            while ln.more():
                ks.append(ln.time())
            ks = tuple(ks)
        doc.tokens[pid] = ks
        doc.token_lines[pid] = (ln.number, col)
    else:
        ln.pos -= 1
        raise ln.fail(f"unknown declaration {head!r}", ("place", "trans", "arc", "tokens", "version"))
    ln.done()


def parse_net(data: str | bytes) -> XtpnNet:
    """Parse a net file; raise :class:`ParseError` (or its subclass
    :class:`NetValidationError`) with a line number on any problem."""
    text = _decode(data)
    doc = _Doc()
    first = True
    last = 0
    for number, raw in enumerate(text.split("\n"), start=1):
        last = number
        body = raw.split("#", 1)[0]
        ln = _Line(number, body)
        if not ln.toks:
            continue
        _parse_line(ln, doc, first)
        first = False

    if not doc.places:
        raise ParseError(last, 1, "no places declared")
    pids = {p.id for p in doc.places}
    for pid, (number, col) in doc.token_lines.items():
        if pid not in pids:
            raise ParseError(number, col, f"tokens for undeclared place {pid!r}")
    net = XtpnNet(tuple(doc.places), tuple(doc.transitions), tuple(doc.arcs),
                  tuple(doc.tokens.get(p.id, ()) for p in doc.places))
    problems = validate(net)
    if problems:
        located = []
        for v in problems:
            if v.rule == "initial lifetime within [0, gamma_high]":
                number = doc.token_lines.get(v.element, (None,))[0]
            else:
                number = doc.lines.get(v.element)
            located.append((number or 1, v))
        raise NetValidationError(located)
    return net


def serialize_net(net: XtpnNet) -> str:
    """Canonical text of ``net``: fixed section order, lowest-terms times."""
    f = format_time
    out = [f"version {FORMAT_VERSION}"]
    out += [f"place {p.id} gamma {f(p.gamma_low)} {f(p.gamma_high)}" for p in net.places]
    out += [f"trans {t.id} alpha {f(t.alpha_low)} {f(t.alpha_high)} "
            f"beta {f(t.beta_low)} {f(t.beta_high)}" for t in net.transitions]
    out += [f"arc {a.source} {_SYMBOL[a.kind]} {a.target} w {a.weight}" for a in net.arcs]
    for p, ks in zip(net.places, net.initial_tokens):
        if not ks:
            continue
        if all(k == 0 for k in ks):
            out.append(f"tokens {p.id} count {len(ks)}")
        else:
            out.append(f"tokens {p.id} " + " ".join(f(k) for k in ks))
    return "\n".join(out) + "\n"


# -- traces --------------------------------------------------------------------

def _bag(ks) -> str:
    return "[" + ",".join(format_time(k) for k in ks) + "]"


def _unbag(text: str) -> tuple:
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError(f"not a token list: {text!r}")
    body = text[1:-1]
    return tuple(parse_time(k) for k in body.split(",")) if body else ()


def _timer_text(timer) -> str:
    if isinstance(timer, Producing):
        text = f"producing w={format_time(timer.w)} deadline={format_time(timer.deadline)}"
        if timer.held:
            text += " held=" + "|".join(_bag(ks) for ks in timer.held)
        return text
    if isinstance(timer, Active):
        return f"active u={format_time(timer.u)} deadline={format_time(timer.deadline)}"
    return "inactive"


def _state_lines(trace: Trace, z: NetState) -> list[str]:
    out = [f"  now {format_time(z.now)}"]
    out += [f"  place {pid} limit={format_time(bag.bound)} {_bag(bag.items)}"
            for pid, bag in zip(trace.place_ids, z.marking)]
    out += [f"  trans {tid} {_timer_text(tm)}" for tid, tm in zip(trace.transition_ids, z.timers)]
    return out


def record_text(rec: TraceRecord) -> str:
    parts = [format_time(rec.at), rec.kind.value, rec.element]
    if rec.kind is EventKind.MATURITY:
        parts.append(f"n={rec.matured}")
    parts += [f"{pid}-={_bag(ks)}" for pid, ks in rec.removed]
    parts += [f"{pid}+={_bag(ks)}" for pid, ks in rec.added]
    parts += [f"@{tid}={phase}" for tid, phase in rec.phases]
    return " ".join(parts)


def trace_text(trace: Trace) -> str:
    out = ["# xtpn trace v1",
           "places " + " ".join(trace.place_ids),
           "transitions " + " ".join(trace.transition_ids),
           "initial"]
    out += _state_lines(trace, trace.initial)
    out.append("events")
    out += [record_text(r) for r in trace.records]
    out.append("final")
    out += _state_lines(trace, trace.final or trace.initial)
    return "\n".join(out) + "\n"


def write_trace(trace: Trace, sink: BinaryIO | None = None) -> bytes:
    data = trace_text(trace).encode()
    if sink is not None:
        sink.write(data)
    return data


def _read_record(line: str) -> TraceRecord:
    at, kind, element, *rest = line.split(" ")
    removed, added, phases, matured = [], [], [], 0
    for part in rest:
        if part.startswith("n="):
            matured = int(part[2:])
        elif part.startswith("@"):
            tid, phase = part[1:].split("=", 1)
            phases.append((tid, phase))
        elif "-=" in part:
            pid, ks = part.split("-=", 1)
            removed.append((pid, _unbag(ks)))
        elif "+=" in part:
            pid, ks = part.split("+=", 1)
            added.append((pid, _unbag(ks)))
        else:
            raise ValueError(f"unknown event detail {part!r}")
    return TraceRecord(parse_time(at), EventKind(kind), element, tuple(removed),
                       tuple(added), tuple(phases), matured)


def _read_timer(words: list[str]):
    fields = dict(w.split("=", 1) for w in words[1:])
    if words[0] == "inactive":
        return INACTIVE
    if words[0] == "active":
        return Active(parse_time(fields["u"]), parse_time(fields["deadline"]))
    held = tuple(_unbag(b) for b in fields["held"].split("|")) if "held" in fields else ()
    return Producing(parse_time(fields["w"]), parse_time(fields["deadline"]), held)


def _read_state(lines: list[str]) -> NetState:
    now = Fraction(0)
    bags, timers = [], []
    for line in lines:
        words = line.split()
        if words[0] == "now":
            now = parse_time(words[1])
        elif words[0] == "place":
            bound = parse_time(words[2].removeprefix("limit="))
            bags.append(TokenBag(bound, _unbag(words[3])))
        elif words[0] == "trans":
            timers.append(_read_timer(words[2:]))
        else:
            raise ValueError(f"unexpected state line {line!r}")
    return NetState(tuple(bags), tuple(timers), now)


def read_trace(data: str | bytes) -> Trace:
    """Inverse of :func:`write_trace`; raises ValueError on malformed input."""
    text = _decode(data)
    lines = [ln for ln in text.split("\n") if ln and not ln.startswith("#")]
    try:
        if not (lines[0].startswith("places") and lines[1].startswith("transitions")):
            raise ValueError("missing trace header")
        place_ids = tuple(lines[0].split()[1:])
        transition_ids = tuple(lines[1].split()[1:])
        i_ev, i_fin = lines.index("events"), lines.index("final")
        if lines[2] != "initial":
            raise ValueError("missing initial block")
        initial = _read_state(lines[3:i_ev])
        records = [_read_record(ln) for ln in lines[i_ev + 1:i_fin]]
        final = _read_state(lines[i_fin + 1:])
    except (IndexError, KeyError) as e:
        raise ValueError(f"malformed trace: {e}") from None
    return Trace(place_ids, transition_ids, initial, records, final)


# -- statistics ------------------------------------------------------------------

def stats_text(report: StatsReport) -> str:
    f = format_time
    out = [f"end_time={f(report.end_time)}"]
    for tid, st in report.transitions.items():
        out += [f"transition.{tid}.starts={st.starts}",
                f"transition.{tid}.ends={st.ends}",
                f"transition.{tid}.producing_time={f(st.producing_time)}"]
    for pid, st in report.places.items():
        out += [f"place.{pid}.max_tokens={st.max_tokens}",
                f"place.{pid}.min_tokens={st.min_tokens}",
                f"place.{pid}.expired={st.expired}",
                f"place.{pid}.series=" + ",".join(f"{f(t)}:{n}" for t, n in st.series)]
    return "\n".join(out) + "\n"


def write_stats(report: StatsReport, sink: BinaryIO | None = None) -> bytes:
    data = stats_text(report).encode()
    if sink is not None:
        sink.write(data)
    return data
