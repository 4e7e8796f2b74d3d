"""Recursive-descent parser for .scn scenario programs.

The grammar is token-based (newlines are whitespace, `#` starts a line
comment). On any error a ScenarioSyntaxError carrying line/column
diagnostics is raised; no partial AST is ever returned.

    scenario    := map_stmt ego_block npc_block* ped_block* assert_block?
    map_stmt    := 'map' STRING
    ego_block   := 'ego' '{' 'type' ':' IDENT
                   'start' ':' lane_pos 'destination' ':' lane_pos '}'
    npc_block   := 'npc' STRING '{' 'type' ':' IDENT waypoints '}'
    ped_block   := 'pedestrian' STRING '{' waypoints '}'
    waypoints   := 'waypoints' ':' '(' waypoint (',' waypoint)* ')'
    waypoint    := (lane_wp | xy_wp) ('@' NUMBER)?
    lane_wp     := '(' STRING '->' NUMBER ',' NUMBER? ',' NUMBER ')'
    xy_wp       := '(' NUMBER ',' NUMBER ',' NUMBER ')'
    lane_pos    := '(' STRING '->' NUMBER ')'
    assert_block:= 'assert' '{' assertion* '}'
    assertion   := 'never' 'collision'
                 | 'always' 'clearance' '>=' NUMBER
                 | 'eventually' 'within' NUMBER 'at_destination' 'radius' NUMBER
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import (
    AlwaysClearance,
    Assertion,
    ConcreteScenario,
    EgoTask,
    EventuallyAtDestination,
    LanePosition,
    NeverCollision,
    ParticipantType,
    TrajectoryDef,
    Waypoint,
    default_assertions,
)


@dataclass(frozen=True)
class Diagnostic:
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.message}"


class ScenarioSyntaxError(Exception):
    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[\s]+|\#[^\n]*)
  | (?P<string>"(?:[^"\\\n]|\\.)*")
  | (?P<number>-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<arrow>->)
  | (?P<geq>>=)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}(),:@])
    """,
    re.VERBOSE,
)

_ESCAPE_RE = re.compile(r"\\(u[0-9a-fA-F]{4}|.)")
_UNESCAPES = {'"': '"', "\\": "\\", "n": "\n", "t": "\t", "r": "\r"}


@dataclass(frozen=True)
class _Token:
    kind: str  # string | number | ident | punct | arrow | geq | eof
    value: str
    line: int
    column: int


def _unescape(raw: str, line: int, col: int) -> str:
    def sub(m: re.Match) -> str:
        esc = m.group(1)
        if esc.startswith("u"):
            return chr(int(esc[1:], 16))
        if esc in _UNESCAPES:
            return _UNESCAPES[esc]
        raise ScenarioSyntaxError([Diagnostic(line, col, f"bad escape \\{esc}")])

    text = _ESCAPE_RE.sub(sub, raw[1:-1])
    try:
        # rejoin \uXXXX surrogate pairs emitted by the printer for astral chars
        return text.encode("utf-16", "surrogatepass").decode("utf-16")
    except UnicodeDecodeError:
        raise ScenarioSyntaxError(
            [Diagnostic(line, col, "unpaired surrogate escape in string")]
        ) from None


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise ScenarioSyntaxError(
                [Diagnostic(line, col, f"unexpected character {text[pos]!r}")]
            )
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind != "ws":
            tokens.append(_Token(kind, value, line, col))
        nl = value.count("\n")
        if nl:
            line += nl
            line_start = pos + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, message: str) -> "ScenarioSyntaxError":
        tok = self.peek()
        return ScenarioSyntaxError([Diagnostic(tok.line, tok.column, message)])

    def expect(self, kind: str, value: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            raise self.fail(f"expected {want!r}, found {tok.value or 'end of input'!r}")
        return self.advance()

    def keyword(self, word: str) -> _Token:
        return self.expect("ident", word)

    def at_keyword(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.value == word

    def number(self) -> float:
        tok = self.expect("number")
        return float(tok.value)

    def string(self) -> str:
        tok = self.expect("string")
        return _unescape(tok.value, tok.line, tok.column)

    # -- grammar --------------------------------------------------------

    def scenario(self) -> ConcreteScenario:
        if not self.at_keyword("map"):
            raise self.fail("missing component: map statement")
        self.advance()
        map_id = self.string()

        if not self.at_keyword("ego"):
            raise self.fail("missing component: ego driving task")
        ego = self.ego_block()

        npcs: list[TrajectoryDef] = []
        while self.at_keyword("npc"):
            npcs.append(self.participant_block(ParticipantType.CAR, typed=True))
        peds: list[TrajectoryDef] = []
        while self.at_keyword("pedestrian"):
            peds.append(
                self.participant_block(ParticipantType.PEDESTRIAN, typed=False)
            )
        if self.at_keyword("npc"):
            raise self.fail("npc blocks must precede pedestrian blocks")

        if self.at_keyword("assert"):
            assertions = self.assert_block()
        else:
            assertions = default_assertions()
        self.expect("eof")

        try:
            return ConcreteScenario(
                map_id=map_id,
                ego=ego,
                npcs=tuple(npcs),
                pedestrians=tuple(peds),
                assertions=assertions,
            )
        except ValueError as exc:
            raise ScenarioSyntaxError([Diagnostic(1, 1, str(exc))]) from None

    def ego_block(self) -> EgoTask:
        self.keyword("ego")
        self.expect("punct", "{")
        self.keyword("type")
        self.expect("punct", ":")
        vtype = self.vehicle_type()
        self.keyword("start")
        self.expect("punct", ":")
        start = self.lane_position()
        self.keyword("destination")
        self.expect("punct", ":")
        dest = self.lane_position()
        self.expect("punct", "}")
        try:
            return EgoTask(vtype, start, dest)
        except ValueError as exc:
            raise ScenarioSyntaxError(
                [Diagnostic(self.peek().line, self.peek().column, str(exc))]
            ) from None

    def vehicle_type(self) -> ParticipantType:
        tok = self.expect("ident")
        try:
            ptype = ParticipantType(tok.value)
        except ValueError:
            raise ScenarioSyntaxError(
                [Diagnostic(tok.line, tok.column, f"unknown type {tok.value!r}")]
            ) from None
        if ptype is ParticipantType.PEDESTRIAN:
            raise ScenarioSyntaxError(
                [Diagnostic(tok.line, tok.column, "vehicle type expected")]
            )
        return ptype

    def participant_block(self, default_type: ParticipantType, typed: bool) -> TrajectoryDef:
        head = self.advance()  # npc | pedestrian
        name = self.string()
        self.expect("punct", "{")
        ptype = default_type
        if typed:
            self.keyword("type")
            self.expect("punct", ":")
            ptype = self.vehicle_type()
        self.keyword("waypoints")
        self.expect("punct", ":")
        lane_bound = ptype is not ParticipantType.PEDESTRIAN
        wps = self.waypoint_list(lane_bound)
        self.expect("punct", "}")
        try:
            return TrajectoryDef(name=name, participant_type=ptype, waypoints=wps)
        except ValueError as exc:
            raise ScenarioSyntaxError(
                [Diagnostic(head.line, head.column, str(exc))]
            ) from None

    def waypoint_list(self, lane_bound: bool) -> tuple[Waypoint, ...]:
        self.expect("punct", "(")
        wps = [self.waypoint(lane_bound)]
        while self.peek().value == ",":
            self.advance()
            wps.append(self.waypoint(lane_bound))
        self.expect("punct", ")")
        return tuple(wps)

    def waypoint(self, lane_bound: bool) -> Waypoint:
        open_tok = self.expect("punct", "(")
        position: LanePosition | tuple[float, float]
        lateral: float | None = None
        if self.peek().kind == "string":
            position = self.lane_position_body()
            self.expect("punct", ",")
            if self.peek().kind == "number":
                lateral = self.number()
            self.expect("punct", ",")
            speed = self.number()
        elif self.peek().kind == "number":
            if lane_bound:
                raise self.fail("vehicle waypoints must be lane-bound")
            x = self.number()
            self.expect("punct", ",")
            y = self.number()
            self.expect("punct", ",")
            speed = self.number()
            position = (x, y)
        else:
            raise self.fail("expected a lane reference or coordinates")
        self.expect("punct", ")")
        time = None
        if self.peek().value == "@":
            self.advance()
            time = self.number()
        try:
            return Waypoint(position=position, speed=speed, lateral=lateral, time=time)
        except ValueError as exc:
            raise ScenarioSyntaxError(
                [Diagnostic(open_tok.line, open_tok.column, str(exc))]
            ) from None

    def lane_position(self) -> LanePosition:
        self.expect("punct", "(")
        pos = self.lane_position_body()
        self.expect("punct", ")")
        return pos

    def lane_position_body(self) -> LanePosition:
        lane_id = self.string()
        self.expect("arrow")
        offset = self.number()
        return LanePosition(lane_id, offset)

    def assert_block(self) -> tuple[Assertion, ...]:
        self.keyword("assert")
        self.expect("punct", "{")
        assertions: list[Assertion] = []
        while not (self.peek().kind == "punct" and self.peek().value == "}"):
            assertions.append(self.assertion())
        self.expect("punct", "}")
        if not assertions:
            raise self.fail("assert block cannot be empty")
        return tuple(assertions)

    def assertion(self) -> Assertion:
        tok = self.peek()
        try:
            if self.at_keyword("never"):
                self.advance()
                self.keyword("collision")
                return NeverCollision()
            if self.at_keyword("always"):
                self.advance()
                self.keyword("clearance")
                self.expect("geq")
                return AlwaysClearance(self.number())
            if self.at_keyword("eventually"):
                self.advance()
                self.keyword("within")
                within = self.number()
                self.keyword("at_destination")
                self.keyword("radius")
                return EventuallyAtDestination(within, self.number())
        except ValueError as exc:
            raise ScenarioSyntaxError(
                [Diagnostic(tok.line, tok.column, str(exc))]
            ) from None
        raise self.fail("expected an assertion (never/always/eventually)")


def parse_scenario(text: str | bytes) -> ConcreteScenario:
    """Parse a scenario program; raises ScenarioSyntaxError with diagnostics."""
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    return _Parser(_tokenize(text)).scenario()
