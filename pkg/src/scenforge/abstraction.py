"""Abstract scenario construction from scene descriptions.

A scene-description provider (deterministic mock fed by annotation logs, or
a remote vision-language endpoint) emits a constrained line grammar:

    ROAD: intersection
    SIGNAL: none
    EGO: car; BEHAVIORS: change lane, turn right
    NPC[1]: truck; BEHAVIORS: follow lane, cross; POS: left front
    PEDESTRIAN[1]: BEHAVIORS: stand, cross; POS: right vertical

parse_description turns that into an AbstractScenario: road type, one ego,
typed NPC vehicles and pedestrians with behavior lists and relative initial
positions. Unknown tokens are hard errors, never silently dropped.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .actions import (
    AMBIGUOUS_CHANGE_LANE,
    PEDESTRIAN_ACTIONS,
    VEHICLE_ACTIONS,
    Action,
    RelativePosition,
    Role,
    RoadType,
    TrafficSignal,
    VehicleType,
    parse_action,
    parse_relative_position,
)

DEFAULT_RETRIES = 3
MAX_REPROMPTS = 2

UNDERSTANDING_PROMPT = (
    "You are an autonomous driving expert who specializes in identifying"
    " dynamic objects in traffic scenarios. I will show you a series of"
    " {frame_count} traffic pictures taken by the camera of the vehicle you"
    " are driving. These pictures are from the same one scenario. Please use"
    " concise and structured language to describe the following objects in"
    " the scenario: road types, behaviors of the vehicle you are driving,"
    " behaviors and positions of traffic participants (all vehicles and"
    " pedestrians, other signals and obstacles within the visible range)."
)

FORMAT_INSTRUCTION = (
    "Answer strictly in this line format, one element per line:\n"
    "ROAD: <straight|intersection|t_junction>\n"
    "SIGNAL: <none|light_green|light_red|stop_sign>\n"
    "EGO: <car|truck>; BEHAVIORS: <action>, <action>, ...\n"
    "NPC[i]: <car|truck>; BEHAVIORS: ...; POS: <relative position>\n"
    "PEDESTRIAN[i]: BEHAVIORS: ...; POS: <relative position>"
)


@dataclass(frozen=True)
class ParticipantSpec:
    role: Role
    vehicle_type: VehicleType
    behaviors: tuple[Action, ...]
    relative_position: RelativePosition | None = None

    def __post_init__(self) -> None:
        if not self.behaviors:
            raise ValueError(f"{self.role} participant needs at least one behavior")
        if self.role is Role.PEDESTRIAN:
            if self.vehicle_type is not VehicleType.NONE:
                raise ValueError("pedestrians have no vehicle type")
            bad = set(self.behaviors) - PEDESTRIAN_ACTIONS
        else:
            if self.vehicle_type is VehicleType.NONE:
                raise ValueError(f"{self.role} participant needs a vehicle type")
            bad = set(self.behaviors) - VEHICLE_ACTIONS
        if bad:
            raise ValueError(
                f"behaviors {sorted(b.value for b in bad)} invalid for {self.role}"
            )
        if self.role is Role.EGO and self.relative_position is not None:
            raise ValueError("ego has no relative position")
        if self.role is not Role.EGO and self.relative_position is None:
            raise ValueError(f"{self.role} participant needs a relative position")


@dataclass(frozen=True)
class AbstractScenario:
    road_type: RoadType
    participants: tuple[ParticipantSpec, ...]
    traffic_signal: TrafficSignal = TrafficSignal.NONE
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        egos = [p for p in self.participants if p.role is Role.EGO]
        if len(egos) != 1:
            raise ValueError(f"expected exactly one ego, found {len(egos)}")

    @property
    def ego(self) -> ParticipantSpec:
        return next(p for p in self.participants if p.role is Role.EGO)

    @property
    def others(self) -> tuple[ParticipantSpec, ...]:
        return tuple(p for p in self.participants if p.role is not Role.EGO)

    def to_json(self) -> dict:
        return {
            "road_type": self.road_type.value,
            "traffic_signal": self.traffic_signal.value,
            "participants": [
                {
                    "role": p.role.value,
                    "vehicle_type": p.vehicle_type.value,
                    "behaviors": [b.value for b in p.behaviors],
                    "relative_position": (
                        None
                        if p.relative_position is None
                        else p.relative_position.value
                    ),
                }
                for p in self.participants
            ],
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, data: dict) -> "AbstractScenario":
        participants = tuple(
            ParticipantSpec(
                role=Role(p["role"]),
                vehicle_type=VehicleType(p["vehicle_type"]),
                behaviors=tuple(Action(b) for b in p["behaviors"]),
                relative_position=(
                    None
                    if p.get("relative_position") is None
                    else RelativePosition(p["relative_position"])
                ),
            )
            for p in data["participants"]
        )
        return cls(
            road_type=RoadType(data["road_type"]),
            participants=participants,
            traffic_signal=TrafficSignal(data.get("traffic_signal", "none")),
            notes=tuple(data.get("notes", ())),
        )

    @classmethod
    def load(cls, path: Path | str) -> "AbstractScenario":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def save(self, path: Path | str) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


@dataclass(frozen=True)
class SceneDescription:
    raw_text: str
    source: str  # mock | remote

    def __post_init__(self) -> None:
        if not self.raw_text.strip():
            raise ValueError("empty scene description")


def build_understanding_prompt(frame_count: int) -> str:
    """Prompt asking a vision-language model to describe the key frames."""
    if frame_count < 1:
        raise ValueError("frame_count must be >= 1")
    return (
        UNDERSTANDING_PROMPT.format(frame_count=frame_count)
        + "\n\n"
        + FORMAT_INSTRUCTION
    )


# -- annotation logs ---------------------------------------------------------


def load_annotation_log(path: Path | str) -> dict:
    """Ground-truth log: road type, signal, per-participant behaviors.

    Participant entries may also carry timestamped waypoints; those are
    ignored here and consumed by the trajectory-based tooling.
    """
    with open(path, encoding="utf-8") as fh:
        log = json.load(fh)
    for key in ("road_type", "ego"):
        if key not in log:
            raise ValueError(f"annotation log missing {key!r}")
    return log


class MockProvider:
    """Deterministic provider that renders an annotation log into the grammar."""

    source = "mock"

    def __init__(self, annotation_log: dict):
        self.log = annotation_log

    def describe(self, prompt: str) -> SceneDescription:
        log = self.log
        lines = [f"ROAD: {log['road_type']}"]
        lines.append(f"SIGNAL: {log.get('traffic_signal', 'none')}")
        ego = log["ego"]
        lines.append(
            f"EGO: {ego.get('vehicle_type', 'car')};"
            f" BEHAVIORS: {', '.join(ego['behaviors'])}"
        )
        npc_i = ped_i = 0
        for part in log.get("participants", ()):
            behaviors = ", ".join(part["behaviors"])
            pos = part["relative_position"]
            if part["role"] == "pedestrian":
                ped_i += 1
                lines.append(f"PEDESTRIAN[{ped_i}]: BEHAVIORS: {behaviors}; POS: {pos}")
            else:
                npc_i += 1
                lines.append(
                    f"NPC[{npc_i}]: {part.get('vehicle_type', 'car')};"
                    f" BEHAVIORS: {behaviors}; POS: {pos}"
                )
        return SceneDescription(raw_text="\n".join(lines), source=self.source)


class ProviderError(Exception):
    def __init__(self, message: str, attempts: int = 1):
        self.attempts = attempts
        super().__init__(message)


class RemoteProvider:
    """Vision-language endpoint speaking JSON {prompt, images[], text}.

    URL and API key come from SCENFORGE_LLM_URL / SCENFORGE_LLM_KEY unless
    passed explicitly. The key is sent as a bearer token and never persisted.
    """

    source = "remote"

    def __init__(
        self,
        url: str | None = None,
        api_key: str | None = None,
        timeout: float = 30.0,
        retries: int = DEFAULT_RETRIES,
    ):
        self.url = url or os.environ.get("SCENFORGE_LLM_URL")
        self.api_key = api_key or os.environ.get("SCENFORGE_LLM_KEY")
        self.timeout = timeout
        self.retries = retries
        if not self.url:
            raise ProviderError("remote provider needs SCENFORGE_LLM_URL")

    def describe(self, prompt: str, images: list[str] | None = None) -> SceneDescription:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {"prompt": prompt, "images": images or [], "text": ""}
        last_error = "no attempts made"
        for attempt in range(1, self.retries + 1):
            try:
                resp = requests.post(
                    self.url, json=body, headers=headers, timeout=self.timeout
                )
                resp.raise_for_status()
                text = resp.json().get("text", "")
                if not text.strip():
                    raise ValueError("empty text field in response")
                return SceneDescription(raw_text=text, source=self.source)
            except Exception as exc:  # noqa: BLE001 - retry any transport error
                last_error = str(exc)
        raise ProviderError(
            f"remote provider failed after {self.retries} attempts: {last_error}",
            attempts=self.retries,
        )


def describe_scene(provider, prompt: str | None = None) -> SceneDescription:
    """Run the provider with the standard prompt and capture its output."""
    return provider.describe(prompt or build_understanding_prompt(1))


# -- constrained-grammar parsing ---------------------------------------------

_LINE_RE = re.compile(
    r"^(?P<head>ROAD|SIGNAL|EGO|NPC\[\d+\]|PEDESTRIAN\[\d+\])\s*:\s*(?P<rest>.*)$"
)


def _split_fields(rest: str) -> dict[str, str]:
    fields = {}
    for chunk in rest.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" in chunk:
            key, _, val = chunk.partition(":")
            fields[key.strip().upper()] = val.strip()
        else:
            fields.setdefault("", chunk)
    return fields


def _parse_behaviors(raw: str, notes: list[str], who: str) -> tuple[Action, ...]:
    behaviors = []
    for token in raw.split(","):
        token = token.strip()
        if not token:
            continue
        if token.lower() in AMBIGUOUS_CHANGE_LANE:
            behaviors.append(Action.CHANGE_LEFT)
            notes.append(
                f"{who}: direction-ambiguous 'change lane' mapped to change_left"
            )
        else:
            behaviors.append(parse_action(token))
    return tuple(behaviors)


def parse_description(desc: SceneDescription) -> AbstractScenario:
    """Parse the constrained grammar; every malformed line is an error."""
    road: RoadType | None = None
    signal = TrafficSignal.NONE
    ego: ParticipantSpec | None = None
    others: list[ParticipantSpec] = []
    notes: list[str] = []
    bad_lines: list[str] = []

    for raw_line in desc.raw_text.splitlines():
        line = raw_line.strip()
        if not line:
            continue
        m = _LINE_RE.match(line)
        if m is None:
            bad_lines.append(line)
            continue
        head, rest = m.group("head"), m.group("rest")
        try:
            if head == "ROAD":
                road = RoadType(rest.strip().lower().replace(" ", "_").replace("-", "_"))
            elif head == "SIGNAL":
                signal = TrafficSignal(rest.strip().lower().replace(" ", "_"))
            elif head == "EGO":
                fields = _split_fields(rest)
                vtype = VehicleType(fields.get("", "car").lower())
                ego = ParticipantSpec(
                    role=Role.EGO,
                    vehicle_type=vtype,
                    behaviors=_parse_behaviors(
                        fields.get("BEHAVIORS", ""), notes, "ego"
                    ),
                )
            elif head.startswith("NPC"):
                fields = _split_fields(rest)
                others.append(
                    ParticipantSpec(
                        role=Role.NPC,
                        vehicle_type=VehicleType(fields.get("", "car").lower()),
                        behaviors=_parse_behaviors(
                            fields.get("BEHAVIORS", ""), notes, head
                        ),
                        relative_position=parse_relative_position(
                            fields.get("POS", "")
                        ),
                    )
                )
            else:  # PEDESTRIAN[i]
                fields = _split_fields(rest)
                others.append(
                    ParticipantSpec(
                        role=Role.PEDESTRIAN,
                        vehicle_type=VehicleType.NONE,
                        behaviors=_parse_behaviors(
                            fields.get("BEHAVIORS", ""), notes, head
                        ),
                        relative_position=parse_relative_position(
                            fields.get("POS", "")
                        ),
                    )
                )
        except ValueError as exc:
            raise ValueError(f"line {line!r}: {exc}") from None

    if bad_lines:
        raise ValueError(f"unparseable description lines: {bad_lines}")
    if road is None:
        raise ValueError("description has no ROAD line")
    if ego is None:
        raise ValueError("description has no EGO line")
    return AbstractScenario(
        road_type=road,
        participants=(ego, *others),
        traffic_signal=signal,
        notes=tuple(notes),
    )


def build_abstract(
    provider, prompt: str | None = None, max_reprompts: int = MAX_REPROMPTS
) -> AbstractScenario:
    """Describe-then-parse with bounded reprompting on parse failure."""
    prompt = prompt or build_understanding_prompt(1)
    last_exc: Exception | None = None
    for attempt in range(max_reprompts + 1):
        desc = provider.describe(prompt)
        try:
            return parse_description(desc)
        except ValueError as exc:
            last_exc = exc
            prompt = (
                prompt
                + "\n\nYour previous answer did not follow the required format"
                f" ({exc}). Answer again using only the specified line format."
            )
    raise ValueError(f"description unparseable after {max_reprompts} reprompts: {last_exc}")
