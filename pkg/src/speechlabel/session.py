"""Per-image annotation sessions: event logs, validation and click extraction.

An image session is the unit of work: one image, one event log, one audio
recording. Timestamps are seconds relative to the image_shown event, which
the client aligns with the start of the recording, giving events and audio
a single shared clock.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import Iterable

from .audio import AudioRef
from .errors import EventParseError, ValidationError

EVENT_KINDS = frozenset({
    "image_shown", "click", "mouse_move", "key",
    "show_classes_open", "show_classes_close", "submit",
})
COORDINATE_KINDS = frozenset({"click", "mouse_move"})


class DuplicateClickWarning(UserWarning):
    """Two clicks share a timestamp; real input devices produce these."""


@dataclass(frozen=True)
class Event:
    kind: str
    t: float
    x: int | None = None
    y: int | None = None

    def to_json_obj(self) -> dict:
        obj: dict = {"kind": self.kind, "t": self.t}
        if self.x is not None:
            obj["x"] = self.x
            obj["y"] = self.y
        return obj


@dataclass(frozen=True)
class Click:
    """A click with its (possibly tie-adjusted) timestamp, in click order."""

    t: float
    x: int
    y: int
    index: int


@dataclass
class SessionMeta:
    image_id: str
    image_width: int
    image_height: int
    vocabulary_id: str
    annotator_id: str
    mode: str  # "training" or "main"
    seq: int | None = None  # finalize order within a service session

    def to_json_obj(self) -> dict:
        obj = {
            "image_id": self.image_id,
            "image_width": self.image_width,
            "image_height": self.image_height,
            "vocabulary_id": self.vocabulary_id,
            "annotator_id": self.annotator_id,
            "mode": self.mode,
        }
        if self.seq is not None:
            obj["seq"] = self.seq
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SessionMeta":
        try:
            meta = cls(
                image_id=str(obj["image_id"]),
                image_width=int(obj["image_width"]),
                image_height=int(obj["image_height"]),
                vocabulary_id=str(obj["vocabulary_id"]),
                annotator_id=str(obj["annotator_id"]),
                mode=str(obj["mode"]),
            )
        except KeyError as exc:
            raise ValidationError(f"meta.json missing field {exc}") from exc
        if meta.mode not in ("training", "main"):
            raise ValidationError(f"unknown session mode {meta.mode!r}")
        if "seq" in obj:
            meta.seq = int(obj["seq"])
        return meta


def parse_event_log(lines: Iterable[str]) -> list[Event]:
    """Parse line-delimited JSON events and enforce the ordering contract.

    The log must start with a single image_shown at t=0, end with a single
    submit, and be non-decreasing in t. click/mouse_move events require
    integer coordinates. Unknown JSON fields are ignored.
    """
    events: list[Event] = []
    prev_t = -math.inf
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EventParseError(lineno, f"malformed JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise EventParseError(lineno, "event is not a JSON object")
        kind = obj.get("kind")
        if kind not in EVENT_KINDS:
            raise EventParseError(lineno, f"unknown event kind {kind!r}")
        t = obj.get("t")
        if not isinstance(t, (int, float)) or isinstance(t, bool):
            raise EventParseError(lineno, "missing or non-numeric t")
        t = float(t)
        if t < 0:
            raise EventParseError(lineno, f"negative timestamp {t}")
        if t < prev_t:
            raise ValidationError(
                f"line {lineno}: event t={t} precedes previous event t={prev_t}")
        prev_t = t
        x = y = None
        if kind in COORDINATE_KINDS:
            if "x" not in obj or "y" not in obj:
                raise EventParseError(lineno, f"{kind} event without coordinates")
            try:
                x = int(obj["x"])
                y = int(obj["y"])
            except (TypeError, ValueError) as exc:
                raise EventParseError(lineno, "non-integer coordinates") from exc
        events.append(Event(kind=kind, t=t, x=x, y=y))

    if not events:
        raise ValidationError("event log is empty")
    shown = [i for i, e in enumerate(events) if e.kind == "image_shown"]
    if len(shown) != 1 or shown[0] != 0:
        raise ValidationError("log must contain exactly one image_shown as first event")
    if events[0].t != 0.0:
        raise ValidationError(f"image_shown must have t=0, got {events[0].t}")
    submits = [i for i, e in enumerate(events) if e.kind == "submit"]
    if len(submits) != 1 or submits[0] != len(events) - 1:
        raise ValidationError("log must contain exactly one submit as last event")
    return events


def serialize_events(events: Iterable[Event]) -> str:
    return "".join(json.dumps(e.to_json_obj()) + "\n" for e in events)


@dataclass
class ImageSession:
    session_id: str
    meta: SessionMeta
    events: list[Event]
    audio: AudioRef

    # convenience views
    @property
    def image_id(self) -> str:
        return self.meta.image_id

    @property
    def image_size(self) -> tuple[int, int]:
        return (self.meta.image_width, self.meta.image_height)

    @property
    def submit_t(self) -> float:
        return self.events[-1].t

    def validate(self) -> None:
        """Bounds and audio-coverage checks that need meta + audio context."""
        w, h = self.image_size
        for e in self.events:
            if e.kind in COORDINATE_KINDS:
                if not (0 <= e.x <= w and 0 <= e.y <= h):
                    raise ValidationError(
                        f"{e.kind} at ({e.x},{e.y}) outside image bounds {w}x{h}")
        if self.audio.duration_s < self.submit_t:
            raise ValidationError(
                f"audio duration {self.audio.duration_s:.3f}s shorter than "
                f"last event t={self.submit_t:.3f}s")

    def clicks(self) -> list[Click]:
        """Clicks in strictly increasing t, log order preserved.

        Exact timestamp ties are kept, warned about, and nudged up by the
        smallest representable amount so downstream segmentation sees a
        strictly increasing sequence (the nudge is far below one sample).
        """
        out: list[Click] = []
        prev = -math.inf
        for e in self.events:
            if e.kind != "click":
                continue
            t = e.t
            if t <= prev:
                warnings.warn(
                    f"duplicate click timestamp {t} in session {self.session_id}",
                    DuplicateClickWarning,
                    stacklevel=2,
                )
                t = math.nextafter(prev, math.inf)
            out.append(Click(t=t, x=e.x, y=e.y, index=len(out)))
            prev = t
        return out
