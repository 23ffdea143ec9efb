"""Directory-backed session store: one folder per image session.

Layout:
    <root>/sessions/<session_id>/events.jsonl
    <root>/sessions/<session_id>/audio.wav
    <root>/sessions/<session_id>/meta.json

Sessions are independent; distinct sessions can be written concurrently.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

from .audio import AudioRef, read_wav_file, write_wav_file
from .errors import ValidationError
from .session import Event, ImageSession, SessionMeta, parse_event_log, serialize_events

_SESSION_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


def _check_session_id(session_id: str) -> str:
    if not _SESSION_ID_RE.match(session_id):
        raise ValidationError(f"invalid session id {session_id!r}")
    return session_id


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.sessions_dir = self.root / "sessions"

    def session_dir(self, session_id: str) -> Path:
        return self.sessions_dir / _check_session_id(session_id)

    def session_ids(self) -> list[str]:
        if not self.sessions_dir.is_dir():
            return []
        return sorted(p.name for p in self.sessions_dir.iterdir() if p.is_dir())

    def exists(self, session_id: str) -> bool:
        return self.session_dir(session_id).is_dir()

    def has_events(self, session_id: str) -> bool:
        return (self.session_dir(session_id) / "events.jsonl").is_file()

    def has_audio(self, session_id: str) -> bool:
        return (self.session_dir(session_id) / "audio.wav").is_file()

    def write_session(self, session_id: str, meta: SessionMeta,
                      events: list[Event] | str, audio: AudioRef) -> Path:
        d = self.session_dir(session_id)
        d.mkdir(parents=True, exist_ok=True)
        text = events if isinstance(events, str) else serialize_events(events)
        (d / "events.jsonl").write_text(text, encoding="utf-8")
        write_wav_file(audio, d / "audio.wav")
        self.write_meta(session_id, meta)
        return d

    def write_meta(self, session_id: str, meta: SessionMeta) -> None:
        d = self.session_dir(session_id)
        d.mkdir(parents=True, exist_ok=True)
        (d / "meta.json").write_text(
            json.dumps(meta.to_json_obj(), sort_keys=True) + "\n", encoding="utf-8")

    def write_raw_events(self, session_id: str, text: str) -> None:
        d = self.session_dir(session_id)
        d.mkdir(parents=True, exist_ok=True)
        (d / "events.jsonl").write_text(text, encoding="utf-8")

    def write_raw_audio(self, session_id: str, wav_bytes: bytes) -> None:
        d = self.session_dir(session_id)
        d.mkdir(parents=True, exist_ok=True)
        (d / "audio.wav").write_bytes(wav_bytes)

    def load_meta(self, session_id: str) -> SessionMeta:
        path = self.session_dir(session_id) / "meta.json"
        if not path.is_file():
            raise ValidationError(f"session {session_id}: missing meta.json")
        return SessionMeta.from_json_obj(json.loads(path.read_text(encoding="utf-8")))

    def load_session(self, session_id: str) -> ImageSession:
        """Read, parse and validate an image session from disk."""
        d = self.session_dir(session_id)
        if not d.is_dir():
            raise ValidationError(f"no such session {session_id!r}")
        meta = self.load_meta(session_id)
        events_path = d / "events.jsonl"
        if not events_path.is_file():
            raise ValidationError(f"session {session_id}: missing events.jsonl")
        with open(events_path, encoding="utf-8") as f:
            events = parse_event_log(f)
        audio_path = d / "audio.wav"
        if not audio_path.is_file():
            raise ValidationError(f"session {session_id}: missing audio.wav")
        audio = read_wav_file(audio_path)
        sess = ImageSession(session_id=session_id, meta=meta, events=events, audio=audio)
        sess.validate()
        return sess

    def write_json(self, session_id: str, name: str, obj) -> None:
        d = self.session_dir(session_id)
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(json.dumps(obj, sort_keys=True) + "\n", encoding="utf-8")

    def read_json(self, session_id: str, name: str):
        path = self.session_dir(session_id) / name
        if not path.is_file():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def content_hash(self) -> str:
        """Hash of all file paths, sizes and mtimes; cheap change detection."""
        h = hashlib.sha256()
        if self.sessions_dir.is_dir():
            for path in sorted(self.sessions_dir.rglob("*")):
                if path.is_file():
                    st = path.stat()
                    h.update(str(path.relative_to(self.root)).encode())
                    h.update(f":{st.st_size}:{st.st_mtime_ns};".encode())
        return h.hexdigest()
