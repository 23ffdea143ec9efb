"""Provider-neutral speech recognition contract.

A gateway turns one PCM audio segment into a ranked list of transcription
alternatives. Two implementations ship here: a deterministic fixture-backed
mock for tests and offline replay, and an adapter for a generic HTTP
speech-to-text service. The gateway never invents alternatives; an empty
list means no speech was detected.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import httpx

from .audio import AudioRef
from .errors import AsrConfigError, TransportError, ValidationError

log = logging.getLogger(__name__)

DEFAULT_MAX_ALTERNATIVES = 3


@dataclass(frozen=True)
class SegmentRef:
    """Identifies the (session, click) a segment belongs to."""

    session_id: str
    object_index: int


@dataclass(frozen=True)
class TranscriptionAlternative:
    text: str
    rank: int
    confidence: float | None = None


@dataclass(frozen=True)
class TranscriptionResult:
    segment_ref: SegmentRef
    alternatives: tuple[TranscriptionAlternative, ...] = ()
    # speech activity within the segment, on the session clock (seconds)
    speech_interval: tuple[float, float] | None = None
    error: str | None = None

    def __post_init__(self):
        for i, alt in enumerate(self.alternatives):
            if alt.rank != i + 1:
                raise ValidationError(
                    f"alternative ranks must be consecutive from 1, got "
                    f"{[a.rank for a in self.alternatives]}")

    @property
    def texts(self) -> list[str]:
        return [a.text for a in self.alternatives]


@dataclass(frozen=True)
class AsrConfig:
    language_tag: str = "en-IN"
    phrase_hints: tuple[str, ...] = ()
    max_alternatives: int = DEFAULT_MAX_ALTERNATIVES

    def __post_init__(self):
        if self.max_alternatives < 1:
            raise AsrConfigError(
                f"max_alternatives must be >= 1, got {self.max_alternatives}")

    @property
    def hints_enabled(self) -> bool:
        return len(self.phrase_hints) > 0


class AsrGateway(Protocol):
    def transcribe(self, audio: AudioRef, config: AsrConfig,
                   ref: SegmentRef, segment_start_s: float = 0.0) -> TranscriptionResult:
        ...


def _ranked(texts_and_conf, max_alternatives: int) -> tuple[TranscriptionAlternative, ...]:
    alts = []
    for i, (text, conf) in enumerate(texts_and_conf[:max_alternatives]):
        alts.append(TranscriptionAlternative(text=text, rank=i + 1, confidence=conf))
    return tuple(alts)


class MockAsr:
    """Fixture-driven gateway; read-only after load, shareable across threads.

    Fixture schema: {"entries": [{"key": {"session": ..., "object_index": ...}
    | {"audio_sha256": ...}, "with_hints": [{"text", "confidence"?}, ...],
    "without_hints": [...], "speech_interval": [a, b]?, "fail": bool?}]}.
    Lookup tries the segment key first, then the audio-content hash; a
    segment with no entry is treated as silence.
    """

    def __init__(self, fixture: dict):
        self._by_ref: dict[tuple[str, int], dict] = {}
        self._by_hash: dict[str, dict] = {}
        for entry in fixture.get("entries", []):
            key = entry.get("key", {})
            if "audio_sha256" in key:
                self._by_hash[key["audio_sha256"]] = entry
            elif "session" in key and "object_index" in key:
                self._by_ref[(key["session"], int(key["object_index"]))] = entry
            else:
                raise ValidationError(f"mock ASR entry with unusable key: {key}")

    @classmethod
    def from_file(cls, path: str | Path) -> "MockAsr":
        with open(path, encoding="utf-8") as f:
            return cls(json.load(f))

    def _lookup(self, audio: AudioRef, ref: SegmentRef) -> dict | None:
        entry = self._by_ref.get((ref.session_id, ref.object_index))
        if entry is None and self._by_hash:
            digest = hashlib.sha256(audio.blob).hexdigest()
            entry = self._by_hash.get(digest)
        return entry

    def transcribe(self, audio: AudioRef, config: AsrConfig,
                   ref: SegmentRef, segment_start_s: float = 0.0) -> TranscriptionResult:
        entry = self._lookup(audio, ref)
        if entry is None:
            return TranscriptionResult(segment_ref=ref)
        if entry.get("fail"):
            raise TransportError(
                f"simulated transport failure for {ref.session_id}/{ref.object_index}")
        variants = entry.get("with_hints" if config.hints_enabled else "without_hints", [])
        alts = _ranked(
            [(v["text"], v.get("confidence")) for v in variants],
            config.max_alternatives)
        speech = entry.get("speech_interval")
        return TranscriptionResult(
            segment_ref=ref,
            alternatives=alts,
            speech_interval=tuple(speech) if speech else None,
        )


@dataclass
class RemoteAsrSettings:
    endpoint: str
    auth_token: str | None = None
    timeout_s: float = 30.0
    retries: int = 2


class RemoteAsr:
    """Adapter for a generic HTTP speech-to-text endpoint.

    Sends base64 PCM plus language/hints/n-best as JSON and expects
    {"alternatives": [{"text", "confidence"?}, ...],
     "speech_interval": [start, end]?} with segment-relative speech times.
    """

    def __init__(self, settings: RemoteAsrSettings, transport: httpx.BaseTransport | None = None):
        self.settings = settings
        headers = {}
        if settings.auth_token:
            headers["Authorization"] = f"Bearer {settings.auth_token}"
        self._client = httpx.Client(
            headers=headers, timeout=settings.timeout_s, transport=transport)

    def transcribe(self, audio: AudioRef, config: AsrConfig,
                   ref: SegmentRef, segment_start_s: float = 0.0) -> TranscriptionResult:
        payload = {
            "audio": base64.b64encode(audio.blob).decode("ascii"),
            "sample_rate": audio.sample_rate,
            "language": config.language_tag,
            "phrase_hints": list(config.phrase_hints),
            "max_alternatives": config.max_alternatives,
        }
        try:
            resp = self._client.post(self.settings.endpoint, json=payload)
        except httpx.HTTPError as exc:
            raise TransportError(f"ASR request failed: {exc}") from exc
        if resp.status_code >= 500:
            raise TransportError(f"ASR server error {resp.status_code}")
        if resp.status_code >= 400:
            raise AsrConfigError(
                f"ASR rejected request ({resp.status_code}): {resp.text[:200]}")
        doc = resp.json()
        alts = _ranked(
            [(a["text"], a.get("confidence")) for a in doc.get("alternatives", [])],
            config.max_alternatives)
        speech = doc.get("speech_interval")
        if speech:
            speech = (segment_start_s + speech[0], segment_start_s + speech[1])
        return TranscriptionResult(segment_ref=ref, alternatives=alts,
                                   speech_interval=speech)


def batch_transcribe(items: list[tuple[AudioRef, SegmentRef, float]],
                     gateway: AsrGateway, config: AsrConfig,
                     parallelism: int = 1, max_attempts: int = 3,
                     retry_delay_s: float = 0.0) -> list[TranscriptionResult]:
    """Transcribe segments concurrently, preserving input order.

    Transport failures are retried up to max_attempts per segment; a segment
    that exhausts its attempts yields an error-marked result and the batch
    continues. Configuration errors abort the whole batch.
    """
    if parallelism < 1:
        raise ValidationError(f"parallelism must be >= 1, got {parallelism}")

    def one(item: tuple[AudioRef, SegmentRef, float]) -> TranscriptionResult:
        audio, ref, start_s = item
        last_error = None
        for attempt in range(max_attempts):
            try:
                return gateway.transcribe(audio, config, ref, segment_start_s=start_s)
            except TransportError as exc:
                last_error = exc
                log.warning("transcription attempt %d/%d failed for %s/%d: %s",
                            attempt + 1, max_attempts, ref.session_id,
                            ref.object_index, exc)
                if retry_delay_s and attempt + 1 < max_attempts:
                    time.sleep(retry_delay_s)
        return TranscriptionResult(segment_ref=ref, error=str(last_error))

    if not items:
        return []
    if parallelism == 1:
        return [one(item) for item in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, items))
