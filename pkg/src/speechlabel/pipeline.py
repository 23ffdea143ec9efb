"""End-to-end processing of image sessions.

clicks -> audio segments -> transcriptions (with vocabulary phrase hints)
-> label resolutions -> image labeling. Per-segment ASR failures degrade to
unlabeled annotations; unreadable sessions are reported as corpus-level
failures without stopping the batch.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .alignment import DEFAULT_DELTA_S, AudioSegment, segment_recording
from .asr import AsrConfig, AsrGateway, SegmentRef, batch_transcribe
from .audio import slice_audio
from .errors import SpeechLabelError
from .matching import (
    DEFAULT_MIN_SIMILARITY,
    EmbeddingTable,
    FLAG_DUPLICATE,
    FLAG_UNLABELED,
    ObjectAnnotation,
    resolve_session,
)
from .session import ImageSession
from .store import SessionStore
from .vocabulary import Vocabulary

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PipelineConfig:
    delta_s: float = DEFAULT_DELTA_S
    use_phrase_hints: bool = True
    language_tag: str = "en-IN"
    max_alternatives: int = 3
    min_similarity: float = DEFAULT_MIN_SIMILARITY
    parallelism: int = 1
    asr_attempts: int = 3

    def asr_config(self, vocab: Vocabulary) -> AsrConfig:
        hints = tuple(vocab.phrase_hints()) if self.use_phrase_hints else ()
        return AsrConfig(language_tag=self.language_tag, phrase_hints=hints,
                         max_alternatives=self.max_alternatives)


@dataclass
class ImageLabeling:
    session_id: str
    image_id: str
    annotations: list[ObjectAnnotation]

    @property
    def labels(self) -> list[ObjectAnnotation]:
        """Representative annotation per class, in click order."""
        return [a for a in self.annotations if a.is_label_representative]

    @property
    def label_classes(self) -> set[str]:
        return {a.resolution.class_name.normalized for a in self.labels}

    @property
    def diagnostics(self) -> dict[str, int]:
        return {
            "duplicate": sum(1 for a in self.annotations if FLAG_DUPLICATE in a.flags),
            "unlabeled": sum(1 for a in self.annotations if FLAG_UNLABELED in a.flags),
        }

    def to_json_obj(self) -> dict:
        return {
            "image_id": self.image_id,
            "session_id": self.session_id,
            "labels": [
                {
                    "class": a.resolution.class_name.normalized,
                    "x": a.click_x,
                    "y": a.click_y,
                    "t": a.click_time_s,
                    "method": a.resolution.method,
                    "alternatives": list(a.transcription.texts),
                }
                for a in self.labels
            ],
            "flags": self.diagnostics,
        }


def labeling_to_bytes(labeling: ImageLabeling) -> bytes:
    """Canonical serialization; identical inputs give identical bytes."""
    return (json.dumps(labeling.to_json_obj(), sort_keys=True,
                       separators=(",", ":")) + "\n").encode("utf-8")


def annotations_json_obj(labeling: ImageLabeling) -> dict:
    """Per-click intermediate artifacts: segments, alternatives, resolution.

    Kept next to the label output so alternative displays and transcription
    accuracy analysis can be run without re-transcribing.
    """
    out = []
    for a in labeling.annotations:
        resolution = None
        if a.resolution is not None:
            resolution = {
                "class": a.resolution.class_name.normalized,
                "method": a.resolution.method,
                "matched_alternative_rank": a.resolution.matched_alternative_rank,
                "similarity": a.resolution.similarity,
            }
        out.append({
            "object_index": a.object_index,
            "x": a.click_x,
            "y": a.click_y,
            "t": a.click_time_s,
            "segment": ({"start_s": a.segment.start_s, "end_s": a.segment.end_s}
                        if a.segment is not None else None),
            "alternatives": [
                {"text": alt.text, "confidence": alt.confidence}
                for alt in a.transcription.alternatives],
            "speech_interval": (list(a.transcription.speech_interval)
                                if a.transcription.speech_interval else None),
            "error": a.transcription.error,
            "resolution": resolution,
            "flags": sorted(a.flags),
        })
    return {"session_id": labeling.session_id, "image_id": labeling.image_id,
            "annotations": out}


def annotations_to_bytes(labeling: ImageLabeling) -> bytes:
    return (json.dumps(annotations_json_obj(labeling), sort_keys=True,
                       separators=(",", ":")) + "\n").encode("utf-8")


def process_image(session: ImageSession, vocab: Vocabulary, gateway: AsrGateway,
                  table: EmbeddingTable, config: PipelineConfig) -> ImageLabeling:
    """Run the full pipeline on one validated session."""
    clicks = session.clicks()
    segments = segment_recording([c.t for c in clicks], session.audio.duration_s,
                                 delta_s=config.delta_s)

    items = []
    for seg in segments:
        audio = slice_audio(session.audio, seg.start_s, seg.end_s)
        items.append((audio, SegmentRef(session.session_id, seg.object_index),
                      seg.start_s))
    results = batch_transcribe(items, gateway, config.asr_config(vocab),
                               parallelism=config.parallelism,
                               max_attempts=config.asr_attempts)

    typed_segments: list[AudioSegment | None] = list(segments)
    annotations = resolve_session(clicks, typed_segments, results, vocab, table,
                                  min_similarity=config.min_similarity)
    return ImageLabeling(session_id=session.session_id,
                         image_id=session.image_id, annotations=annotations)


@dataclass
class CorpusResult:
    labelings: list[ImageLabeling] = field(default_factory=list)
    failures: list[dict] = field(default_factory=list)

    @property
    def sessions_processed(self) -> int:
        return len(self.labelings)


def process_corpus(store: SessionStore, vocab: Vocabulary, gateway: AsrGateway,
                   table: EmbeddingTable, config: PipelineConfig,
                   out_dir: str | Path | None = None,
                   session_ids: list[str] | None = None) -> CorpusResult:
    """Process every stored session independently; failures never stop the run.

    Re-running over the same inputs overwrites identical outputs, so the
    operation is idempotent.
    """
    ids = sorted(session_ids) if session_ids is not None else store.session_ids()

    def one(session_id: str) -> tuple[str, ImageLabeling | None, str | None]:
        try:
            session = store.load_session(session_id)
            labeling = process_image(session, vocab, gateway, table, config)
            return session_id, labeling, None
        except SpeechLabelError as exc:
            log.error("session %s failed: %s", session_id, exc)
            return session_id, None, str(exc)

    if config.parallelism > 1:
        with ThreadPoolExecutor(max_workers=config.parallelism) as pool:
            outcomes = list(pool.map(one, ids))
    else:
        outcomes = [one(sid) for sid in ids]

    result = CorpusResult()
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
    for session_id, labeling, error in outcomes:
        if labeling is None:
            result.failures.append({"session_id": session_id, "error": error})
            continue
        result.labelings.append(labeling)
        if out_path is not None:
            (out_path / f"{session_id}.json").write_bytes(labeling_to_bytes(labeling))
            (out_path / f"{session_id}.annotations.json").write_bytes(
                annotations_to_bytes(labeling))
    return result
