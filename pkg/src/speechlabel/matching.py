"""Resolving transcription results to vocabulary classes.

Rule (i): if any alternative exactly matches a vocabulary class after
normalization, take the best-ranked matching alternative. Rule (ii): fall
back to word embeddings and pick the vocabulary class with the highest
cosine similarity to any alternative, breaking ties by alternative rank and
then vocabulary order. Multi-word phrases embed as the unweighted mean of
their in-table token vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .alignment import AudioSegment
from .asr import TranscriptionResult
from .errors import ValidationError
from .vocabulary import ClassName, Vocabulary, normalize

DEFAULT_MIN_SIMILARITY = -1.0  # disabled: cosine is never below -1


class EmbeddingTable:
    """Token -> vector map loaded from a text file ("V D" header)."""

    def __init__(self, dimension: int, entries: dict[str, np.ndarray]):
        self.dimension = dimension
        self._entries = entries
        for token, vec in entries.items():
            if vec.shape != (dimension,):
                raise ValidationError(
                    f"token {token!r} has dimension {vec.shape}, expected {dimension}")

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, token: str) -> bool:
        return token in self._entries

    def vector(self, token: str) -> np.ndarray | None:
        return self._entries.get(token)

    @classmethod
    def load(cls, path: str | Path) -> "EmbeddingTable":
        with open(path, encoding="utf-8") as f:
            header = f.readline().split()
            if len(header) != 2:
                raise ValidationError(f"{path}: bad embedding header {header}")
            count, dim = int(header[0]), int(header[1])
            entries: dict[str, np.ndarray] = {}
            for lineno, line in enumerate(f, start=2):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != dim + 1:
                    raise ValidationError(
                        f"{path}:{lineno}: expected token + {dim} floats, "
                        f"got {len(parts)} fields")
                entries[parts[0]] = np.array([float(v) for v in parts[1:]],
                                             dtype=np.float64)
        if len(entries) != count:
            raise ValidationError(
                f"{path}: header declares {count} tokens, file has {len(entries)}")
        return cls(dimension=dim, entries=entries)


def embed_phrase(phrase: str, table: EmbeddingTable) -> np.ndarray | None:
    """Mean vector of the phrase's in-table tokens; None if nothing embeds.

    Zero-magnitude results count as non-embeddable since cosine similarity
    is undefined for them.
    """
    try:
        norm_phrase = normalize(phrase)
    except ValidationError:
        return None
    vectors = [table.vector(tok) for tok in norm_phrase.split()]
    vectors = [v for v in vectors if v is not None]
    if not vectors:
        return None
    mean = np.mean(vectors, axis=0)
    if not np.linalg.norm(mean) > 0.0:
        return None
    return mean


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


@dataclass(frozen=True)
class LabelResolution:
    class_name: ClassName
    method: str  # "exact" or "embedding"
    matched_alternative_rank: int
    similarity: float | None = None

    def __post_init__(self):
        if self.method == "exact" and self.similarity is not None:
            raise ValidationError("exact resolutions carry no similarity")
        if self.method == "embedding" and self.similarity is None:
            raise ValidationError("embedding resolutions require a similarity")


def class_vectors(vocab: Vocabulary, table: EmbeddingTable) -> list[np.ndarray | None]:
    """Embeddings of all vocabulary classes, precomputed for repeated resolves."""
    return [embed_phrase(c.normalized, table) for c in vocab.classes]


def resolve(result: TranscriptionResult, vocab: Vocabulary, table: EmbeddingTable,
            min_similarity: float = DEFAULT_MIN_SIMILARITY,
            vocab_vectors: list[np.ndarray | None] | None = None) -> LabelResolution | None:
    """Map a transcription result to a vocabulary class, or None.

    None models unresolvable segments: empty alternatives, or nothing
    embeddable on either side, or best similarity below the floor.
    """
    if not result.alternatives:
        return None

    # rule (i): best-ranked exact match wins
    for alt in result.alternatives:
        cls = vocab.contains(alt.text)
        if cls is not None:
            return LabelResolution(class_name=cls, method="exact",
                                   matched_alternative_rank=alt.rank)

    # rule (ii): global argmax of cosine over (alternative, class) pairs
    if vocab_vectors is None:
        vocab_vectors = class_vectors(vocab, table)
    best: tuple[float, int, int] | None = None  # (similarity, alt_rank, class_pos)
    for alt in result.alternatives:
        alt_vec = embed_phrase(alt.text, table)
        if alt_vec is None:
            continue
        for pos, cls_vec in enumerate(vocab_vectors):
            if cls_vec is None:
                continue
            sim = cosine_similarity(alt_vec, cls_vec)
            if (best is None or sim > best[0]
                    or (sim == best[0] and (alt.rank, pos) < (best[1], best[2]))):
                best = (sim, alt.rank, pos)
    if best is None or best[0] < min_similarity:
        return None
    return LabelResolution(class_name=vocab.classes[best[2]], method="embedding",
                           matched_alternative_rank=best[1], similarity=best[0])


FLAG_DUPLICATE = "duplicate"
FLAG_UNLABELED = "unlabeled"


@dataclass
class ObjectAnnotation:
    """One click with its audio segment, transcription and resolved label."""

    object_index: int
    click_x: int
    click_y: int
    click_time_s: float
    segment: AudioSegment | None
    transcription: TranscriptionResult
    resolution: LabelResolution | None
    flags: set[str] = field(default_factory=set)

    @property
    def is_label_representative(self) -> bool:
        return self.resolution is not None and FLAG_DUPLICATE not in self.flags


def resolve_session(clicks, segments: list[AudioSegment | None],
                    results: list[TranscriptionResult], vocab: Vocabulary,
                    table: EmbeddingTable,
                    min_similarity: float = DEFAULT_MIN_SIMILARITY) -> list[ObjectAnnotation]:
    """One ObjectAnnotation per click; first click per class is representative.

    Later clicks resolving to an already-seen class carry the duplicate flag
    (kept for diagnostics, excluded from the image-level label set); clicks
    with no resolution carry unlabeled.
    """
    if not len(clicks) == len(segments) == len(results):
        raise ValidationError(
            f"clicks ({len(clicks)}), segments ({len(segments)}) and results "
            f"({len(results)}) must be parallel")
    vectors = class_vectors(vocab, table)
    seen: set[str] = set()
    annotations: list[ObjectAnnotation] = []
    for click, segment, result in zip(clicks, segments, results):
        resolution = resolve(result, vocab, table, min_similarity=min_similarity,
                             vocab_vectors=vectors)
        flags: set[str] = set()
        if resolution is None:
            flags.add(FLAG_UNLABELED)
        elif resolution.class_name.normalized in seen:
            flags.add(FLAG_DUPLICATE)
        else:
            seen.add(resolution.class_name.normalized)
        annotations.append(ObjectAnnotation(
            object_index=click.index, click_x=click.x, click_y=click.y,
            click_time_s=click.t, segment=segment, transcription=result,
            resolution=resolution, flags=flags))
    return annotations
