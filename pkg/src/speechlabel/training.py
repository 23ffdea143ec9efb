"""Annotator training: per-image grading, round summaries and pass/fail.

Training grades the *typed* class names against pre-annotated ground truth;
the spoken/transcribed path is recorded alongside purely for transcription
accuracy analysis. Round recall and precision are micro-averaged over the
round's images.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .asr import TranscriptionResult
from .errors import ValidationError
from .vocabulary import Vocabulary, normalize

DEFAULT_IMAGES_PER_ROUND = 80
DEFAULT_MIN_RECALL = 0.80
DEFAULT_MIN_PRECISION = 0.85


@dataclass(frozen=True)
class TrainingConfig:
    images_per_round: int = DEFAULT_IMAGES_PER_ROUND
    min_recall: float = DEFAULT_MIN_RECALL
    min_precision: float = DEFAULT_MIN_PRECISION
    vocabulary_id: str = ""

    def __post_init__(self):
        if self.images_per_round < 1:
            raise ValidationError("images_per_round must be >= 1")
        for name in ("min_recall", "min_precision"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class TypedEntry:
    text: str
    x: int | None = None
    y: int | None = None
    t: float | None = None


@dataclass
class Feedback:
    correct: set[str]
    missed: set[str]
    wrong: set[str]
    running_recall: float | None = None
    running_precision: float | None = None

    def to_json_obj(self) -> dict:
        return {
            "correct": sorted(self.correct),
            "missed": sorted(self.missed),
            "wrong": sorted(self.wrong),
            "running_recall": self.running_recall,
            "running_precision": self.running_precision,
        }


@dataclass
class TrainingImageRecord:
    image_id: str
    typed_entries: list[TypedEntry]
    feedback: Feedback
    spoken_results: list[TranscriptionResult] = field(default_factory=list)


def _normalize_typed(text: str) -> str:
    # Names that vanish under normalization stay around as wrong labels
    # instead of blowing up the grading.
    try:
        return normalize(text)
    except ValidationError:
        return text.strip().lower()


def grade_image(typed: list[str], gt_classes: set[str], vocab: Vocabulary) -> Feedback:
    """Set comparison of distinct normalized typed names against ground truth.

    Typed names outside the vocabulary are kept as-is and count as wrong
    labels; duplicates collapse to one.
    """
    gt = {normalize(c) for c in gt_classes}
    typed_set: set[str] = set()
    for raw in typed:
        norm = _normalize_typed(raw)
        cls = vocab.lookup_normalized(norm)
        typed_set.add(cls.normalized if cls is not None else norm)
    return Feedback(
        correct=typed_set & gt,
        missed=gt - typed_set,
        wrong=typed_set - gt,
    )


def round_summary(records: list[TrainingImageRecord],
                  config: TrainingConfig) -> dict:
    """Micro-averaged recall/precision over a complete round, plus pass/fail."""
    if len(records) != config.images_per_round:
        raise ValidationError(
            f"incomplete round: {len(records)} of {config.images_per_round} images")
    total_correct = sum(len(r.feedback.correct) for r in records)
    total_gt = sum(len(r.feedback.correct) + len(r.feedback.missed) for r in records)
    total_typed = sum(len(r.feedback.correct) + len(r.feedback.wrong) for r in records)
    recall = total_correct / total_gt if total_gt else 1.0
    precision = total_correct / total_typed if total_typed else 1.0
    return {
        "recall": recall,
        "precision": precision,
        "passed": recall >= config.min_recall and precision >= config.min_precision,
    }


class TrainingRound:
    """Accumulates graded images for one annotator round with running stats."""

    def __init__(self, config: TrainingConfig, vocab: Vocabulary):
        self.config = config
        self.vocab = vocab
        self.records: list[TrainingImageRecord] = []

    def grade(self, image_id: str, typed_entries: list[TypedEntry],
              gt_classes: set[str],
              spoken_results: list[TranscriptionResult] | None = None) -> Feedback:
        fb = grade_image([e.text for e in typed_entries], gt_classes, self.vocab)
        record = TrainingImageRecord(
            image_id=image_id, typed_entries=list(typed_entries), feedback=fb,
            spoken_results=list(spoken_results or []))
        self.records.append(record)
        total_correct = sum(len(r.feedback.correct) for r in self.records)
        total_gt = sum(len(r.feedback.correct) + len(r.feedback.missed)
                       for r in self.records)
        total_typed = sum(len(r.feedback.correct) + len(r.feedback.wrong)
                          for r in self.records)
        fb.running_recall = total_correct / total_gt if total_gt else 1.0
        fb.running_precision = total_correct / total_typed if total_typed else 1.0
        return fb

    @property
    def complete(self) -> bool:
        return len(self.records) >= self.config.images_per_round

    def summary(self) -> dict:
        return round_summary(self.records[:self.config.images_per_round], self.config)


def vocabulary_usage_rate(records: list[TrainingImageRecord],
                          vocab: Vocabulary) -> float:
    """Fraction of typed entries (with repeats) that name a vocabulary class."""
    entries = [e for r in records for e in r.typed_entries]
    if not entries:
        raise ValidationError("no typed entries to measure vocabulary usage on")
    in_vocab = sum(1 for e in entries if vocab.contains(e.text) is not None)
    return in_vocab / len(entries)
