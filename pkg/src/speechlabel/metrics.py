"""Evaluation metrics: semantic accuracy, location accuracy, timing, mouse
effort, rank correlations and transcription accuracy.

Conventions used throughout:

* Corpus precision/recall are micro-averaged over images.
* Undefined statistics (empty denominators, zero variance) are reported as
  None together with the relevant counts, never silently as 0.
* "Mouse is moving" means the union of intervals between consecutive
  mouse_move events whose gap does not exceed a threshold (100 ms default).
* Speaking intervals come from the ASR gateway's speech-activity
  annotations attached to transcription results.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .groundtruth import GroundTruthImage, GroundTruthSet, point_in_class_mask, point_in_polygon
from .session import Event, ImageSession
from .vocabulary import normalize

DEFAULT_MOUSE_GAP_S = 0.1
DEFAULT_UTTERANCE_BIN_S = 0.25
DEFAULT_TIME_BIN_S = 1.0

Interval = tuple[float, float]


# ---------------------------------------------------------------------------
# semantic precision / recall / F1

@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


def _prf(correct: int, predicted: int, actual: int) -> PRF:
    if predicted == 0:
        precision = 1.0 if actual == 0 else 0.0
    else:
        precision = correct / predicted
    if actual == 0:
        recall = 1.0 if predicted == 0 else 0.0
    else:
        recall = correct / actual
    return PRF(precision=precision, recall=recall, f1=f1_score(precision, recall))


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def semantic_prf(predicted: set[str], gt: set[str]) -> PRF:
    """Precision/recall/F1 of one image's predicted class set."""
    return _prf(len(predicted & gt), len(predicted), len(gt))


def corpus_prf(pairs: list[tuple[set[str], set[str]]]) -> PRF:
    """Micro-averaged precision/recall/F1 over (predicted, gt) pairs."""
    correct = sum(len(p & g) for p, g in pairs)
    predicted = sum(len(p) for p, _ in pairs)
    actual = sum(len(g) for _, g in pairs)
    return _prf(correct, predicted, actual)


# ---------------------------------------------------------------------------
# location accuracy

@dataclass(frozen=True)
class LocationAccuracy:
    hits: int
    misses: int
    ignored: int

    @property
    def value(self) -> float | None:
        countable = self.hits + self.misses
        return self.hits / countable if countable else None

    def to_json_obj(self) -> dict:
        return {"value": self.value, "hits": self.hits, "misses": self.misses,
                "ignored": self.ignored}


def location_accuracy(annotations: list[tuple[str, tuple[float, float]]],
                      gt: GroundTruthImage) -> LocationAccuracy:
    """Fraction of (class, click) pairs lying on a mask of their class.

    Clicks whose class is absent from the image are ignored: they are a
    semantic error, not a location error, and are excluded from both the
    numerator and the denominator.
    """
    hits = misses = ignored = 0
    for class_name, point in annotations:
        outcome = point_in_class_mask(gt, class_name, point)
        if outcome == "hit":
            hits += 1
        elif outcome == "miss":
            misses += 1
        else:
            ignored += 1
    return LocationAccuracy(hits=hits, misses=misses, ignored=ignored)


def combine_location(parts: list[LocationAccuracy]) -> LocationAccuracy:
    return LocationAccuracy(
        hits=sum(p.hits for p in parts),
        misses=sum(p.misses for p in parts),
        ignored=sum(p.ignored for p in parts))


# ---------------------------------------------------------------------------
# rank correlation

def _average_ranks(values: list[float]) -> np.ndarray:
    a = np.asarray(values, dtype=np.float64)
    order = np.argsort(a, kind="mergesort")
    ranks = np.empty(len(a), dtype=np.float64)
    i = 0
    while i < len(a):
        j = i
        while j + 1 < len(a) and a[order[j + 1]] == a[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rank_correlation(xs: list[float], ys: list[float]) -> float | None:
    """Spearman's rho with average ranks for ties.

    Returns None when either ranking has zero variance (rho undefined).
    """
    if len(xs) != len(ys):
        raise ValidationError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ValidationError("need at least two observations")
    rx = _average_ranks(list(xs))
    ry = _average_ranks(list(ys))
    rx = rx - rx.mean()
    ry = ry - ry.mean()
    denom = math.sqrt(float(np.sum(rx * rx)) * float(np.sum(ry * ry)))
    if denom == 0.0:
        return None
    return float(np.sum(rx * ry) / denom)


# ---------------------------------------------------------------------------
# intervals and event-stream quantities

def merge_intervals(intervals: list[Interval]) -> list[Interval]:
    """Union of possibly overlapping intervals, sorted and disjoint."""
    out: list[Interval] = []
    for lo, hi in sorted(i for i in intervals if i[1] > i[0]):
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def intersect_intervals(a: list[Interval], b: list[Interval]) -> list[Interval]:
    out: list[Interval] = []
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if lo < hi:
            out.append((lo, hi))
        if a[i][1] < b[j][1]:
            i += 1
        else:
            j += 1
    return out


def total_duration(intervals: list[Interval]) -> float:
    return sum(hi - lo for lo, hi in intervals)


def mouse_moving_intervals(events: list[Event],
                           gap_s: float = DEFAULT_MOUSE_GAP_S) -> list[Interval]:
    """Intervals where the pointer is considered in motion.

    Consecutive mouse_move events closer than gap_s belong to one motion
    interval; larger gaps are idle time.
    """
    times = [e.t for e in events if e.kind == "mouse_move"]
    spans = [(times[i], times[i + 1]) for i in range(len(times) - 1)
             if times[i + 1] - times[i] <= gap_s]
    return merge_intervals(spans)


def consult_intervals(events: list[Event]) -> list[Interval]:
    """Paired show_classes_open/close intervals; unbalanced logs are invalid."""
    out: list[Interval] = []
    open_t: float | None = None
    for e in events:
        if e.kind == "show_classes_open":
            if open_t is not None:
                raise ValidationError("show_classes_open while already open")
            open_t = e.t
        elif e.kind == "show_classes_close":
            if open_t is None:
                raise ValidationError("show_classes_close without open")
            out.append((open_t, e.t))
            open_t = None
    if open_t is not None:
        raise ValidationError("show_classes_open without matching close")
    return out


def mouse_path_length(events: list[Event]) -> float:
    """Total Euclidean length of the pointer path, clicks included."""
    path = 0.0
    prev: tuple[int, int] | None = None
    for e in events:
        if e.x is None:
            continue
        if prev is not None:
            path += math.hypot(e.x - prev[0], e.y - prev[1])
        prev = (e.x, e.y)
    return path


def click_response_times(click_times: list[float]) -> list[float]:
    """Time from the previous click (or image display) to each click."""
    out = []
    prev = 0.0
    for t in click_times:
        out.append(t - prev)
        prev = t
    return out


# ---------------------------------------------------------------------------
# histograms

@dataclass(frozen=True)
class Bin:
    lo: float
    hi: float
    count: int

    def to_json_obj(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "count": self.count}


def histogram(values: list[float], bin_width: float) -> list[Bin]:
    """Fixed-width bins [k*w, (k+1)*w), contiguous from min to max value."""
    if bin_width <= 0:
        raise ValidationError(f"bin width must be positive, got {bin_width}")
    if not values:
        return []
    indices = [math.floor(round(v / bin_width, 9)) for v in values]
    counts: dict[int, int] = {}
    for k in indices:
        counts[k] = counts.get(k, 0) + 1
    return [Bin(lo=k * bin_width, hi=(k + 1) * bin_width, count=counts.get(k, 0))
            for k in range(min(indices), max(indices) + 1)]


def utterance_duration_histogram(durations_s: list[float],
                                 bin_width_s: float = DEFAULT_UTTERANCE_BIN_S) -> list[Bin]:
    """Histogram of the time spent saying each object name."""
    return histogram(durations_s, bin_width_s)


# ---------------------------------------------------------------------------
# transcription accuracy

@dataclass(frozen=True)
class TranscriptRecord:
    """One training utterance: the typed truth and both alternative lists."""

    typed: str
    with_hints: tuple[str, ...]
    without_hints: tuple[str, ...]


def load_transcription_records(path: str | Path) -> list[TranscriptRecord]:
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    records = []
    for entry in doc.get("entries", []):
        if "typed" not in entry:
            continue
        records.append(TranscriptRecord(
            typed=entry["typed"],
            with_hints=tuple(a["text"] for a in entry.get("with_hints", [])),
            without_hints=tuple(a["text"] for a in entry.get("without_hints", [])),
        ))
    return records


def transcription_recall_at_k(entries: list[tuple[str, list[str]]], k: int) -> float | None:
    """Fraction of utterances whose typed name is among the top-k alternatives.

    Entries with no transcription result attached are excluded so the
    measurement stays focused on transcription accuracy.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    scored = 0
    correct = 0
    for typed, alternatives in entries:
        if not alternatives:
            continue
        scored += 1
        truth = _safe_normalize(typed)
        top = [_safe_normalize(a) for a in alternatives[:k]]
        if truth in top:
            correct += 1
    return correct / scored if scored else None


def _safe_normalize(text: str) -> str:
    try:
        return normalize(text)
    except ValidationError:
        return text.strip().lower()


def transcription_report(records: list[TranscriptRecord]) -> dict:
    by_condition = {}
    for condition in ("with_hints", "without_hints"):
        entries = [(r.typed, list(getattr(r, condition))) for r in records]
        by_condition[condition] = {
            "recall_at_1": transcription_recall_at_k(entries, 1),
            "recall_at_3": transcription_recall_at_k(entries, 3),
            "count": sum(1 for _, alts in entries if alts),
        }
    return by_condition


# ---------------------------------------------------------------------------
# per-image evaluation and the corpus report

@dataclass
class ImageEvaluation:
    """Everything the report needs from one evaluated image session."""

    image_id: str
    annotator_id: str
    predicted_classes: set[str]
    gt_classes: set[str]
    location: LocationAccuracy
    duration_s: float
    per_click_times: list[float]
    final_gap_s: float
    final_review_s: float | None
    mouse_path_px: float
    speaking_s: float
    mouse_moving_s: float
    mouse_in_speech_s: float
    consult_s: float
    consult_count: int
    utterance_durations: list[float] = field(default_factory=list)
    size_order_rho: float | None = None


def clicked_instance_area(gt: GroundTruthImage, class_name: str,
                          point: tuple[float, float]) -> float | None:
    """Mask area of the instance of class_name containing the point, if any."""
    norm = normalize(class_name)
    for inst in gt.instances:
        if inst.class_name != norm:
            continue
        if any(point_in_polygon(point, poly) for poly in inst.polygons):
            return inst.area()
    return None


def evaluate_image(session: ImageSession, labeling,
                   gt_image: GroundTruthImage | None,
                   mouse_gap_s: float = DEFAULT_MOUSE_GAP_S) -> ImageEvaluation:
    """Combine a session, its pipeline labeling and ground truth."""
    annotations = labeling.annotations
    predicted = {a.resolution.class_name.normalized
                 for a in annotations if a.is_label_representative}

    resolved = [(a.resolution.class_name.normalized,
                 (float(a.click_x), float(a.click_y)), a.click_time_s)
                for a in annotations if a.resolution is not None]

    if gt_image is not None:
        loc = location_accuracy([(c, p) for c, p, _ in resolved], gt_image)
        gt_classes = gt_image.class_set
    else:
        loc = LocationAccuracy(0, 0, 0)
        gt_classes = set()

    speech = merge_intervals(
        [a.transcription.speech_interval for a in annotations
         if a.transcription is not None and a.transcription.speech_interval])
    moving = mouse_moving_intervals(session.events, gap_s=mouse_gap_s)
    consults = consult_intervals(session.events)

    click_times = [a.click_time_s for a in annotations]
    duration = session.submit_t
    last_click = click_times[-1] if click_times else 0.0
    final_review = duration - speech[-1][1] if speech else (
        duration - last_click if click_times else None)

    utterances = [a.transcription.speech_interval[1] - a.transcription.speech_interval[0]
                  for a in annotations
                  if a.transcription is not None and a.transcription.speech_interval]

    size_order_rho = None
    if gt_image is not None:
        areas = []
        orders = []
        for order, (cls, point, _t) in enumerate(resolved, start=1):
            area = clicked_instance_area(gt_image, cls, point)
            if area is not None:
                areas.append(area)
                orders.append(float(order))
        if len(areas) >= 2:
            size_order_rho = spearman_rank_correlation(orders, areas)

    return ImageEvaluation(
        image_id=session.image_id,
        annotator_id=session.meta.annotator_id,
        predicted_classes=predicted,
        gt_classes=gt_classes,
        location=loc,
        duration_s=duration,
        per_click_times=click_response_times(click_times),
        final_gap_s=duration - last_click,
        final_review_s=final_review,
        mouse_path_px=mouse_path_length(session.events),
        speaking_s=total_duration(speech),
        mouse_moving_s=total_duration(moving),
        mouse_in_speech_s=total_duration(intersect_intervals(moving, speech)),
        consult_s=total_duration(consults),
        consult_count=len(consults),
        utterance_durations=utterances,
        size_order_rho=size_order_rho,
    )


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _median(values: list[float]) -> float | None:
    if not values:
        return None
    return float(np.median(np.asarray(values, dtype=np.float64)))


def time_allocation(evaluations: list[ImageEvaluation]) -> dict:
    """Corpus-level time shares: speaking, mouse motion, vocabulary consults."""
    total = sum(e.duration_s for e in evaluations)
    speaking = sum(e.speaking_s for e in evaluations)
    moving = sum(e.mouse_moving_s for e in evaluations)
    in_speech = sum(e.mouse_in_speech_s for e in evaluations)
    consult = sum(e.consult_s for e in evaluations)
    consult_counts = sum(e.consult_count for e in evaluations)
    consulted_images = sum(1 for e in evaluations if e.consult_count > 0)
    return {
        "speaking_frac": speaking / total if total else None,
        "mouse_moving_frac": moving / total if total else None,
        "mouse_moving_during_speech_frac": in_speech / speaking if speaking else None,
        "consult_frac": consult / total if total else None,
        "consult_rate": consulted_images / len(evaluations) if evaluations else None,
        "mean_consult_s": consult / consult_counts if consult_counts else None,
    }


def per_click_index_means(evaluations: list[ImageEvaluation]) -> list[float]:
    """Mean response time of the k-th click over all images that have one."""
    longest = max((len(e.per_click_times) for e in evaluations), default=0)
    means = []
    for k in range(longest):
        samples = [e.per_click_times[k] for e in evaluations
                   if len(e.per_click_times) > k]
        means.append(sum(samples) / len(samples))
    return means


def timing_report(evaluations: list[ImageEvaluation]) -> dict:
    """Corpus timing summary: per-image, per-label, per-click and final review.

    time_per_label is total annotation time over total distinct labels;
    final_review_s averages the gap between the end of the last utterance
    (or last click when no speech is known) and submit.
    """
    total_time = sum(e.duration_s for e in evaluations)
    total_labels = sum(len(e.predicted_classes) for e in evaluations)
    reviews = [e.final_review_s for e in evaluations if e.final_review_s is not None]
    return {
        "time_per_image_s": _mean([e.duration_s for e in evaluations]),
        "time_per_label_s": total_time / total_labels if total_labels else None,
        "per_click_index_means": per_click_index_means(evaluations),
        "final_review_s": _mean(reviews),
    }


def build_corpus_report(evaluations: list[ImageEvaluation],
                        transcription_records: list[TranscriptRecord] | None = None,
                        vocabulary_usage: float | None = None,
                        failures: list[dict] | None = None,
                        time_bin_s: float = DEFAULT_TIME_BIN_S,
                        utterance_bin_s: float = DEFAULT_UTTERANCE_BIN_S) -> dict:
    """Assemble the full corpus report as a JSON-serializable dict."""
    prf = corpus_prf([(e.predicted_classes, e.gt_classes) for e in evaluations])
    loc = combine_location([e.location for e in evaluations])
    timing = timing_report(evaluations)
    total_labels = sum(len(e.predicted_classes) for e in evaluations)

    class_count_vs_time = None
    with_counts = [(float(len(e.gt_classes)), e.duration_s) for e in evaluations]
    if len(with_counts) >= 2:
        class_count_vs_time = spearman_rank_correlation(
            [c for c, _ in with_counts], [t for _, t in with_counts])

    size_rhos = [e.size_order_rho for e in evaluations if e.size_order_rho is not None]

    all_click_times = [t for e in evaluations for t in e.per_click_times]
    utterances = [d for e in evaluations for d in e.utterance_durations]

    per_annotator: dict[str, dict] = {}
    annotators = sorted({e.annotator_id for e in evaluations})
    for annotator in annotators:
        evs = [e for e in evaluations if e.annotator_id == annotator]
        a_prf = corpus_prf([(e.predicted_classes, e.gt_classes) for e in evs])
        per_annotator[annotator] = {
            "precision": a_prf.precision,
            "recall": a_prf.recall,
            "f1": a_prf.f1,
            "time_per_image_s": _mean([e.duration_s for e in evs]),
            "images": len(evs),
        }

    report = {
        "images": len(evaluations),
        "labels": total_labels,
        "precision": prf.precision,
        "recall": prf.recall,
        "f1": prf.f1,
        **timing,
        "location_accuracy": loc.to_json_obj(),
        "time_allocation": time_allocation(evaluations),
        "mouse_path_px": _mean([e.mouse_path_px for e in evaluations]),
        "correlations": {
            "class_count_vs_time": class_count_vs_time,
            "size_vs_order_median": _median(size_rhos),
            "size_vs_order_images": len(size_rhos),
        },
        "histograms": {
            "time_per_image": [b.to_json_obj() for b in histogram(
                [e.duration_s for e in evaluations], time_bin_s)] if evaluations else [],
            "utterance_duration": [b.to_json_obj() for b in
                                   utterance_duration_histogram(utterances, utterance_bin_s)],
            "click_response": [b.to_json_obj() for b in
                               histogram(all_click_times, utterance_bin_s)] if all_click_times else [],
        },
        "transcription": (transcription_report(transcription_records)
                          if transcription_records else None),
        "vocabulary_usage": vocabulary_usage,
        "per_annotator": per_annotator,
        "failures": failures or [],
    }
    return report


def evaluate_corpus(sessions_and_labelings, gt: GroundTruthSet,
                    **report_kwargs) -> dict:
    """Evaluate (session, labeling) pairs against ground truth."""
    evaluations = [
        evaluate_image(session, labeling, gt.image(session.image_id))
        for session, labeling in sessions_and_labelings
    ]
    return build_corpus_report(evaluations, **report_kwargs)
