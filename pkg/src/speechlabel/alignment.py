"""Click-driven temporal segmentation of the session recording.

Each click i at time t_i owns the audio interval [max(0, t_i - delta), t_{i+1}),
where the lead time delta captures speech that starts slightly before the
click. The final click's interval extends to the end of the recording.
Adjacent segments may overlap by up to delta; labels are resolved per
segment, so overlap never double-attributes speech.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .errors import SegmentationError

log = logging.getLogger(__name__)

DEFAULT_DELTA_S = 0.5

# Segments shorter than this are transcribed anyway but worth flagging.
SHORT_SEGMENT_S = 0.2


@dataclass(frozen=True)
class AudioSegment:
    object_index: int
    start_s: float
    end_s: float

    def __post_init__(self):
        if not self.start_s < self.end_s:
            raise SegmentationError(
                f"segment {self.object_index} is empty: "
                f"[{self.start_s}, {self.end_s})")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def segment_recording(click_times: list[float], duration_s: float,
                      delta_s: float = DEFAULT_DELTA_S) -> list[AudioSegment]:
    """One audio segment per click, in click order.

    click_times must be strictly increasing and within [0, duration_s];
    delta_s must be non-negative. An empty click list yields no segments.
    """
    if delta_s < 0:
        raise SegmentationError(f"negative delta {delta_s}")
    if duration_s <= 0:
        raise SegmentationError(f"non-positive recording duration {duration_s}")
    for i, t in enumerate(click_times):
        if t < 0:
            raise SegmentationError(f"click {i} at negative time {t}")
        if t > duration_s:
            raise SegmentationError(
                f"click {i} at {t}s is past recording end {duration_s}s")
        if i > 0 and t <= click_times[i - 1]:
            raise SegmentationError(
                f"click times not strictly increasing at index {i}")

    segments: list[AudioSegment] = []
    n = len(click_times)
    for i, t in enumerate(click_times):
        start = max(0.0, t - delta_s)
        end = click_times[i + 1] if i + 1 < n else duration_s
        seg = AudioSegment(object_index=i, start_s=start, end_s=end)
        if seg.duration_s < SHORT_SEGMENT_S:
            log.warning("segment %d is only %.3fs long", i, seg.duration_s)
        segments.append(seg)
    return segments
