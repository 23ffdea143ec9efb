import numpy as np
import pytest

from speechlabel.alignment import AudioSegment, segment_recording
from speechlabel.errors import SegmentationError


def oracle_segments(click_times, duration_s, delta_s):
    """Straight transcription of the interval definition, no shared code."""
    out = []
    for i, t in enumerate(click_times):
        start = t - delta_s
        if start < 0:
            start = 0.0
        if i + 1 < len(click_times):
            end = click_times[i + 1]
        else:
            end = duration_s
        out.append((start, end))
    return out


def test_paper_example():
    segs = segment_recording([3.0, 7.2, 10.0], 12.0, delta_s=0.5)
    assert [(s.start_s, s.end_s) for s in segs] == [(2.5, 7.2), (6.7, 10.0), (9.5, 12.0)]


def test_start_clamped_at_zero():
    segs = segment_recording([0.2], 5.0, delta_s=0.5)
    assert [(s.start_s, s.end_s) for s in segs] == [(0.0, 5.0)]


def test_no_clicks_no_segments():
    assert segment_recording([], 5.0) == []


def test_click_past_duration_rejected():
    with pytest.raises(SegmentationError):
        segment_recording([6.0], 5.0)


def test_non_increasing_clicks_rejected():
    with pytest.raises(SegmentationError):
        segment_recording([2.0, 2.0], 5.0)


def test_negative_delta_rejected():
    with pytest.raises(SegmentationError):
        segment_recording([1.0], 5.0, delta_s=-0.1)


def test_zero_delta_tiles_without_overlap():
    clicks = [1.0, 2.5, 4.0]
    segs = segment_recording(clicks, 6.0, delta_s=0.0)
    assert segs[0].start_s == clicks[0]
    for a, b in zip(segs, segs[1:]):
        assert a.end_s == b.start_s
    assert segs[-1].end_s == 6.0


def test_empty_segment_rejected():
    with pytest.raises(SegmentationError):
        AudioSegment(object_index=0, start_s=2.0, end_s=2.0)


def random_streams(count, seed=13):
    rng = np.random.default_rng(seed)
    deltas = [0.0, 0.25, 0.5, 1.0]
    for _ in range(count):
        duration = float(rng.uniform(5.0, 60.0))
        n_clicks = int(rng.integers(0, 21))
        # clicks strictly inside the recording, strictly increasing
        times = sorted(set(round(float(t), 4)
                           for t in rng.uniform(0.0, duration - 0.01, size=n_clicks)))
        delta = deltas[int(rng.integers(len(deltas)))]
        yield times, duration, delta


def test_oracle_equivalence_randomized():
    checked = 0
    for times, duration, delta in random_streams(1000):
        segs = segment_recording(times, duration, delta_s=delta)
        expected = oracle_segments(times, duration, delta)
        assert [(s.start_s, s.end_s) for s in segs] == expected
        # invariants
        assert len(segs) == len(times)
        for i, seg in enumerate(segs):
            assert seg.start_s <= times[i] <= seg.end_s
            assert seg.start_s >= 0.0
            if i + 1 < len(segs):
                assert seg.end_s == times[i + 1]
                assert seg.end_s - segs[i + 1].start_s <= delta + 1e-12
        if segs:
            assert segs[-1].end_s == duration
        checked += 1
    assert checked == 1000
