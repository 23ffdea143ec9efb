"""16-bit linear PCM mono audio: WAV I/O and sample-exact slicing."""

from __future__ import annotations

import io
import math
import wave
from dataclasses import dataclass

from .errors import AudioError

BYTES_PER_SAMPLE = 2


@dataclass(frozen=True)
class AudioRef:
    """A mono PCM16 recording held in memory.

    blob holds raw little-endian int16 frames without any container header.
    """

    blob: bytes
    sample_rate: int
    sample_count: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise AudioError(f"invalid sample rate {self.sample_rate}")
        if self.sample_count <= 0:
            raise AudioError("empty recording")
        if len(self.blob) != self.sample_count * BYTES_PER_SAMPLE:
            raise AudioError(
                f"blob length {len(self.blob)} does not match "
                f"{self.sample_count} 16-bit samples")

    @property
    def duration_s(self) -> float:
        return self.sample_count / self.sample_rate


def read_wav(data: bytes) -> AudioRef:
    """Parse a RIFF WAVE blob; only PCM 16-bit mono is accepted."""
    try:
        with wave.open(io.BytesIO(data), "rb") as w:
            nchannels = w.getnchannels()
            sampwidth = w.getsampwidth()
            comptype = w.getcomptype()
            rate = w.getframerate()
            nframes = w.getnframes()
            frames = w.readframes(nframes)
    except wave.Error as exc:
        raise AudioError(f"not a readable WAV file: {exc}") from exc
    if comptype != "NONE":
        raise AudioError(f"unsupported WAV compression {comptype!r}; need linear PCM")
    if sampwidth != BYTES_PER_SAMPLE:
        raise AudioError(f"unsupported sample width {sampwidth * 8} bit; need 16 bit")
    if nchannels != 1:
        raise AudioError(f"unsupported channel count {nchannels}; need mono")
    if nframes == 0:
        raise AudioError("WAV file contains no samples")
    return AudioRef(blob=frames, sample_rate=rate, sample_count=nframes)


def read_wav_file(path) -> AudioRef:
    with open(path, "rb") as f:
        return read_wav(f.read())


def write_wav(audio: AudioRef) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(BYTES_PER_SAMPLE)
        w.setframerate(audio.sample_rate)
        w.writeframes(audio.blob)
    return buf.getvalue()


def write_wav_file(audio: AudioRef, path) -> None:
    with open(path, "wb") as f:
        f.write(write_wav(audio))


def slice_audio(audio: AudioRef, start_s: float, end_s: float) -> AudioRef:
    """Sample range [floor(start_s*rate), floor(end_s*rate)) as a standalone blob."""
    if not 0.0 <= start_s < end_s:
        raise AudioError(f"inverted or negative slice range [{start_s}, {end_s})")
    if end_s > audio.duration_s:
        raise AudioError(
            f"slice end {end_s}s past recording end {audio.duration_s}s")
    lo = math.floor(start_s * audio.sample_rate)
    hi = math.floor(end_s * audio.sample_rate)
    if hi <= lo:
        raise AudioError(f"slice [{start_s}, {end_s}) contains no samples")
    return AudioRef(
        blob=audio.blob[lo * BYTES_PER_SAMPLE:hi * BYTES_PER_SAMPLE],
        sample_rate=audio.sample_rate,
        sample_count=hi - lo,
    )
