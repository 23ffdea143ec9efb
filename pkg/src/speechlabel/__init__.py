"""Speech-driven object class labelling toolkit."""

__version__ = "0.1.0"

from .alignment import AudioSegment, segment_recording
from .audio import AudioRef, read_wav, slice_audio, write_wav
from .matching import EmbeddingTable, LabelResolution, embed_phrase, resolve
from .pipeline import ImageLabeling, PipelineConfig, process_corpus, process_image
from .session import Event, ImageSession, parse_event_log
from .store import SessionStore
from .vocabulary import ClassName, Vocabulary, load_vocabulary, normalize

__all__ = [
    "AudioRef", "AudioSegment", "ClassName", "EmbeddingTable", "Event",
    "ImageLabeling", "ImageSession", "LabelResolution", "PipelineConfig",
    "SessionStore", "Vocabulary", "embed_phrase", "load_vocabulary",
    "normalize", "parse_event_log", "process_corpus", "process_image",
    "read_wav", "resolve", "segment_recording", "slice_audio", "write_wav",
]
