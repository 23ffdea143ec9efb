"""HTTP service: session lifecycle, uploads, finalize, training, reports.

All state lives in the data directory, so the service is restart-safe and
endpoints are independent of each other. Finalize for a given (session,
image) pair is serialized; everything else may run concurrently.
"""

from __future__ import annotations

import json
import logging
import threading
from pathlib import Path

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.responses import FileResponse, JSONResponse

from .asr import AsrGateway, MockAsr, RemoteAsr, RemoteAsrSettings, SegmentRef, batch_transcribe
from .audio import read_wav
from .config import ServiceConfig
from .errors import AudioError, SpeechLabelError, ValidationError
from .groundtruth import GroundTruthSet, load_ground_truth
from .matching import EmbeddingTable
from .metrics import build_corpus_report, evaluate_image
from .pipeline import PipelineConfig, annotations_to_bytes, labeling_to_bytes, process_image
from .session import SessionMeta
from .store import SessionStore
from .alignment import segment_recording
from .audio import slice_audio
from .training import (
    Feedback,
    TrainingConfig,
    TrainingImageRecord,
    TypedEntry,
    grade_image,
    round_summary,
    vocabulary_usage_rate,
)
from .vocabulary import Vocabulary, load_vocabulary

log = logging.getLogger(__name__)

IMAGE_MEDIA_TYPES = {".png": "image/png", ".jpg": "image/jpeg",
                     ".jpeg": "image/jpeg", ".gif": "image/gif"}


def load_class_sets(path: str | Path, vocab: Vocabulary) -> dict[str, set[str]]:
    """Per-image class sets from a COCO-style file or a plain id->names map."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if isinstance(doc, dict) and "images" in doc and "categories" in doc:
        gt = load_ground_truth(path, vocab)
        return {image_id: img.class_set for image_id, img in gt.images.items()}
    if isinstance(doc, dict):
        out = {}
        for image_id, names in doc.items():
            classes = set()
            for name in names:
                cls = vocab.contains(name)
                if cls is None:
                    raise ValidationError(
                        f"{path}: class {name!r} not in vocabulary {vocab.name!r}")
                classes.add(cls.normalized)
            out[str(image_id)] = classes
        return out
    raise ValidationError(f"{path}: unrecognized ground-truth document")


class Runtime:
    """Everything loaded once at startup from the validated config."""

    def __init__(self, config: ServiceConfig):
        config.validate()
        self.config = config
        self.data_dir = Path(config.data_dir)
        self.store = SessionStore(self.data_dir)
        self.labels_dir = self.data_dir / "labels"
        self.registry_dir = self.data_dir / "service_sessions"
        self.images_dir = self.data_dir / "images"
        for d in (self.labels_dir, self.registry_dir):
            d.mkdir(parents=True, exist_ok=True)

        self.vocabularies: dict[str, Vocabulary] = {}
        for path in config.vocabularies:
            vocab = load_vocabulary(path)
            self.vocabularies[vocab.name] = vocab
        self.default_vocabulary = config.default_vocabulary or next(iter(self.vocabularies))
        if self.default_vocabulary not in self.vocabularies:
            raise ValidationError(
                f"default vocabulary {self.default_vocabulary!r} not loaded")

        self.table = EmbeddingTable.load(config.embeddings)
        self.gateway: AsrGateway
        if config.asr_mode == "mock":
            self.gateway = MockAsr.from_file(config.asr_fixture)
        else:
            self.gateway = RemoteAsr(RemoteAsrSettings(
                endpoint=config.remote_endpoint,
                auth_token=config.remote_auth_token,
                timeout_s=config.remote_timeout_s))

        self.ground_truth: GroundTruthSet | None = None
        if config.ground_truth is not None:
            self.ground_truth = load_ground_truth(
                config.ground_truth, self.vocabularies[self.default_vocabulary])
        self.training_classes: dict[str, set[str]] | None = None
        if config.training_ground_truth is not None:
            self.training_classes = load_class_sets(
                config.training_ground_truth, self.vocabularies[self.default_vocabulary])

        self.pipeline_config = PipelineConfig(
            delta_s=config.delta_s, use_phrase_hints=config.use_phrase_hints,
            language_tag=config.language_tag,
            max_alternatives=config.max_alternatives,
            min_similarity=config.min_similarity, parallelism=config.parallelism,
            asr_attempts=config.asr_attempts)
        self.training_config = TrainingConfig(
            images_per_round=config.images_per_round,
            min_recall=config.min_recall, min_precision=config.min_precision,
            vocabulary_id=self.default_vocabulary)

        self._finalize_locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._report_cache: dict[str, dict] = {}

    # -- images ------------------------------------------------------------

    def image_order(self) -> list[str]:
        if self.ground_truth is not None:
            return sorted(self.ground_truth.images)
        if self.images_dir.is_dir():
            return sorted(p.stem for p in self.images_dir.iterdir() if p.is_file())
        return []

    def image_descriptor(self, image_id: str | None) -> dict | None:
        if image_id is None:
            return None
        width = height = None
        if self.ground_truth is not None:
            img = self.ground_truth.image(image_id)
            if img is not None:
                width, height = img.width, img.height
        return {"image_id": image_id, "url": f"/images/{image_id}",
                "width": width, "height": height}

    def image_dims(self, image_id: str) -> tuple[int, int] | None:
        if self.ground_truth is not None:
            img = self.ground_truth.image(image_id)
            if img is not None:
                return img.width, img.height
        if self.training_classes is not None and image_id in self.training_classes:
            # training grading is click-free set comparison; dims only bound
            # coordinates, so fall back to a permissive default
            return None
        return None

    # -- service session registry -------------------------------------------

    def registry_path(self, session_id: str) -> Path:
        if not session_id or "/" in session_id or session_id.startswith("."):
            raise ValidationError(f"invalid session id {session_id!r}")
        return self.registry_dir / f"{session_id}.json"

    def load_registry(self, session_id: str) -> dict:
        path = self.registry_path(session_id)
        if not path.is_file():
            raise HTTPException(status_code=404,
                                detail=f"unknown session {session_id!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    def save_registry(self, session_id: str, entry: dict) -> None:
        self.registry_path(session_id).write_text(
            json.dumps(entry, sort_keys=True) + "\n", encoding="utf-8")

    def finalize_lock(self, key: str) -> threading.Lock:
        with self._locks_guard:
            return self._finalize_locks.setdefault(key, threading.Lock())


def _bad_request(reasons) -> HTTPException:
    if isinstance(reasons, str):
        reasons = [reasons]
    return HTTPException(status_code=422, detail={"reasons": reasons})


def image_session_id(session_id: str, image_id: str) -> str:
    return f"{session_id}--{image_id}"


def create_app(config: ServiceConfig) -> FastAPI:
    runtime = Runtime(config)
    app = FastAPI(title="speechlabel", version="0.1.0")
    app.state.runtime = runtime

    def authorized(request: Request) -> None:
        token = runtime.config.auth_token
        if token and request.headers.get("Authorization") != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="invalid or missing token")

    auth = Depends(authorized)

    @app.exception_handler(SpeechLabelError)
    async def _speechlabel_error(request: Request, exc: SpeechLabelError):
        return JSONResponse(status_code=422,
                            content={"detail": {"reasons": [str(exc)]}})

    # -- session lifecycle ---------------------------------------------------

    @app.post("/sessions", dependencies=[auth])
    async def create_session(body: dict):
        annotator_id = body.get("annotator_id")
        mode = body.get("mode", "main")
        if not annotator_id:
            raise _bad_request("annotator_id is required")
        if mode not in ("main", "training"):
            raise _bad_request(f"unknown mode {mode!r}")
        vocabulary_id = body.get("vocabulary_id", runtime.default_vocabulary)
        if vocabulary_id not in runtime.vocabularies:
            raise _bad_request(f"unknown vocabulary {vocabulary_id!r}")
        session_id = body.get("session_id") or f"{annotator_id}-{mode}"
        path = runtime.registry_path(session_id)
        if path.is_file():
            raise HTTPException(status_code=409,
                                detail=f"session {session_id!r} already exists")
        order = runtime.image_order()
        entry = {"annotator_id": annotator_id, "mode": mode,
                 "vocabulary_id": vocabulary_id, "position": 0, "finalized": 0}
        runtime.save_registry(session_id, entry)
        return {"session_id": session_id, "mode": mode,
                "vocabulary_id": vocabulary_id,
                "image": runtime.image_descriptor(order[0] if order else None)}

    @app.get("/vocabulary/{vocabulary_id}", dependencies=[auth])
    async def get_vocabulary(vocabulary_id: str):
        vocab = runtime.vocabularies.get(vocabulary_id)
        if vocab is None:
            raise HTTPException(status_code=404,
                                detail=f"unknown vocabulary {vocabulary_id!r}")
        return {"name": vocab.name, "classes": [
            {"name": c.normalized,
             **({"symbol_uri": vocab.symbol_uris[c.normalized]}
                if c.normalized in vocab.symbol_uris else {})}
            for c in vocab.classes]}

    @app.get("/images/{image_id}", dependencies=[auth])
    async def get_image(image_id: str):
        if runtime.images_dir.is_dir():
            for path in sorted(runtime.images_dir.glob(f"{image_id}.*")):
                media = IMAGE_MEDIA_TYPES.get(path.suffix.lower(),
                                              "application/octet-stream")
                return FileResponse(path, media_type=media)
        raise HTTPException(status_code=404, detail=f"no image {image_id!r}")

    # -- uploads ---------------------------------------------------------------

    @app.post("/sessions/{session_id}/images/{image_id}/events",
              status_code=202, dependencies=[auth])
    async def upload_events(session_id: str, image_id: str, request: Request):
        runtime.load_registry(session_id)
        ctype = request.headers.get("content-type", "").split(";")[0].strip()
        if ctype and ctype not in ("text/plain", "application/x-ndjson",
                                   "application/jsonl", "application/octet-stream"):
            raise HTTPException(status_code=415,
                                detail=f"unsupported content type {ctype!r}")
        body = await request.body()
        runtime.store.write_raw_events(image_session_id(session_id, image_id),
                                       body.decode("utf-8"))
        return {"received": len(body)}

    @app.post("/sessions/{session_id}/images/{image_id}/audio",
              status_code=202, dependencies=[auth])
    async def upload_audio(session_id: str, image_id: str, request: Request):
        runtime.load_registry(session_id)
        ctype = request.headers.get("content-type", "").split(";")[0].strip()
        if ctype and ctype not in ("audio/wav", "audio/x-wav",
                                   "application/octet-stream"):
            raise HTTPException(status_code=415,
                                detail=f"unsupported content type {ctype!r}")
        body = await request.body()
        try:
            read_wav(body)  # reject non-PCM uploads early
        except AudioError as exc:
            raise _bad_request(str(exc))
        runtime.store.write_raw_audio(image_session_id(session_id, image_id), body)
        return {"received": len(body)}

    # -- finalize ----------------------------------------------------------------

    def _load_session_for_finalize(session_id: str, image_id: str, entry: dict,
                                   body: dict):
        sid = image_session_id(session_id, image_id)
        if not runtime.store.has_events(sid) or not runtime.store.has_audio(sid):
            raise HTTPException(
                status_code=409,
                detail="both events and audio must be uploaded before finalize")
        dims = runtime.image_dims(image_id)
        if dims is None:
            dims = (int(body.get("image_width", 0)) or None,
                    int(body.get("image_height", 0)) or None)
            if dims[0] is None or dims[1] is None:
                raise _bad_request(
                    "image dimensions unknown; supply image_width/image_height")
        meta = SessionMeta(
            image_id=image_id, image_width=dims[0], image_height=dims[1],
            vocabulary_id=entry["vocabulary_id"],
            annotator_id=entry["annotator_id"], mode=entry["mode"],
            seq=entry.get("finalized", 0))
        runtime.store.write_meta(sid, meta)
        return runtime.store.load_session(sid)

    def _advance(session_id: str, entry: dict) -> dict | None:
        entry["position"] += 1
        entry["finalized"] = entry.get("finalized", 0) + 1
        runtime.save_registry(session_id, entry)
        order = runtime.image_order()
        next_id = order[entry["position"]] if entry["position"] < len(order) else None
        return runtime.image_descriptor(next_id)

    def _transcribe_session(session, vocab):
        clicks = session.clicks()
        segments = segment_recording([c.t for c in clicks],
                                     session.audio.duration_s,
                                     delta_s=runtime.pipeline_config.delta_s)
        items = [(slice_audio(session.audio, s.start_s, s.end_s),
                  SegmentRef(session.session_id, s.object_index), s.start_s)
                 for s in segments]
        return batch_transcribe(items, runtime.gateway,
                                runtime.pipeline_config.asr_config(vocab),
                                parallelism=runtime.pipeline_config.parallelism)

    @app.post("/sessions/{session_id}/images/{image_id}/finalize",
              dependencies=[auth])
    async def finalize(session_id: str, image_id: str, request: Request):
        entry = runtime.load_registry(session_id)
        raw = await request.body()
        body = json.loads(raw) if raw else {}
        if not isinstance(body, dict):
            raise _bad_request("finalize body must be a JSON object")
        lock = runtime.finalize_lock(image_session_id(session_id, image_id))
        with lock:
            if entry["mode"] == "training":
                return _finalize_training(session_id, image_id, entry, body)
            return _finalize_main(session_id, image_id, entry, body)

    def _finalize_main(session_id: str, image_id: str, entry: dict, body: dict):
        if body.get("typed"):
            raise _bad_request("typed entries are only accepted in training mode")
        session = _load_session_for_finalize(session_id, image_id, entry, body)
        vocab = runtime.vocabularies[entry["vocabulary_id"]]
        labeling = process_image(session, vocab, runtime.gateway, runtime.table,
                                 runtime.pipeline_config)
        payload = labeling_to_bytes(labeling)
        (runtime.labels_dir / f"{labeling.session_id}.json").write_bytes(payload)
        (runtime.labels_dir / f"{labeling.session_id}.annotations.json").write_bytes(
            annotations_to_bytes(labeling))
        next_image = _advance(session_id, entry)
        return {"labeling": json.loads(payload), "next_image": next_image}

    def _finalize_training(session_id: str, image_id: str, entry: dict, body: dict):
        typed = body.get("typed")
        if not isinstance(typed, list) or not all(
                isinstance(e, dict) and "text" in e for e in (typed or [])):
            raise _bad_request(
                "training finalize requires typed: [{text, x?, y?, t?}, ...]")
        if runtime.training_classes is None:
            raise _bad_request("service has no training ground truth configured")
        if image_id not in runtime.training_classes:
            raise _bad_request(f"image {image_id!r} has no training ground truth")
        session = _load_session_for_finalize(session_id, image_id, entry, body)
        vocab = runtime.vocabularies[entry["vocabulary_id"]]

        entries = [TypedEntry(text=e["text"], x=e.get("x"), y=e.get("y"),
                              t=e.get("t")) for e in typed]
        feedback = grade_image([e.text for e in entries],
                               runtime.training_classes[image_id], vocab)
        try:
            spoken = _transcribe_session(session, vocab)
        except SpeechLabelError as exc:  # speech path is advisory in training
            log.warning("training transcription failed for %s: %s",
                        session.session_id, exc)
            spoken = []

        record = {
            "image_id": image_id,
            "seq": entry.get("finalized", 0),
            "typed": [e.text for e in entries],
            "feedback": feedback.to_json_obj(),
            "spoken": [list(r.texts) for r in spoken],
        }
        runtime.store.write_json(session.session_id, "training_record.json", record)

        running = _running_totals(session_id)
        feedback.running_recall = running["recall"]
        feedback.running_precision = running["precision"]
        next_image = _advance(session_id, entry)
        return {"feedback": feedback.to_json_obj(),
                "targets": {"min_recall": runtime.training_config.min_recall,
                            "min_precision": runtime.training_config.min_precision},
                "images_graded": running["count"],
                "next_image": next_image}

    def _training_records(session_id: str) -> list[dict]:
        prefix = f"{session_id}--"
        records = []
        for sid in runtime.store.session_ids():
            if not sid.startswith(prefix):
                continue
            record = runtime.store.read_json(sid, "training_record.json")
            if record is not None:
                records.append(record)
        records.sort(key=lambda r: r["seq"])
        return records

    def _running_totals(session_id: str) -> dict:
        records = _training_records(session_id)
        correct = sum(len(r["feedback"]["correct"]) for r in records)
        gt = correct + sum(len(r["feedback"]["missed"]) for r in records)
        typed = correct + sum(len(r["feedback"]["wrong"]) for r in records)
        return {
            "count": len(records),
            "recall": correct / gt if gt else 1.0,
            "precision": correct / typed if typed else 1.0,
        }

    @app.get("/sessions/{session_id}/training/summary", dependencies=[auth])
    async def training_summary(session_id: str):
        entry = runtime.load_registry(session_id)
        if entry["mode"] != "training":
            raise _bad_request("not a training session")
        records = _training_records(session_id)
        per_round = runtime.training_config.images_per_round
        if len(records) < per_round:
            raise HTTPException(
                status_code=409,
                detail=f"round incomplete: {len(records)} of {per_round} images")
        rounds = len(records) // per_round
        chunk = records[(rounds - 1) * per_round:rounds * per_round]
        image_records = [
            TrainingImageRecord(
                image_id=r["image_id"],
                typed_entries=[TypedEntry(text=t) for t in r["typed"]],
                feedback=Feedback(correct=set(r["feedback"]["correct"]),
                                  missed=set(r["feedback"]["missed"]),
                                  wrong=set(r["feedback"]["wrong"])))
            for r in chunk
        ]
        summary = round_summary(image_records, runtime.training_config)
        return {
            "annotator_id": entry["annotator_id"],
            "round_index": rounds - 1,
            "per_image": [{"image_id": r["image_id"],
                           "missed": r["feedback"]["missed"],
                           "wrong": r["feedback"]["wrong"],
                           "correct": r["feedback"]["correct"]}
                          for r in chunk],
            **summary,
        }

    # -- reports -------------------------------------------------------------------

    @app.get("/reports/corpus", dependencies=[auth])
    async def corpus_report():
        if runtime.ground_truth is None:
            raise HTTPException(status_code=409,
                                detail="no ground truth configured")
        digest = runtime.store.content_hash()
        cached = runtime._report_cache.get(digest)
        if cached is not None:
            return cached

        vocab = runtime.vocabularies[runtime.default_vocabulary]
        evaluations = []
        failures = []
        usage_records = []
        for sid in runtime.store.session_ids():
            try:
                meta = runtime.store.load_meta(sid)
            except ValidationError:
                continue  # not yet finalized
            if meta.mode == "training":
                record = runtime.store.read_json(sid, "training_record.json")
                if record is not None:
                    usage_records.append(TrainingImageRecord(
                        image_id=record["image_id"],
                        typed_entries=[TypedEntry(text=t) for t in record["typed"]],
                        feedback=Feedback(set(), set(), set())))
                continue
            try:
                session = runtime.store.load_session(sid)
                labeling = process_image(session, vocab, runtime.gateway,
                                         runtime.table, runtime.pipeline_config)
                evaluations.append(evaluate_image(
                    session, labeling, runtime.ground_truth.image(session.image_id)))
            except SpeechLabelError as exc:
                failures.append({"session_id": sid, "error": str(exc)})

        usage = None
        if any(r.typed_entries for r in usage_records):
            usage = vocabulary_usage_rate(
                [r for r in usage_records if r.typed_entries], vocab)
        report = build_corpus_report(evaluations, vocabulary_usage=usage,
                                     failures=failures)
        runtime._report_cache = {digest: report}
        return report

    return app
