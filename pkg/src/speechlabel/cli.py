"""Command line interface.

Subcommands: process (batch pipeline over a store), evaluate (corpus report
against ground truth), grade-training (round summaries), serve (HTTP
service), validate (lint a store and its fixtures).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .asr import MockAsr, RemoteAsr, RemoteAsrSettings
from .config import load_config
from .errors import SpeechLabelError
from .groundtruth import load_ground_truth
from .matching import EmbeddingTable
from .metrics import (
    build_corpus_report,
    evaluate_image,
    load_transcription_records,
)
from .pipeline import PipelineConfig, process_corpus
from .store import SessionStore
from .training import (
    Feedback,
    TrainingConfig,
    TrainingImageRecord,
    TypedEntry,
    grade_image,
    round_summary,
    vocabulary_usage_rate,
)
from .vocabulary import load_vocabulary


def _fail(message: str, code: int = 1) -> int:
    print(json.dumps({"error": message}), file=sys.stderr)
    return code


def _pipeline_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--store", required=True, help="session store root")
    parser.add_argument("--vocab", required=True, help="vocabulary JSON file")
    parser.add_argument("--embeddings", required=True, help="embedding table file")
    parser.add_argument("--asr", choices=["mock", "remote"], default="mock")
    parser.add_argument("--asr-fixture", help="mock ASR fixture JSON")
    parser.add_argument("--asr-endpoint", help="remote ASR endpoint URL")
    parser.add_argument("--asr-token", help="remote ASR bearer token")
    parser.add_argument("--delta", type=float, default=0.5,
                        help="segment lead time before each click, seconds")
    parser.add_argument("--no-phrase-hints", action="store_true",
                        help="transcribe without vocabulary phrase hints")
    parser.add_argument("--max-alternatives", type=int, default=3)
    parser.add_argument("--min-similarity", type=float, default=-1.0)
    parser.add_argument("--parallelism", type=int, default=1)


def _build_pipeline(args):
    vocab = load_vocabulary(args.vocab)
    table = EmbeddingTable.load(args.embeddings)
    if args.asr == "mock":
        if not args.asr_fixture:
            raise SpeechLabelError("--asr mock requires --asr-fixture")
        gateway = MockAsr.from_file(args.asr_fixture)
    else:
        if not args.asr_endpoint:
            raise SpeechLabelError("--asr remote requires --asr-endpoint")
        gateway = RemoteAsr(RemoteAsrSettings(endpoint=args.asr_endpoint,
                                              auth_token=args.asr_token))
    config = PipelineConfig(
        delta_s=args.delta, use_phrase_hints=not args.no_phrase_hints,
        max_alternatives=args.max_alternatives,
        min_similarity=args.min_similarity, parallelism=args.parallelism)
    return vocab, table, gateway, config


def cmd_process(args) -> int:
    vocab, table, gateway, config = _build_pipeline(args)
    store = SessionStore(args.store)
    result = process_corpus(store, vocab, gateway, table, config,
                            out_dir=args.out)
    print(json.dumps({
        "processed": result.sessions_processed,
        "labels": sum(len(l.labels) for l in result.labelings),
        "failures": result.failures,
        "out": args.out,
    }, sort_keys=True, indent=2))
    return 0


def cmd_evaluate(args) -> int:
    vocab, table, gateway, config = _build_pipeline(args)
    store = SessionStore(args.store)
    gt = load_ground_truth(args.gt, vocab)
    result = process_corpus(store, vocab, gateway, table, config,
                            out_dir=args.out)
    by_session = {l.session_id: l for l in result.labelings}
    evaluations = []
    for session_id, labeling in sorted(by_session.items()):
        session = store.load_session(session_id)
        evaluations.append(evaluate_image(session, labeling,
                                          gt.image(session.image_id)))
    transcripts = (load_transcription_records(args.transcripts)
                   if args.transcripts else None)
    usage = None
    if args.usage_records:
        with open(args.usage_records, encoding="utf-8") as f:
            doc = json.load(f)
        records = [TrainingImageRecord(
            image_id=r["image_id"],
            typed_entries=[TypedEntry(text=t) for t in r["typed"]],
            feedback=Feedback(set(), set(), set())) for r in doc["records"]]
        usage = vocabulary_usage_rate(records, vocab)
    report = build_corpus_report(evaluations, transcription_records=transcripts,
                                 vocabulary_usage=usage,
                                 failures=result.failures)
    print(json.dumps(report, sort_keys=True, indent=2))
    if args.csv:
        _write_csv(args.csv, evaluations)
    return 0


def _write_csv(path: str, evaluations) -> None:
    import csv
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["image_id", "annotator_id", "predicted", "gt",
                         "duration_s", "mouse_path_px", "speaking_s",
                         "hits", "misses", "ignored"])
        for e in evaluations:
            writer.writerow([
                e.image_id, e.annotator_id,
                "|".join(sorted(e.predicted_classes)),
                "|".join(sorted(e.gt_classes)),
                e.duration_s, round(e.mouse_path_px, 2), round(e.speaking_s, 3),
                e.location.hits, e.location.misses, e.location.ignored,
            ])


def cmd_grade_training(args) -> int:
    vocab = load_vocabulary(args.vocab)
    config = TrainingConfig(images_per_round=args.images_per_round,
                            min_recall=args.min_recall,
                            min_precision=args.min_precision,
                            vocabulary_id=vocab.name)
    with open(args.records, encoding="utf-8") as f:
        doc = json.load(f)
    records = []
    for item in doc["images"]:
        feedback = grade_image(item["typed"], set(item["gt"]), vocab)
        records.append(TrainingImageRecord(
            image_id=item["image_id"],
            typed_entries=[TypedEntry(text=t) for t in item["typed"]],
            feedback=feedback))
    reports = []
    for round_index in range(len(records) // config.images_per_round):
        chunk = records[round_index * config.images_per_round:
                        (round_index + 1) * config.images_per_round]
        summary = round_summary(chunk, config)
        reports.append({
            "annotator_id": doc.get("annotator_id"),
            "round_index": round_index,
            "per_image": [{"image_id": r.image_id,
                           "missed": sorted(r.feedback.missed),
                           "wrong": sorted(r.feedback.wrong),
                           "correct": sorted(r.feedback.correct)}
                          for r in chunk],
            **summary,
        })
    if not reports:
        return _fail(f"no complete round: {len(records)} records, "
                     f"{config.images_per_round} needed per round")
    print(json.dumps(reports, sort_keys=True, indent=2))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    config = load_config(
        args.config,
        data_dir=args.data_dir,
        listen_host=args.host, listen_port=args.port)
    app = create_app(config)
    uvicorn.run(app, host=config.listen_host, port=config.listen_port)
    return 0


def cmd_validate(args) -> int:
    problems = []
    vocab = table = None
    if args.vocab:
        try:
            vocab = load_vocabulary(args.vocab)
        except (SpeechLabelError, OSError, json.JSONDecodeError) as exc:
            problems.append({"file": args.vocab, "error": str(exc)})
    if args.embeddings:
        try:
            table = EmbeddingTable.load(args.embeddings)
        except (SpeechLabelError, OSError, ValueError) as exc:
            problems.append({"file": args.embeddings, "error": str(exc)})
    if args.gt and vocab is not None:
        try:
            load_ground_truth(args.gt, vocab)
        except (SpeechLabelError, OSError, json.JSONDecodeError) as exc:
            problems.append({"file": args.gt, "error": str(exc)})
    if args.asr_fixture:
        try:
            MockAsr.from_file(args.asr_fixture)
        except (SpeechLabelError, OSError, json.JSONDecodeError) as exc:
            problems.append({"file": args.asr_fixture, "error": str(exc)})

    store = SessionStore(args.store)
    checked = 0
    for session_id in store.session_ids():
        checked += 1
        try:
            store.load_session(session_id)
        except SpeechLabelError as exc:
            problems.append({
                "file": str(store.session_dir(session_id)), "error": str(exc)})
    print(json.dumps({"sessions_checked": checked, "problems": problems},
                     sort_keys=True, indent=2))
    if problems:
        for p in problems:
            print(f"{p['file']}: {p['error']}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="speechlabel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="run the labelling pipeline over a store")
    _pipeline_args(p)
    p.add_argument("--out", help="directory for per-image labeling JSON")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("evaluate", help="corpus report against ground truth")
    _pipeline_args(p)
    p.add_argument("--gt", required=True, help="COCO-style ground truth JSON")
    p.add_argument("--transcripts", help="typed-vs-transcribed records JSON")
    p.add_argument("--usage-records", help="typed-entry records JSON")
    p.add_argument("--out", help="directory for per-image labeling JSON")
    p.add_argument("--csv", help="write a per-image CSV table here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("grade-training", help="grade typed rounds against GT")
    p.add_argument("--records", required=True,
                   help='JSON {"annotator_id", "images": [{image_id, typed, gt}]}')
    p.add_argument("--vocab", required=True)
    p.add_argument("--images-per-round", type=int, default=80)
    p.add_argument("--min-recall", type=float, default=0.80)
    p.add_argument("--min-precision", type=float, default=0.85)
    p.set_defaults(func=cmd_grade_training)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--config", help="service config JSON")
    p.add_argument("--data-dir")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("validate", help="lint a store and fixture files")
    p.add_argument("--store", required=True)
    p.add_argument("--vocab")
    p.add_argument("--embeddings")
    p.add_argument("--gt")
    p.add_argument("--asr-fixture")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SpeechLabelError as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
