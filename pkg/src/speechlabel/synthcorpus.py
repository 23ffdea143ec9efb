"""Deterministic synthetic annotation corpus for offline replay.

Builds a complete store (event logs, WAV recordings, metadata), COCO-style
ground truth, a mock ASR fixture and a manifest of designed outcomes. The
manifest is bookkeeping done at generation time from the scripted speech
cases, so tests can compare pipeline output against values derived
independently of the pipeline code.

Every quantity is drawn from seeded generators; building the same spec
twice produces byte-identical files.

Run directly to materialize a corpus:

    python3 -m speechlabel.synthcorpus --out /tmp/corpus \
        --vocab fixtures/vocabularies/coco80.json \
        --embeddings fixtures/embeddings/mini_vectors.txt
"""

from __future__ import annotations

import argparse
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .asr import SegmentRef, TranscriptionAlternative, TranscriptionResult
from .audio import AudioRef
from .matching import EmbeddingTable, resolve
from .session import SessionMeta
from .store import SessionStore
from .vocabulary import Vocabulary, load_vocabulary

# Spoken out-of-vocabulary forms with the class they are designed to reach
# through the embedding fallback of the bundled fixture table.
SYNONYMS = {
    "dog": "puppy",
    "cat": "kitten",
    "car": "automobile",
    "tv": "telly",
    "oven": "stove",
    "couch": "sofa",
    "cell phone": "cellphone",
    "bicycle": "pushbike",
}

# Recognizer noise; none of these normalizes to a vocabulary class.
JUNK_WORDS = [
    "tree", "grass", "window", "door", "shoe", "pillow", "curtain", "cloud",
    "shelf", "wall", "floor", "ceiling", "road", "river", "mountain",
    "dork", "dug", "doc", "cot", "rug", "tin", "jar", "mat",
    "cab", "van", "log", "net", "toy", "pen", "map",
]

CASES = ["skip", "exact1", "exact2", "fallback", "silence", "misheard"]
CASE_PROBS = [0.06, 0.73, 0.06, 0.05, 0.04, 0.06]


@dataclass
class CorpusSpec:
    images: int = 300
    annotators: int = 5
    seed: int = 72024
    image_width: int = 640
    image_height: int = 480
    sample_rate: int = 4000
    # one scripted permanent ASR transport failure lands on this image
    asr_fail_image: int | None = 137


@dataclass
class _ClickPlan:
    class_name: str | None   # designed resolution; None = unlabeled
    spoken: list[str]        # with-hints alternative texts
    spoken_without: list[str]
    x: int = 0
    y: int = 0
    t: float = 0.0
    speech: tuple[float, float] | None = None
    fail: bool = False


def _rect(rng, width, height):
    w = float(rng.uniform(40, 150))
    h = float(rng.uniform(40, 135))
    x0 = float(rng.uniform(5, width - w - 5))
    y0 = float(rng.uniform(5, height - h - 5))
    return (round(x0, 1), round(y0, 1), round(x0 + w, 1), round(y0 + h, 1))


def _inside(rect, x, y):
    return rect[0] <= x <= rect[2] and rect[1] <= y <= rect[3]


def _junk(rng, exclude, count):
    out = []
    while len(out) < count:
        w = JUNK_WORDS[int(rng.integers(len(JUNK_WORDS)))]
        if w != exclude and w not in out:
            out.append(w)
    return out


class CorpusBuilder:
    def __init__(self, spec: CorpusSpec, vocab: Vocabulary, table: EmbeddingTable):
        self.spec = spec
        self.vocab = vocab
        self.table = table
        self.class_names = [c.normalized for c in vocab.classes]
        self._verify_synonyms()

    def _verify_synonyms(self) -> None:
        """The designed fallback outcomes must hold on the real matcher."""
        for target, spoken in SYNONYMS.items():
            if self.vocab.contains(target) is None:
                continue
            result = TranscriptionResult(
                segment_ref=SegmentRef("check", 0),
                alternatives=(TranscriptionAlternative(spoken, rank=1),))
            resolution = resolve(result, self.vocab, self.table)
            if resolution is None or resolution.class_name.normalized != target:
                raise AssertionError(
                    f"embedding fixture does not map {spoken!r} to {target!r}")

    # -- per-image planning --------------------------------------------------

    def _plan_image(self, rng, gt_classes, instances):
        """Scripted clicks for one image; returns (plans, expected sequence)."""
        # annotate big objects first, with some disorder
        order = sorted(gt_classes,
                       key=lambda c: -max((r[2] - r[0]) * (r[3] - r[1])
                                          for r in instances[c]) * rng.uniform(0.7, 1.3))
        plans: list[_ClickPlan] = []
        for cls in order:
            case = str(rng.choice(CASES, p=CASE_PROBS))
            if case == "skip":
                continue
            if case == "fallback" and cls not in SYNONYMS:
                case = "exact1"
            plan = self._plan_click(rng, cls, case)
            plan.x, plan.y = self._click_point(rng, instances[cls])
            plans.append(plan)

        if plans and rng.random() < 0.06:  # second click on an annotated class
            done = [p for p in plans if p.class_name in gt_classes and p.class_name]
            if done:
                target = done[int(rng.integers(len(done)))].class_name
                plan = self._plan_click(rng, target, "exact1")
                plan.x, plan.y = self._click_point(rng, instances[target])
                plans.append(plan)

        if rng.random() < 0.08:  # spurious click: class not in the image
            absent = [c for c in self.class_names if c not in gt_classes]
            cls = absent[int(rng.integers(len(absent)))]
            plan = self._plan_click(rng, cls, "exact1")
            plan.x = int(rng.integers(0, self.spec.image_width + 1))
            plan.y = int(rng.integers(0, self.spec.image_height + 1))
            plans.append(plan)
        return plans

    def _plan_click(self, rng, cls: str, case: str) -> _ClickPlan:
        junk = _junk(rng, cls, 4)
        if case == "exact1":
            spoken = [cls, junk[0], junk[1]]
            expected = cls
        elif case == "exact2":
            spoken = [junk[0], cls, junk[1]]
            expected = cls
        elif case == "fallback":
            spoken = [SYNONYMS[cls]]
            expected = cls
        elif case == "silence":
            spoken = []
            expected = None
        elif case == "misheard":
            others = [c for c in self.class_names if c != cls]
            other = others[int(rng.integers(len(others)))]
            spoken = [other, cls, junk[0]]
            expected = other
        else:
            raise AssertionError(case)

        if not spoken:
            without = []
        elif case == "fallback":
            without = list(spoken)
        else:
            roll = rng.random()
            if roll < 0.60:
                without = [junk[2], spoken[0], junk[3]]
            elif roll < 0.85:
                without = [junk[2], junk[3], spoken[0]]
            else:
                without = junk[1:4]
        return _ClickPlan(class_name=expected, spoken=spoken,
                          spoken_without=without)

    def _click_point(self, rng, rects) -> tuple[int, int]:
        if rng.random() < 0.95:  # hit: inside a random instance of the class
            r = rects[int(rng.integers(len(rects)))]
            x = int(rng.uniform(r[0] + 2, r[2] - 2))
            y = int(rng.uniform(r[1] + 2, r[3] - 2))
            return x, y
        for _ in range(1000):  # miss: outside every instance of the class
            x = int(rng.integers(0, self.spec.image_width + 1))
            y = int(rng.integers(0, self.spec.image_height + 1))
            if not any(_inside(r, x, y) for r in rects):
                return x, y
        raise AssertionError("could not place a miss click")

    # -- event synthesis -------------------------------------------------------

    def _emit_trace(self, events, rng, start, end, t_from, t_to):
        """Mouse movement from start to end within (t_from, t_to)."""
        span = t_to - t_from
        if span < 0.15:
            return
        steps = max(2, int(span / 0.03))
        pause_at = int(rng.integers(1, steps)) if rng.random() < 0.4 else -1
        pause = min(0.6, span * 0.4)
        t = t_from
        for k in range(1, steps + 1):
            frac = k / steps
            dt = (span - pause) / steps if pause_at >= 0 else span / steps
            t += dt
            if k == pause_at:
                t += pause
            x = int(round(start[0] + (end[0] - start[0]) * frac + rng.normal(0, 1.5)))
            y = int(round(start[1] + (end[1] - start[1]) * frac + rng.normal(0, 1.5)))
            x = int(np.clip(x, 0, self.spec.image_width))
            y = int(np.clip(y, 0, self.spec.image_height))
            if k == steps:
                x, y = end
            events.append({"kind": "mouse_move", "t": round(min(t, t_to), 3),
                           "x": x, "y": y})

    def _build_session_events(self, rng, plans):
        events = [{"kind": "image_shown", "t": 0.0}]
        cursor = (int(rng.integers(0, self.spec.image_width + 1)),
                  int(rng.integers(0, self.spec.image_height + 1)))
        consult_before = (int(rng.integers(len(plans)))
                          if plans and rng.random() < 0.15 else -1)
        t = 0.0
        for k, plan in enumerate(plans):
            gap = 1.6 + float(rng.uniform(0.0, 0.9)) if k == 0 else \
                1.3 + float(rng.uniform(0.0, 1.8))
            if k == consult_before:
                consult = 3.0 + float(rng.uniform(0.0, 5.0))
                open_t = round(t + 0.3, 3)
                events.append({"kind": "show_classes_open", "t": open_t})
                events.append({"kind": "show_classes_close",
                               "t": round(open_t + consult, 3)})
                t = open_t + consult
            click_t = round(t + gap, 3)
            self._emit_trace(events, rng, cursor, (plan.x, plan.y),
                             t + 0.2, click_t - 0.05)
            events.append({"kind": "click", "t": click_t, "x": plan.x, "y": plan.y})
            plan.t = click_t
            if plan.spoken:
                s0 = round(click_t - 0.42 + float(rng.uniform(0, 0.12)), 3)
                s1 = round(click_t + 0.55 + float(rng.uniform(0, 0.45)), 3)
                plan.speech = (s0, s1)
            cursor = (plan.x, plan.y)
            t = click_t
        submit_t = round(t + 2.2 + float(rng.uniform(0.0, 2.2)), 3) if plans \
            else round(3.0 + float(rng.uniform(0.0, 3.0)), 3)
        self._emit_trace(events, rng, cursor,
                         (self.spec.image_width // 2, self.spec.image_height - 5),
                         t + 0.3, submit_t - 0.2)
        events.append({"kind": "submit", "t": submit_t})
        events.sort(key=lambda e: e["t"])
        return events, submit_t

    # -- whole corpus ------------------------------------------------------------

    def build(self, out_dir: str | Path) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        store = SessionStore(out / "store")

        gt_images = []
        gt_annotations = []
        asr_entries = []
        expected = {}
        ann_id = 0

        for i in range(self.spec.images):
            rng = np.random.default_rng([self.spec.seed, i])
            image_id = f"img{i:06d}"
            annotator = f"a{(i % self.spec.annotators) + 1:02d}"
            session_id = f"{annotator}--{image_id}"

            n_classes = int(rng.integers(1, 6))
            picks = rng.choice(len(self.class_names), size=n_classes, replace=False)
            gt_classes = [self.class_names[int(p)] for p in sorted(picks)]
            instances = {
                cls: [_rect(rng, self.spec.image_width, self.spec.image_height)
                      for _ in range(1 + int(rng.random() < 0.25))]
                for cls in gt_classes
            }

            plans = self._plan_image(rng, gt_classes, instances)
            if i == self.spec.asr_fail_image:
                # force one click whose transcription fails at the transport level
                plan = self._plan_click(rng, gt_classes[0], "exact1")
                plan.x, plan.y = self._click_point(rng, instances[gt_classes[0]])
                plan.fail = True
                plan.class_name = None
                plans.insert(0, plan)

            events, submit_t = self._build_session_events(rng, plans)

            sample_count = int(math.ceil((submit_t + 0.3) * self.spec.sample_rate))
            audio = AudioRef(blob=bytes(2 * sample_count),
                             sample_rate=self.spec.sample_rate,
                             sample_count=sample_count)
            meta = SessionMeta(
                image_id=image_id, image_width=self.spec.image_width,
                image_height=self.spec.image_height,
                vocabulary_id=self.vocab.name, annotator_id=annotator, mode="main")
            lines = "".join(json.dumps(e, sort_keys=True) + "\n" for e in events)
            store.write_raw_events(session_id, lines)
            store.write_raw_audio(session_id, _wav_bytes(audio))
            store.write_meta(session_id, meta)

            # ground truth entries
            gt_images.append({"id": image_id, "width": self.spec.image_width,
                              "height": self.spec.image_height,
                              "file_name": f"{image_id}.png"})
            for cls in gt_classes:
                for rect in instances[cls]:
                    ann_id += 1
                    x0, y0, x1, y1 = rect
                    gt_annotations.append({
                        "id": ann_id, "image_id": image_id,
                        "category_id": self.class_names.index(cls) + 1,
                        "segmentation": [[x0, y0, x1, y0, x1, y1, x0, y1]],
                    })

            # ASR fixture + expected outcome bookkeeping
            seen: set[str] = set()
            labels = []
            duplicates = unlabeled = 0
            for j, plan in enumerate(plans):
                entry = {
                    "key": {"session": session_id, "object_index": j},
                    "with_hints": [
                        {"text": text, "confidence": round(0.93 - 0.11 * r, 3)}
                        for r, text in enumerate(plan.spoken)],
                    "without_hints": [
                        {"text": text, "confidence": round(0.66 - 0.11 * r, 3)}
                        for r, text in enumerate(plan.spoken_without)],
                }
                if plan.speech:
                    entry["speech_interval"] = [plan.speech[0], plan.speech[1]]
                if plan.fail:
                    entry["fail"] = True
                asr_entries.append(entry)

                if plan.class_name is None:
                    unlabeled += 1
                elif plan.class_name in seen:
                    duplicates += 1
                else:
                    seen.add(plan.class_name)
                    labels.append({"class": plan.class_name, "x": plan.x,
                                   "y": plan.y, "t": plan.t})

            expected[session_id] = {
                "image_id": image_id,
                "annotator_id": annotator,
                "gt_classes": gt_classes,
                "labels": labels,
                "duplicates": duplicates,
                "unlabeled": unlabeled,
            }

        categories = [{"id": k + 1, "name": name}
                      for k, name in enumerate(self.class_names)]
        _dump(out / "gt.json", {"images": gt_images, "categories": categories,
                                "annotations": gt_annotations})
        _dump(out / "asr_fixture.json", {"entries": asr_entries})
        _dump(out / "expected_labels.json", expected)
        manifest = {
            "images": self.spec.images,
            "seed": self.spec.seed,
            "vocabulary": self.vocab.name,
            "sessions": sorted(expected),
            "total_labels": sum(len(v["labels"]) for v in expected.values()),
        }
        _dump(out / "manifest.json", manifest)
        return manifest


def _wav_bytes(audio: AudioRef) -> bytes:
    from .audio import write_wav
    return write_wav(audio)


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=0) + "\n",
                    encoding="utf-8")


def build_corpus(out_dir: str | Path, vocab: Vocabulary, table: EmbeddingTable,
                 spec: CorpusSpec | None = None) -> dict:
    return CorpusBuilder(spec or CorpusSpec(), vocab, table).build(out_dir)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True)
    parser.add_argument("--vocab", required=True)
    parser.add_argument("--embeddings", required=True)
    parser.add_argument("--images", type=int, default=300)
    parser.add_argument("--seed", type=int, default=CorpusSpec.seed)
    args = parser.parse_args(argv)
    vocab = load_vocabulary(args.vocab)
    table = EmbeddingTable.load(args.embeddings)
    manifest = build_corpus(args.out, vocab, table,
                            CorpusSpec(images=args.images, seed=args.seed))
    print(json.dumps(manifest, indent=2))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
