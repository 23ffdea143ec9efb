#!/usr/bin/env python3
"""Regenerate the committed fixture files under fixtures/.

Deterministic: same seed, same bytes. Run from the repository root:

    python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from speechlabel.matching import EmbeddingTable, embed_phrase, cosine_similarity  # noqa: E402
from speechlabel.vocabulary import Vocabulary, ClassName, normalize  # noqa: E402

SEED = 20240811
EMBED_DIM = 32

COCO_CLASSES = [
    "person", "bicycle", "car", "motorcycle", "airplane", "bus", "train",
    "truck", "boat", "traffic light", "fire hydrant", "stop sign",
    "parking meter", "bench", "bird", "cat", "dog", "horse", "sheep", "cow",
    "elephant", "bear", "zebra", "giraffe", "backpack", "umbrella", "handbag",
    "tie", "suitcase", "frisbee", "skis", "snowboard", "sports ball", "kite",
    "baseball bat", "baseball glove", "skateboard", "surfboard",
    "tennis racket", "bottle", "wine glass", "cup", "fork", "knife", "spoon",
    "bowl", "banana", "apple", "sandwich", "orange", "broccoli", "carrot",
    "hot dog", "pizza", "donut", "cake", "chair", "couch", "potted plant",
    "bed", "dining table", "toilet", "tv", "laptop", "mouse", "remote",
    "keyboard", "cell phone", "microwave", "oven", "toaster", "sink",
    "refrigerator", "book", "clock", "vase", "scissors", "teddy bear",
    "hair drier", "toothbrush",
]

ILSVRC_CLASSES = [
    # wind instruments
    "trumpet", "saxophone", "trombone", "flute", "oboe", "harmonica",
    "french horn", "accordion",
    # other musical instruments
    "piano", "guitar", "violin", "chime", "maraca", "drum", "cello", "banjo",
    "harp",
    # fruit
    "pineapple", "fig", "orange", "banana", "strawberry", "apple", "lemon",
    "pomegranate",
    # other food
    "pizza", "guacamole", "popsicle", "hamburger", "hotdog", "burrito",
    "pretzel", "mushroom", "bagel", "artichoke", "cucumber", "bell pepper",
    "cabbage",
    # clothing
    "miniskirt", "diaper", "brassiere", "bathing cap", "bow tie", "helmet",
    "tie", "swimming trunks", "swimsuit", "hat", "sunglasses",
    # flying animals
    "bee", "ladybug", "butterfly", "dragonfly", "bird",
    # felines and canines
    "tiger", "lion", "domestic cat", "fox", "dog",
    # animals with hooves
    "camel", "hippopotamus", "swine", "cattle", "zebra", "sheep", "horse",
    "antelope",
    # animals with 6 or more legs
    "lobster", "scorpion", "isopod", "centipede", "ant", "tick",
    # animals with no legs
    "snake", "goldfish", "jellyfish", "ray", "snail", "starfish", "whale",
    "seal",
    # other animals
    "red panda", "porcupine", "giant panda", "rabbit", "koala", "elephant",
    "otter", "squirrel", "monkey", "hamster", "skunk", "armadillo", "bear",
    "frog", "lizard", "turtle",
    # vehicles
    "airplane", "golfcart", "watercraft", "train", "bus", "snowmobile",
    "bicycle", "unicycle", "snowplow", "car", "motorcycle", "cart",
    # cosmetics
    "lipstick", "face powder", "perfume", "hair spray", "cream",
    # medical items
    "neck brace", "stethoscope", "band aid", "syringe", "stretcher", "crutch",
    # furniture
    "bench", "chair", "bookshelf", "babys bed", "table", "sofa",
    "filing cabinet",
    # carpentry items
    "axe", "nail", "power drill", "chain saw", "screwdriver", "hammer",
    # school supplies
    "pencil box", "pencil sharpener", "rubber eraser", "ruler", "binder",
    # game equipment
    "baseball", "golf ball", "tennis ball", "racket", "rugby ball",
    "volleyball", "ping-pong ball", "croquet ball", "basketball",
    "soccer ball", "puck",
    # sports equipment
    "dumbbell", "balance beam", "horizontal bar", "ski", "bow",
    "punching bag",
    # consumer electronics
    "remote", "digital clock", "computer mouse", "computer keypad", "laptop",
    "printer", "iPod", "screen", "tape player", "microphone",
    # electronic appliances
    "washer", "coffee maker", "microwave", "waffle iron", "toaster",
    "refrigerator", "stove", "dishwasher", "vacuum", "electric fan",
    "hair drier",
    # non-electric kitchen items
    "bowl", "ladle", "salt shaker", "can opener", "cocktail shaker",
    "frying pan", "spatula", "plate rack", "strainer", "corkscrew",
    "water bottle", "mug", "pitcher", "wine bottle", "milk can",
    # misc objects
    "person", "traffic light", "flowerpot", "purse", "backpack",
    "plastic bag", "lamp", "beaker", "soap dispenser",
]

# Out-of-vocabulary spoken forms and the class they should land on via
# embedding similarity. "vocab" names which vocabulary the mapping is
# asserted against.
SYNONYMS = [
    {"phrase": "oven", "target": "stove", "vocab": "ilsvrc200"},
    {"phrase": "traffic signal", "target": "traffic light", "vocab": "ilsvrc200"},
    {"phrase": "stove", "target": "oven", "vocab": "coco80"},
    {"phrase": "traffic signal", "target": "traffic light", "vocab": "coco80"},
    {"phrase": "dock", "target": "dog", "vocab": "coco80"},
    {"phrase": "puppy", "target": "dog", "vocab": "coco80"},
    {"phrase": "kitten", "target": "cat", "vocab": "coco80"},
    {"phrase": "automobile", "target": "car", "vocab": "coco80"},
    {"phrase": "telly", "target": "tv", "vocab": "coco80"},
    {"phrase": "sofa", "target": "couch", "vocab": "coco80"},
    {"phrase": "cellphone", "target": "cell phone", "vocab": "coco80"},
    {"phrase": "pushbike", "target": "bicycle", "vocab": "coco80"},
]

# Plausible recognizer noise; none of these normalizes to a class of either
# vocabulary and none is present in the embedding table.
JUNK_WORDS = [
    "tree", "grass", "window", "door", "shoe", "pillow", "curtain", "cloud",
    "shelf", "wall", "floor", "ceiling", "road", "river", "mountain",
    "dork", "dug", "doc", "cot", "rug", "tin", "jar", "mat",
    "cab", "van", "log", "net", "toy", "pen", "map",
]


def build_vocab(name: str, classes: list[str]) -> Vocabulary:
    return Vocabulary(name=name, classes=[ClassName.of(c) for c in classes])


def write_vocab_file(path: Path, name: str, classes: list[str]) -> None:
    doc = {"name": name, "classes": [{"name": c} for c in classes]}
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def all_tokens(vocabs: list[Vocabulary]) -> list[str]:
    tokens: list[str] = []
    seen = set()
    for vocab in vocabs:
        for cls in vocab.classes:
            for tok in cls.tokens:
                if tok not in seen:
                    seen.add(tok)
                    tokens.append(tok)
    return tokens


def unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def build_embeddings(vocabs: dict[str, Vocabulary]) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(SEED)
    vectors: dict[str, np.ndarray] = {}
    for token in all_tokens(list(vocabs.values())):
        vectors[token] = unit(rng.standard_normal(EMBED_DIM))

    # Blend each synonym token toward its target so cosine similarity finds
    # the intended class. Multi-word synonyms blend their distinctive token
    # toward the distinctive token of the target.
    def blend(token: str, toward: np.ndarray) -> None:
        g = vectors.get(token)
        if g is None:
            g = unit(rng.standard_normal(EMBED_DIM))
        vectors[token] = unit(0.92 * unit(toward) + 0.39 * g)

    for syn in SYNONYMS:
        vocab = vocabs[syn["vocab"]]
        target_cls = vocab.contains(syn["target"])
        assert target_cls is not None, syn
        phrase_tokens = normalize(syn["phrase"]).split()
        target_tokens = list(target_cls.tokens)
        if len(phrase_tokens) == 1:
            toward = np.mean([vectors[t] for t in target_tokens], axis=0)
            blend(phrase_tokens[0], toward)
        else:
            # e.g. "traffic signal" -> "traffic light": shared tokens stay,
            # the remaining token leans on the remaining target token.
            extra = [t for t in phrase_tokens if t not in target_tokens]
            missing = [t for t in target_tokens if t not in phrase_tokens]
            assert len(extra) == 1 and len(missing) == 1, syn
            blend(extra[0], vectors[missing[0]])
    return vectors


def verify_embeddings(vectors: dict[str, np.ndarray],
                      vocabs: dict[str, Vocabulary]) -> None:
    table = EmbeddingTable(EMBED_DIM, vectors)
    for syn in SYNONYMS:
        vocab = vocabs[syn["vocab"]]
        assert vocab.contains(syn["phrase"]) is None, \
            f"{syn['phrase']} must not be in {syn['vocab']}"
        phrase_vec = embed_phrase(syn["phrase"], table)
        assert phrase_vec is not None
        best = None
        for cls in vocab.classes:
            cls_vec = embed_phrase(cls.normalized, table)
            assert cls_vec is not None, f"class {cls} not embeddable"
            sim = cosine_similarity(phrase_vec, cls_vec)
            if best is None or sim > best[0]:
                best = (sim, cls.normalized)
        assert best[1] == normalize(syn["target"]), (
            f"{syn['phrase']} resolves to {best} in {syn['vocab']}, "
            f"expected {syn['target']}")
    for junk in JUNK_WORDS:
        for vocab in vocabs.values():
            assert vocab.contains(junk) is None, f"junk word {junk} is a class"
        for tok in junk.split():
            assert tok not in vectors, f"junk word {junk} is embeddable"


def write_embeddings(path: Path, vectors: dict[str, np.ndarray]) -> None:
    lines = [f"{len(vectors)} {EMBED_DIM}"]
    for token in sorted(vectors):
        coords = " ".join(f"{v:.6f}" for v in vectors[token])
        lines.append(f"{token} {coords}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def build_transcription_corpus(vocab: Vocabulary) -> dict:
    """1000 scored utterances + 30 without transcription results.

    Designed rates over the 1000 scored entries:
      with hints:    931 rank-1 hits, 965 top-3 hits
      without hints: 705 rank-1 hits, 847 top-3 hits
    """
    rng = np.random.default_rng(SEED + 1)
    n = 1000
    class_names = [c.normalized for c in vocab.classes]

    def junk(exclude: str, count: int) -> list[str]:
        out = []
        while len(out) < count:
            w = JUNK_WORDS[rng.integers(len(JUNK_WORDS))]
            if w != exclude and w not in out:
                out.append(w)
        return out

    def assign(rank1: int, top3: int) -> list[int]:
        # 0 = typed at rank 1, 1 = at rank 2 or 3, 2 = absent
        slots = [0] * rank1 + [1] * (top3 - rank1) + [2] * (n - top3)
        return list(rng.permutation(slots))

    with_slots = assign(931, 965)
    without_slots = assign(705, 847)

    def alternatives(typed: str, slot: int, base_conf: float) -> list[dict]:
        noise = junk(typed, 3)
        if slot == 0:
            texts = [typed, noise[0], noise[1]]
        elif slot == 1:
            pos = int(rng.integers(1, 3))
            texts = noise[:3]
            texts[pos] = typed
        else:
            texts = noise[:3]
        return [
            {"text": t, "confidence": round(base_conf - 0.11 * i, 3)}
            for i, t in enumerate(texts)
        ]

    entries = []
    for i in range(n):
        typed = class_names[int(rng.integers(len(class_names)))]
        entries.append({
            "key": {"session": "traincorpus", "object_index": i},
            "typed": typed,
            "with_hints": alternatives(typed, with_slots[i],
                                       0.9 + float(rng.uniform(0, 0.08))),
            "without_hints": alternatives(typed, without_slots[i],
                                          0.55 + float(rng.uniform(0, 0.2))),
        })
    for i in range(30):
        typed = class_names[int(rng.integers(len(class_names)))]
        entries.append({
            "key": {"session": "traincorpus", "object_index": n + i},
            "typed": typed,
            "with_hints": [],
            "without_hints": [],
        })
    return {"entries": entries}


def build_usage_fixture(vocab: Vocabulary, off_vocab: list[str],
                        total: int, seed_offset: int) -> dict:
    """Typed-entry records with exactly len(off_vocab) out-of-vocabulary names."""
    rng = np.random.default_rng(SEED + seed_offset)
    class_names = [c.normalized for c in vocab.classes]
    texts = [class_names[int(rng.integers(len(class_names)))]
             for _ in range(total - len(off_vocab))]
    texts.extend(off_vocab)
    texts = [texts[i] for i in rng.permutation(len(texts))]
    records = []
    per_record = 5
    for start in range(0, total, per_record):
        records.append({
            "image_id": f"train{start // per_record:04d}",
            "typed": texts[start:start + per_record],
        })
    return {"records": records}


def main() -> None:
    fixtures = ROOT / "fixtures"
    (fixtures / "vocabularies").mkdir(parents=True, exist_ok=True)
    (fixtures / "embeddings").mkdir(parents=True, exist_ok=True)
    (fixtures / "asr").mkdir(parents=True, exist_ok=True)
    (fixtures / "training").mkdir(parents=True, exist_ok=True)

    assert len(COCO_CLASSES) == 80, len(COCO_CLASSES)
    assert len(ILSVRC_CLASSES) == 200, len(ILSVRC_CLASSES)

    write_vocab_file(fixtures / "vocabularies" / "coco80.json", "coco80", COCO_CLASSES)
    write_vocab_file(fixtures / "vocabularies" / "ilsvrc200.json", "ilsvrc200",
                     ILSVRC_CLASSES)
    vocabs = {
        "coco80": build_vocab("coco80", COCO_CLASSES),
        "ilsvrc200": build_vocab("ilsvrc200", ILSVRC_CLASSES),
    }

    vectors = build_embeddings(vocabs)
    verify_embeddings(vectors, vocabs)
    write_embeddings(fixtures / "embeddings" / "mini_vectors.txt", vectors)

    corpus = build_transcription_corpus(vocabs["coco80"])
    (fixtures / "asr" / "training_transcripts.json").write_text(
        json.dumps(corpus, indent=1) + "\n", encoding="utf-8")

    usage_coco = build_usage_fixture(vocabs["coco80"], ["tree"], 200, 2)
    (fixtures / "training" / "usage_coco.json").write_text(
        json.dumps(usage_coco, indent=1) + "\n", encoding="utf-8")
    usage_ilsvrc = build_usage_fixture(
        vocabs["ilsvrc200"],
        ["fork", "rat", "tray", "kettle", "oven", "stool", "radiator"],
        200, 3)
    (fixtures / "training" / "usage_ilsvrc.json").write_text(
        json.dumps(usage_ilsvrc, indent=1) + "\n", encoding="utf-8")

    print("fixtures written to", fixtures)


if __name__ == "__main__":
    main()
