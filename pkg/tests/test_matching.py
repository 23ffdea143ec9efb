import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from speechlabel.asr import SegmentRef, TranscriptionAlternative, TranscriptionResult
from speechlabel.matching import (
    EmbeddingTable,
    embed_phrase,
    class_vectors,
    resolve,
    resolve_session,
)
from speechlabel.session import Click
from speechlabel.vocabulary import ClassName, Vocabulary


def result_of(*texts):
    alts = tuple(TranscriptionAlternative(text=t, rank=i + 1)
                 for i, t in enumerate(texts))
    return TranscriptionResult(segment_ref=SegmentRef("s", 0), alternatives=alts)


def vocab_of(*names):
    return Vocabulary(name="v", classes=[ClassName.of(n) for n in names])


def table_of(entries, dim):
    return EmbeddingTable(dim, {k: np.asarray(v, dtype=np.float64)
                                for k, v in entries.items()})


EMPTY_TABLE = table_of({}, 4)


# --- embed_phrase ---------------------------------------------------------

def test_embed_single_token():
    table = table_of({"dog": [1.0, 0.0, 0.0, 0.0]}, 4)
    np.testing.assert_array_equal(embed_phrase("dog", table), [1, 0, 0, 0])


def test_embed_multiword_mean():
    table = table_of({"traffic": [1, 0, 0, 0], "light": [0, 1, 0, 0]}, 4)
    np.testing.assert_allclose(embed_phrase("traffic light", table),
                               [0.5, 0.5, 0, 0])


def test_embed_oov_absent():
    assert embed_phrase("qzxv", EMPTY_TABLE) is None


def test_embed_skips_oov_tokens():
    table = table_of({"light": [0, 1, 0, 0]}, 4)
    np.testing.assert_array_equal(embed_phrase("qzxv light", table), [0, 1, 0, 0])


def test_zero_vector_is_not_embeddable():
    table = table_of({"nil": [0, 0, 0, 0]}, 4)
    assert embed_phrase("nil", table) is None


# --- resolve: exact rule --------------------------------------------------

def test_exact_match_best_rank_wins():
    resolution = resolve(result_of("dock", "dog"), vocab_of("dog", "cat"),
                         EMPTY_TABLE)
    assert resolution.method == "exact"
    assert resolution.class_name.normalized == "dog"
    assert resolution.matched_alternative_rank == 2
    assert resolution.similarity is None


def test_exact_match_rank_one_preferred():
    resolution = resolve(result_of("cat", "dog"), vocab_of("dog", "cat"),
                         EMPTY_TABLE)
    assert resolution.class_name.normalized == "cat"
    assert resolution.matched_alternative_rank == 1


def test_empty_alternatives_unresolved():
    assert resolve(result_of(), vocab_of("dog"), EMPTY_TABLE) is None


def test_unembeddable_everything_unresolved():
    assert resolve(result_of("zork"), vocab_of("dog"), EMPTY_TABLE) is None


# --- resolve: embedding fallback -------------------------------------------

def test_fallback_picks_most_similar():
    table = table_of({
        "dog": [1, 0, 0, 0], "cat": [0, 1, 0, 0], "dock": [0.9, 0.1, 0, 0],
    }, 4)
    resolution = resolve(result_of("dock"), vocab_of("dog", "cat"), table)
    assert resolution.method == "embedding"
    assert resolution.class_name.normalized == "dog"
    assert resolution.similarity == pytest.approx(
        0.9 / np.hypot(0.9, 0.1), abs=1e-12)


def test_fallback_similarity_floor():
    table = table_of({"dog": [1, 0, 0, 0], "far": [-1, 0, 0, 0]}, 4)
    vocab = vocab_of("dog")
    assert resolve(result_of("far"), vocab, table).class_name.normalized == "dog"
    assert resolve(result_of("far"), vocab, table, min_similarity=0.5) is None


def test_oven_maps_to_stove_on_fixture(ilsvrc_vocab, embedding_table):
    """Brute-force cosine argmax agrees and lands on the designed class."""
    resolution = resolve(result_of("oven"), ilsvrc_vocab, embedding_table)
    assert resolution.method == "embedding"
    assert resolution.class_name.normalized == "stove"

    oven = embed_phrase("oven", embedding_table)
    sims = {}
    for cls in ilsvrc_vocab.classes:
        vec = embed_phrase(cls.normalized, embedding_table)
        if vec is not None:
            sims[cls.normalized] = float(
                np.dot(oven, vec) / (np.linalg.norm(oven) * np.linalg.norm(vec)))
    assert max(sims, key=sims.get) == "stove"
    assert resolution.similarity == pytest.approx(sims["stove"], abs=1e-12)


def test_traffic_signal_maps_to_traffic_light(coco_vocab, embedding_table):
    resolution = resolve(result_of("traffic signal"), coco_vocab, embedding_table)
    assert resolution.class_name.normalized == "traffic light"


def test_scale_invariance(ilsvrc_vocab, embedding_table):
    scaled = EmbeddingTable(embedding_table.dimension, {
        tok: 7.25 * embedding_table.vector(tok)
        for tok in ["oven", "stove", "traffic", "light", "signal"]
        if embedding_table.vector(tok) is not None})
    base_table = table_of(
        {tok: embedding_table.vector(tok)
         for tok in ["oven", "stove", "traffic", "light", "signal"]},
        embedding_table.dimension)
    vocab = vocab_of("stove", "traffic light")
    for text in ["oven", "traffic signal"]:
        a = resolve(result_of(text), vocab, base_table)
        b = resolve(result_of(text), vocab, scaled)
        assert a.class_name == b.class_name


# --- property tests --------------------------------------------------------

WORDS = ["dog", "cat", "bus", "cow", "hen", "fox", "owl", "ant", "bee",
         "pig", "ram", "bat", "eel", "jay", "koi", "yak", "doe", "kit",
         "pup", "cub", "sow", "ewe", "tom", "nag", "kid", "fry", "gnu",
         "elk", "asp", "boa"]


@st.composite
def vocab_and_alternatives(draw):
    size = draw(st.integers(min_value=5, max_value=30))
    names = draw(st.permutations(WORDS))[:size]
    vocab = vocab_of(*names)
    n_alts = draw(st.integers(min_value=0, max_value=5))
    texts = draw(st.lists(
        st.sampled_from(WORDS + ["zorp", "blick", "trux"]),
        min_size=n_alts, max_size=n_alts, unique=True))
    return vocab, texts


@given(vocab_and_alternatives())
@settings(max_examples=200, deadline=None)
def test_exact_rule_property(case):
    vocab, texts = case
    resolution = resolve(result_of(*texts), vocab, EMPTY_TABLE)
    matching = [i + 1 for i, t in enumerate(texts) if vocab.contains(t)]
    if matching:
        assert resolution is not None
        assert resolution.method == "exact"
        assert resolution.matched_alternative_rank == matching[0]
        assert resolution.class_name.normalized == texts[matching[0] - 1]
    if resolution is not None:
        # closed world: output is always a vocabulary member
        assert vocab.lookup_normalized(resolution.class_name.normalized) is not None


@st.composite
def random_table_case(draw):
    dim = 6
    tokens = WORDS[:10]
    values = draw(st.lists(
        st.lists(st.integers(min_value=-5, max_value=5), min_size=dim, max_size=dim),
        min_size=10, max_size=10))
    table = {t: v for t, v in zip(tokens, values)}
    vocab_names = draw(st.permutations(tokens))[:draw(st.integers(3, 8))]
    alt_texts = draw(st.lists(st.sampled_from(tokens), min_size=1, max_size=4,
                              unique=True))
    # force the fallback path: alternatives must not be vocabulary members
    alt_texts = [t for t in alt_texts if t not in vocab_names]
    return table, list(vocab_names), alt_texts


@given(random_table_case())
@settings(max_examples=200, deadline=None)
def test_fallback_matches_brute_force(case):
    entries, vocab_names, alt_texts = case
    if not alt_texts:
        return
    table = table_of(entries, 6)
    vocab = vocab_of(*vocab_names)
    resolution = resolve(result_of(*alt_texts), vocab, table)

    # brute force over all (alternative, class) pairs with identical tie-breaks
    best = None
    for rank, text in enumerate(alt_texts, start=1):
        tv = entries[text]
        tn = np.linalg.norm(tv)
        if tn == 0:
            continue
        for pos, cls in enumerate(vocab_names):
            cv = entries[cls]
            cn = np.linalg.norm(cv)
            if cn == 0:
                continue
            sim = float(np.dot(tv, cv) / (tn * cn))
            key = (-sim, rank, pos)
            if best is None or key < best[0]:
                best = (key, cls, rank, sim)
    if best is None:
        assert resolution is None
    else:
        assert resolution is not None
        assert resolution.method == "embedding"
        assert resolution.class_name.normalized == best[1]
        assert resolution.matched_alternative_rank == best[2]
        assert resolution.similarity == pytest.approx(best[3], abs=1e-12)


# --- resolve_session --------------------------------------------------------

def click_at(i, t):
    return Click(t=t, x=10 * i, y=5, index=i)


def session_results(vocab, table, texts_per_click):
    clicks = [click_at(i, 1.0 + i) for i in range(len(texts_per_click))]
    segments = [None] * len(clicks)
    results = [result_of(*texts) if texts else result_of()
               for texts in texts_per_click]
    return resolve_session(clicks, segments, results, vocab, table)


def test_resolve_session_two_labels(coco_vocab, embedding_table):
    annotations = session_results(coco_vocab, embedding_table, [["dog"], ["cat"]])
    assert [a.resolution.class_name.normalized for a in annotations] == ["dog", "cat"]
    assert all(a.is_label_representative for a in annotations)


def test_resolve_session_duplicate_flag(coco_vocab, embedding_table):
    annotations = session_results(coco_vocab, embedding_table, [["dog"], ["dog"]])
    assert annotations[0].is_label_representative
    assert "duplicate" in annotations[1].flags
    labels = {a.resolution.class_name.normalized
              for a in annotations if a.is_label_representative}
    assert labels == {"dog"}


def test_resolve_session_silence_unlabeled(coco_vocab, embedding_table):
    annotations = session_results(coco_vocab, embedding_table, [["dog"], []])
    assert "unlabeled" in annotations[1].flags
    assert annotations[1].resolution is None
