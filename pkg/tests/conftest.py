from __future__ import annotations

from pathlib import Path

import pytest

from speechlabel.matching import EmbeddingTable
from speechlabel.vocabulary import Vocabulary, load_vocabulary

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def coco_vocab() -> Vocabulary:
    return load_vocabulary(FIXTURES / "vocabularies" / "coco80.json")


@pytest.fixture(scope="session")
def ilsvrc_vocab() -> Vocabulary:
    return load_vocabulary(FIXTURES / "vocabularies" / "ilsvrc200.json")


@pytest.fixture(scope="session")
def embedding_table() -> EmbeddingTable:
    return EmbeddingTable.load(FIXTURES / "embeddings" / "mini_vectors.txt")
