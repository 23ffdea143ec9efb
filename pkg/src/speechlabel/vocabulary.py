"""Closed class vocabulary: name normalization, lookup and phrase-hint export.

All equality tests in the system go through :func:`normalize`. Normalization
lowercases, collapses internal whitespace and strips punctuation from token
edges only, so names like "ping-pong ball" keep their internal hyphen.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError

_EDGE_PUNCT = string.punctuation


def normalize(name: str) -> str:
    """Canonical form of a class name or transcription.

    Lowercase, whitespace-collapsed, leading/trailing punctuation stripped
    per token. Idempotent. Raises ValidationError if nothing is left.
    """
    tokens = []
    for token in name.lower().split():
        token = token.strip(_EDGE_PUNCT)
        if token:
            tokens.append(token)
    if not tokens:
        raise ValidationError(f"name is empty after normalization: {name!r}")
    return " ".join(tokens)


@dataclass(frozen=True)
class ClassName:
    raw: str
    normalized: str
    tokens: tuple[str, ...]

    @classmethod
    def of(cls, raw: str) -> "ClassName":
        norm = normalize(raw)
        return cls(raw=raw, normalized=norm, tokens=tuple(norm.split()))

    def __str__(self) -> str:
        return self.normalized


class Vocabulary:
    """Ordered, immutable set of class names with unique normalized forms."""

    def __init__(self, name: str, classes: list[ClassName],
                 symbol_uris: dict[str, str] | None = None):
        if not classes:
            raise ValidationError("vocabulary must contain at least one class")
        self.name = name
        self.classes: tuple[ClassName, ...] = tuple(classes)
        self.symbol_uris = dict(symbol_uris or {})
        self._by_normalized: dict[str, ClassName] = {}
        for c in self.classes:
            if c.normalized in self._by_normalized:
                raise ValidationError(
                    f"duplicate class name after normalization: {c.normalized!r}")
            self._by_normalized[c.normalized] = c

    def __len__(self) -> int:
        return len(self.classes)

    def __iter__(self):
        return iter(self.classes)

    def __contains__(self, name: str) -> bool:
        return self.contains(name) is not None

    def contains(self, name: str) -> ClassName | None:
        """The class whose normalized form equals normalize(name), if any."""
        try:
            norm = normalize(name)
        except ValidationError:
            return None
        return self._by_normalized.get(norm)

    def lookup_normalized(self, normalized: str) -> ClassName | None:
        return self._by_normalized.get(normalized)

    def phrase_hints(self) -> list[str]:
        """All normalized class names, in vocabulary order, for the ASR."""
        return [c.normalized for c in self.classes]


def load_vocabulary(path: str | Path) -> Vocabulary:
    """Load a vocabulary JSON file: {"name": ..., "classes": [{"name", "symbol_uri"?}]}."""
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    if not isinstance(doc, dict) or "classes" not in doc:
        raise ValidationError(f"{path}: not a vocabulary document")
    name = doc.get("name") or Path(path).stem
    classes = []
    symbols: dict[str, str] = {}
    for entry in doc["classes"]:
        cls = ClassName.of(entry["name"])
        classes.append(cls)
        if entry.get("symbol_uri"):
            symbols[cls.normalized] = entry["symbol_uri"]
    return Vocabulary(name=name, classes=classes, symbol_uris=symbols)


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    doc = {
        "name": vocab.name,
        "classes": [
            {"name": c.raw, **({"symbol_uri": vocab.symbol_uris[c.normalized]}
                               if c.normalized in vocab.symbol_uris else {})}
            for c in vocab.classes
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
