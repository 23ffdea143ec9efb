"""Service/CLI configuration: JSON file, environment overrides, validation."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError

ENV_PREFIX = "SPEECHLABEL_"


@dataclass
class ServiceConfig:
    data_dir: Path = Path("data")
    vocabularies: list[Path] = field(default_factory=list)
    embeddings: Path | None = None
    default_vocabulary: str | None = None

    asr_mode: str = "mock"  # mock | remote
    asr_fixture: Path | None = None
    remote_endpoint: str | None = None
    remote_auth_token: str | None = None
    remote_timeout_s: float = 30.0
    asr_attempts: int = 3

    ground_truth: Path | None = None
    training_ground_truth: Path | None = None
    images_per_round: int = 80
    min_recall: float = 0.80
    min_precision: float = 0.85

    delta_s: float = 0.5
    use_phrase_hints: bool = True
    language_tag: str = "en-IN"
    max_alternatives: int = 3
    min_similarity: float = -1.0
    parallelism: int = 1

    auth_token: str | None = None
    listen_host: str = "127.0.0.1"
    listen_port: int = 8077

    def validate(self) -> None:
        if not self.vocabularies:
            raise ConfigError("at least one vocabulary file is required")
        for path in [*self.vocabularies, self.embeddings]:
            if path is None:
                raise ConfigError("embeddings file is required")
            if not Path(path).is_file():
                raise ConfigError(f"missing file: {path}")
        if self.asr_mode not in ("mock", "remote"):
            raise ConfigError(f"unknown asr mode {self.asr_mode!r}")
        if self.asr_mode == "mock":
            if self.asr_fixture is None or not Path(self.asr_fixture).is_file():
                raise ConfigError("mock ASR requires an existing asr_fixture file")
        elif not self.remote_endpoint:
            raise ConfigError("remote ASR requires remote_endpoint")
        for name in ("ground_truth", "training_ground_truth"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"missing file: {path}")


_PATH_FIELDS = {"data_dir", "embeddings", "asr_fixture", "ground_truth",
                "training_ground_truth"}
_ENV_CONVERTERS = {
    "listen_port": int,
    "images_per_round": int,
    "max_alternatives": int,
    "parallelism": int,
    "asr_attempts": int,
    "min_recall": float,
    "min_precision": float,
    "delta_s": float,
    "min_similarity": float,
    "remote_timeout_s": float,
    "use_phrase_hints": lambda s: s.lower() in ("1", "true", "yes"),
}


def load_config(path: str | Path | None = None, env: dict | None = None,
                **overrides) -> ServiceConfig:
    """Build a ServiceConfig from file, then environment, then overrides."""
    env = os.environ if env is None else env
    values: dict = {}
    if path is not None:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        values.update(doc)

    known = {f.name for f in fields(ServiceConfig)}
    for key in list(values):
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")

    for name in known:
        env_key = ENV_PREFIX + name.upper()
        if env_key in env:
            raw = env[env_key]
            if name == "vocabularies":
                values[name] = raw.split(os.pathsep)
            else:
                values[name] = _ENV_CONVERTERS.get(name, str)(raw)
    values.update({k: v for k, v in overrides.items() if v is not None})

    for name in _PATH_FIELDS:
        if values.get(name) is not None:
            values[name] = Path(values[name])
    if "vocabularies" in values:
        values["vocabularies"] = [Path(p) for p in values["vocabularies"]]

    return ServiceConfig(**values)
