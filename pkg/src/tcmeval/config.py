"""Run configuration: YAML loading, defaults, and validation.

Every empirical constant (chunk size, retrieval depth, preference and
rejection thresholds, rating weights) lives here as a config default rather
than a literal buried in code, so users can sweep them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .dataset_tools import (
    KTO_FALSE_THRESHOLD,
    KTO_TRUE_THRESHOLD,
    REJECTION_THRESHOLD,
)
from .errors import ConfigError
from .human_eval import DimensionWeights
from .judges import JudgeConfig


@dataclass(frozen=True)
class Thresholds:
    kto_true: float = KTO_TRUE_THRESHOLD
    kto_false: float = KTO_FALSE_THRESHOLD
    rejection: float = REJECTION_THRESHOLD


@dataclass
class RunConfig:
    data_dir: str = "data"
    lexicon: str = ""  # empty -> packaged default lexicon
    judges: list[JudgeConfig] = field(default_factory=list)
    weights: DimensionWeights = field(default_factory=DimensionWeights)
    thresholds: Thresholds = field(default_factory=Thresholds)
    chunk_max_tokens: int = 512
    top_k: int = 3
    host: str = "127.0.0.1"
    port: int = 8321
    api_token_env: str = ""
    ui_dir: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "data_dir": self.data_dir,
            "lexicon": self.lexicon,
            "judges": [
                {
                    "name": j.name,
                    "endpoint": j.endpoint,
                    "auth_env": j.auth_env,
                    "schema_mode": j.schema_mode,
                    "max_retries": j.max_retries,
                    "max_in_flight": j.max_in_flight,
                    "timeout": j.timeout,
                    "model": j.model,
                    "temperature": j.temperature,
                }
                for j in self.judges
            ],
            "weights": self.weights.as_dict(),
            "thresholds": {
                "kto_true": self.thresholds.kto_true,
                "kto_false": self.thresholds.kto_false,
                "rejection": self.thresholds.rejection,
            },
            "chunk_max_tokens": self.chunk_max_tokens,
            "top_k": self.top_k,
            "host": self.host,
            "port": self.port,
            "api_token_env": self.api_token_env,
            "ui_dir": self.ui_dir,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            yaml.safe_dump(self.to_dict(), allow_unicode=True, sort_keys=True),
            encoding="utf-8",
        )


def _build(doc: dict[str, Any]) -> RunConfig:
    config = RunConfig()

    judges = []
    for i, block in enumerate(doc.get("judges", []) or []):
        if not isinstance(block, dict) or "name" not in block or "endpoint" not in block:
            raise ConfigError(f"judges[{i}]: each judge needs a name and an endpoint")
        try:
            judges.append(JudgeConfig(
                name=str(block["name"]),
                endpoint=str(block["endpoint"]),
                auth_env=str(block.get("auth_env", "")),
                schema_mode=str(block.get("schema_mode", "prompt-embedded")),
                max_retries=int(block.get("max_retries", 2)),
                max_in_flight=int(block.get("max_in_flight", 4)),
                timeout=float(block.get("timeout", 60.0)),
                model=str(block.get("model", "")),
                temperature=float(block.get("temperature", 0.0)),
            ))
        except Exception as exc:
            raise ConfigError(f"judges[{i}]: {exc}") from exc
    names = [j.name for j in judges]
    if len(set(names)) != len(names):
        raise ConfigError("judges: names must be unique")
    config.judges = judges

    weights_doc = doc.get("weights") or {}
    try:
        config.weights = DimensionWeights(**{
            k: float(v) for k, v in weights_doc.items()
        }) if weights_doc else DimensionWeights()
    except TypeError as exc:
        raise ConfigError(f"weights: {exc}") from exc
    except Exception as exc:
        raise ConfigError(f"weights: {exc}") from exc

    thresholds_doc = doc.get("thresholds") or {}
    thresholds = Thresholds(
        kto_true=float(thresholds_doc.get("kto_true", KTO_TRUE_THRESHOLD)),
        kto_false=float(thresholds_doc.get("kto_false", KTO_FALSE_THRESHOLD)),
        rejection=float(thresholds_doc.get("rejection", REJECTION_THRESHOLD)),
    )
    if not 0.0 <= thresholds.kto_false < thresholds.kto_true <= 1.0:
        raise ConfigError("thresholds: kto_true must exceed kto_false, both in [0, 1]")
    if not 0.0 <= thresholds.rejection <= 10.0:
        raise ConfigError("thresholds: rejection must be in [0, 10]")
    config.thresholds = thresholds

    config.chunk_max_tokens = int(doc.get("chunk_max_tokens", 512))
    if config.chunk_max_tokens < 1:
        raise ConfigError("chunk_max_tokens: must be >= 1")
    config.top_k = int(doc.get("top_k", 3))
    if config.top_k < 1:
        raise ConfigError("top_k: must be >= 1")

    config.data_dir = str(doc.get("data_dir", config.data_dir))
    config.lexicon = str(doc.get("lexicon", "") or "")
    config.host = str(doc.get("host", config.host))
    config.port = int(doc.get("port", config.port))
    config.api_token_env = str(doc.get("api_token_env", ""))
    config.ui_dir = str(doc.get("ui_dir", ""))
    return config


def load_config(path: str | Path | None = None) -> RunConfig:
    """Load a YAML config file; absent fields fall back to the defaults.

    With no path, the full default configuration comes back. Invariant
    violations raise ConfigError naming the field.
    """
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = yaml.safe_load(p.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    return _build(doc)
