"""Run configuration: a JSON file plus flag overrides (flags win)."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from .errors import ConfigurationError


@dataclass
class ToyConfig:
    total_steps: int = 50
    height: int = 64
    width: int = 64
    channels: int = 1
    gain: float = 0.35
    content_seed: int = 101
    style_seed: int = 202
    noise_seed: int = 7
    metrics_cutoff: float = 0.3


@dataclass
class AlignmentConfig:
    client: str = "mock"  # "mock" or "http"
    endpoint: str = ""
    model: str = ""
    api_key_env: str = "LORASWITCH_VLM_API_KEY"
    mock_responses: str = ""
    class_name: str = ""
    style_name: str = ""
    concept_token_limit: int = 30
    style_token_limit: int = 25
    content_trigger: str = ""
    style_trigger: str = ""
    content_images: List[str] = field(default_factory=list)
    style_image: str = ""
    retries: int = 2
    max_tokens: int = 512


@dataclass
class AblateConfig:
    ks: List[int] = field(default_factory=list)  # empty -> [total_steps // 5]
    policies: List[str] = field(default_factory=lambda: ["top", "bottom"])
    noise_seeds: List[int] = field(default_factory=lambda: [7])
    schedule_seeds: int = 5
    metrics: List[str] = field(
        default_factory=lambda: ["freq2", "freq1", "spatial2", "spatial1", "reverse-freq2"]
    )
    modes: List[str] = field(default_factory=lambda: ["dynamic", "fixed", "random"])
    workers: int = 4


@dataclass
class RunConfig:
    backend: str = "toy"  # "toy" or "trace"
    pair_id: str = "toy-default"
    metric: str = "freq2"
    mode: str = "dynamic"
    schedule_seed: int = 1234
    out_dir: str = "out"
    trace_path: str = ""
    toy: ToyConfig = field(default_factory=ToyConfig)
    alignment: AlignmentConfig = field(default_factory=AlignmentConfig)
    ablate: AblateConfig = field(default_factory=AblateConfig)

    def validate(self) -> None:
        if self.backend not in ("toy", "trace"):
            raise ConfigurationError(f"backend: must be 'toy' or 'trace', got {self.backend!r}")
        if self.backend == "trace" and not self.trace_path:
            raise ConfigurationError("trace_path: required when backend is 'trace'")
        if self.toy.total_steps < 2:
            raise ConfigurationError(f"toy.total_steps: must be >= 2, got {self.toy.total_steps}")
        if not (0.0 < self.toy.gain <= 1.0):
            raise ConfigurationError(f"toy.gain: must be in (0, 1], got {self.toy.gain}")
        if self.toy.channels not in (1, 3):
            raise ConfigurationError(f"toy.channels: must be 1 or 3, got {self.toy.channels}")
        if not (0.0 < self.toy.metrics_cutoff < 1.0):
            raise ConfigurationError(f"toy.metrics_cutoff: must be in (0, 1), got {self.toy.metrics_cutoff}")


def _build(cls, doc: dict, path: str):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in doc.items():
        if key not in fields:
            raise ConfigurationError(f"{path}{key}: unknown configuration key")
        if key in _NESTED and isinstance(value, dict):
            kwargs[key] = _build(_NESTED[key], value, f"{path}{key}.")
        elif isinstance(value, dict):
            raise ConfigurationError(f"{path}{key}: unexpected object")
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigurationError(f"{path.rstrip('.') or 'config'}: {exc}") from exc


_NESTED = {"toy": ToyConfig, "alignment": AlignmentConfig, "ablate": AblateConfig}


def load_config(path: Optional[str]) -> RunConfig:
    """Read the JSON config file; defaults apply for anything omitted."""
    if path is None:
        cfg = RunConfig()
    else:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigurationError(f"config {path} must be a JSON object")
        cfg = _build(RunConfig, doc, "")
    cfg.validate()
    return cfg
