"""Service/CLI configuration, shared by both front doors."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import ChunkPolicy
from .errors import ConfigError


@dataclass
class ServiceConfig:
    listen: str = "127.0.0.1:8080"
    backend_kind: str = "mock"  # mock | http
    base_url: str | None = None
    rules_path: str | None = None
    data_dir: str = "./data"
    default_k: int = 10
    routing_theta: float = 0.25
    chunk_policy: ChunkPolicy = field(default_factory=ChunkPolicy)
    lexicon_path: str | None = None
    gazetteer_path: str | None = None
    embedding_dim: int = 256
    backend_timeout: float = 30.0

    def validate_paths(self) -> None:
        """Every configured path must exist at startup."""
        checks = {
            "data_dir": self.data_dir,
            "rules_path": self.rules_path if self.backend_kind == "mock" else None,
            "lexicon_path": self.lexicon_path,
            "gazetteer_path": self.gazetteer_path,
        }
        for name, path in checks.items():
            if path is not None and not Path(path).exists():
                raise ConfigError(f"{name} does not exist: {path}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad config file {path}: {exc}") from None
        policy_raw = raw.pop("chunk_policy", {})
        policy = ChunkPolicy(
            max_tokens=policy_raw.get("max_tokens", 512),
            overlap_tokens=policy_raw.get("overlap_tokens", 64),
            min_tokens=policy_raw.get("min_tokens", 32),
        )
        known = {f for f in cls.__dataclass_fields__ if f != "chunk_policy"}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(chunk_policy=policy, **raw)


def load_config(explicit: str | None = None) -> ServiceConfig:
    """Resolve config from --config, LITPILOT_CONFIG, or defaults."""
    path = explicit or os.environ.get("LITPILOT_CONFIG")
    if path:
        config = ServiceConfig.from_file(path)
    else:
        config = ServiceConfig()
    return config
