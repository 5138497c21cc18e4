"""Run configuration: a TOML file whose keys the command-line flags mirror.

::

    [paths]
    kb = "kb.jsonl"          # normalized entities
    index = "index.json"
    dict = "dict.json"
    model = "model.json"
    profiles = "profiles.tsv"
    mentions = "mentions.jsonl"
    out = "report.json"

    [caps]
    dict_k = 100
    profile_k = 100
    hybrid_k = 50

    [weights]
    surface = 1.0
    title = 1.0
    desc = 1.0
    exact = 2.0

    [gbt]
    n_rounds = 100
    max_depth = 3
    learning_rate = 0.1
    min_samples_leaf = 2

    [link]
    threshold = 0.5
    profile_source = "oracle"   # or "frequency"
    jobs = 1

    [eval]
    strategies = ["simple", "dictionary", "profile-title-only", "profile-full", "hybrid"]
    recall_ks = [1, 10, 50, 100]

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import tomli

STRATEGIES = ("simple", "dictionary", "profile-title-only", "profile-full", "hybrid")
PROFILE_SOURCES = ("oracle", "frequency")


class ConfigError(ValueError):
    pass


@dataclass
class Paths:
    kb: str | None = None
    dump: str | None = None
    anchors: str | None = None
    index: str | None = None
    dict: str | None = None
    model: str | None = None
    profiles: str | None = None
    mentions: str | None = None
    out: str | None = None
    admin_ids: str | None = None
    report: str | None = None
    candidates: str | None = None
    scores: str | None = None


@dataclass
class Caps:
    dict_k: int = 100
    profile_k: int = 100
    hybrid_k: int = 50


@dataclass
class Weights:
    surface: float = 1.0
    title: float = 1.0
    desc: float = 1.0
    exact: float = 2.0


@dataclass
class GbtSection:
    n_rounds: int = 100
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 2


@dataclass
class LinkSection:
    threshold: float = 0.5
    profile_source: str = "oracle"
    jobs: int = 1


@dataclass
class EvalSection:
    strategies: list[str] = field(default_factory=lambda: list(STRATEGIES))
    recall_ks: list[int] = field(default_factory=lambda: [1, 10, 50, 100])


@dataclass
class RunConfig:
    paths: Paths = field(default_factory=Paths)
    caps: Caps = field(default_factory=Caps)
    weights: Weights = field(default_factory=Weights)
    gbt: GbtSection = field(default_factory=GbtSection)
    link: LinkSection = field(default_factory=LinkSection)
    eval: EvalSection = field(default_factory=EvalSection)

    def to_json(self) -> dict:
        return asdict(self)

    def validate(self) -> "RunConfig":
        for name in ("dict_k", "profile_k", "hybrid_k"):
            if getattr(self.caps, name) < 1:
                raise ConfigError(f"caps.{name} must be >= 1")
        for name in ("surface", "title", "desc", "exact"):
            if getattr(self.weights, name) < 0:
                raise ConfigError(f"weights.{name} must be >= 0")
        if self.gbt.n_rounds < 0:
            raise ConfigError("gbt.n_rounds must be >= 0")
        if self.gbt.max_depth < 1:
            raise ConfigError("gbt.max_depth must be >= 1")
        if self.gbt.min_samples_leaf < 1:
            raise ConfigError("gbt.min_samples_leaf must be >= 1")
        if not self.gbt.learning_rate > 0:
            raise ConfigError("gbt.learning_rate must be > 0")
        if self.link.profile_source not in PROFILE_SOURCES:
            raise ConfigError(f"link.profile_source must be one of {PROFILE_SOURCES}")
        if self.link.jobs < 1:
            raise ConfigError("link.jobs must be >= 1")
        bad = [s for s in self.eval.strategies if s not in STRATEGIES]
        if bad or not self.eval.strategies:
            raise ConfigError(f"eval.strategies: unknown or empty {bad}; choose from {STRATEGIES}")
        if not self.eval.recall_ks or any(k < 1 for k in self.eval.recall_ks):
            raise ConfigError("eval.recall_ks must be a non-empty list of integers >= 1")
        return self

    def require(self, *names: str) -> None:
        """Every named path must be set and exist."""
        for name in names:
            value = getattr(self.paths, name)
            if value is None:
                raise ConfigError(f"paths.{name} is required for this command")
            if not Path(value).exists():
                raise FileNotFoundError(f"paths.{name}: {value} does not exist")


SECTIONS = {f.name: f.type for f in fields(RunConfig)}


def _coerce(section: str, key: str, value, default):
    where = f"{section}.{key}"
    if isinstance(default, bool) or default is None:
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where} must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where} must be a string")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{where} must be a list")
        if key == "recall_ks" and not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise ConfigError(f"{where} must be a list of integers")
        if key == "strategies" and not all(isinstance(v, str) for v in value):
            raise ConfigError(f"{where} must be a list of strings")
        return list(value)
    return value


def from_dict(data: dict, base_dir: Path | None = None) -> RunConfig:
    cfg = RunConfig()
    for section, body in data.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(body, dict):
            raise ConfigError(f"config section {section!r} must be a table")
        target = getattr(cfg, section)
        known = {f.name for f in fields(target)}
        for key, value in body.items():
            if key not in known:
                raise ConfigError(f"unknown config key {section}.{key}")
            value = _coerce(section, key, value, getattr(target, key))
            if section == "paths" and value is not None and base_dir is not None:
                value = str(base_dir / value)
            setattr(target, key, value)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as f:
            data = tomli.load(f)
    except FileNotFoundError:
        raise FileNotFoundError(f"config file {path} does not exist") from None
    except tomli.TOMLDecodeError as e:
        raise ConfigError(f"{path}: invalid TOML: {e}") from None
    return from_dict(data, path.parent)
