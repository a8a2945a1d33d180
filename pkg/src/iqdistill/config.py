"""Run configuration files.

A config is a small YAML document with up to three sections:

    train:                # TrainConfig fields
      epochs: 100
      batch_size: 64
      lr0_teacher: 5.0e-6
      lr0_student: 1.0e-4
      schedule: cosine    # cosine | fixed
      lambda_fixed: null  # required iff schedule == fixed
      seed: 0
      repeat_count: 5
    arch:                 # ArchConfig fields
      embed_dim: 16
      teacher_hidden: [48]
      student_hidden: [12]
      activation: tanh
      tau: 0.07
    paths:                # optional default file locations
      data: ...
      bank: ...
      teacher: ...
      student: ...
      out: ...

Every key is optional and defaults to the dataclass default; unknown keys
are rejected. When no path is given on the command line, the
IQDISTILL_CONFIG environment variable names the config file.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

import yaml

from .errors import ConfigError
from .pipeline import ArchConfig, TrainConfig

ENV_VAR = "IQDISTILL_CONFIG"
PATH_KEYS = ("data", "bank", "teacher", "student", "out")


@dataclass(frozen=True)
class EngineConfig:
    train: TrainConfig
    arch: ArchConfig
    paths: tuple[tuple[str, str], ...] = ()

    def path(self, key: str) -> str | None:
        return dict(self.paths).get(key)


def _check_keys(section: str, given, allowed) -> None:
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown {section} keys {unknown}; allowed: {sorted(allowed)}")


def _build(cls, section: str, values: dict):
    fields = {f.name for f in dataclasses.fields(cls)}
    _check_keys(section, values, fields)
    coerced = {}
    for key, val in values.items():
        if isinstance(val, list):
            val = tuple(val)
        coerced[key] = val
    try:
        return cls(**coerced)
    except TypeError as exc:
        raise ConfigError(f"bad {section} section: {exc}") from exc


def parse_config(text: str) -> EngineConfig:
    doc = yaml.safe_load(text)
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config must be a mapping, got {type(doc).__name__}")
    _check_keys("config", doc, ("train", "arch", "paths"))
    for section in ("train", "arch", "paths"):
        if section in doc and not isinstance(doc[section], dict):
            raise ConfigError(f"{section} section must be a mapping")
    train = _build(TrainConfig, "train", doc.get("train", {}))
    arch = _build(ArchConfig, "arch", doc.get("arch", {}))
    paths_doc = doc.get("paths", {})
    _check_keys("paths", paths_doc, PATH_KEYS)
    paths = tuple(sorted((k, str(v)) for k, v in paths_doc.items()))
    return EngineConfig(train=train, arch=arch, paths=paths)


def load_config(path=None) -> EngineConfig:
    """Load a config file, falling back to $IQDISTILL_CONFIG, then to all
    defaults when neither names a file."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        return EngineConfig(train=TrainConfig(), arch=ArchConfig())
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text())
