"""Experiment configuration: one JSON document, strictly validated."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..core import Family
from ..errors import ConfigError, DataError
from ..learn import TrainConfig

SCHEMA_VERSION = 1


class DatasetConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    path: str
    limit_train: int | None = Field(None, ge=1)
    limit_test: int | None = Field(None, ge=1)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    version: Literal[1] = SCHEMA_VERSION
    dataset: DatasetConfig
    family: str = "binary"
    paradigm: Literal["bundle", "sgd", "perceptron"] = "sgd"
    dim: int = Field(1000, ge=1)
    basis: Literal["rff", "random"] = "rff"
    sigma: float | None = Field(None, gt=0)
    seed: int = Field(0, ge=0, lt=2**64)
    train: TrainConfig = TrainConfig()
    threads: int | None = Field(None, ge=1)
    output_dir: str = "runs"

    @field_validator("family")
    @classmethod
    def _family(cls, v: str) -> str:
        Family.parse(v)
        return v

    def train_config(self) -> TrainConfig:
        """Training hyperparameters with the run seed applied."""
        return self.train.model_copy(update={"seed": self.seed})


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def parse_config(doc: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {_describe(exc)}") from None


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON (line {exc.lineno}, column {exc.colno})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return parse_config(doc)
