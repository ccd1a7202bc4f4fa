"""End-to-end runs: basis, encoding, training, evaluation and a JSON record."""

from __future__ import annotations

import hashlib
import json
import subprocess
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .. import learn
from ..core import Family
from ..encoding import Encoder, build_basis, quantize_features
from ..errors import ConfigError
from ..learn import Model
from ..rng import SeededRng
from .config import ExperimentConfig, load_config
from .data import Dataset, load_directory

BASIS_STREAM = (10,)
BUNDLE_STREAM = (11,)


def build_id() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=here, capture_output=True, text=True, timeout=10, check=True,
        )
        return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        try:
            return "v" + metadata.version("artifact")
        except metadata.PackageNotFoundError:
            return "unknown"


def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class RunRecord:
    config: dict
    build: str
    seed: int
    dataset: dict
    epochs: list[dict] = field(default_factory=list)
    accuracy: float | None = None
    times: dict = field(default_factory=dict)
    hashes: dict = field(default_factory=dict)
    files: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def train_model(
    cfg: ExperimentConfig,
    family: Family,
    train_set,
    train_labels: np.ndarray,
    n_classes: int,
    on_epoch=None,
) -> Model:
    tcfg = cfg.train_config()
    if cfg.paradigm == "bundle":
        return learn.bundle_train(train_set, train_labels, n_classes, SeededRng(cfg.seed, BUNDLE_STREAM), threads=cfg.threads)
    if cfg.paradigm == "perceptron":
        if not family.binary:
            raise ConfigError("paradigm 'perceptron' needs family 'binary'")
        return learn.perceptron_train(train_set, train_labels, n_classes, tcfg, on_epoch=on_epoch)
    if family.binary:
        return learn.sgd_train_binary(train_set, train_labels, n_classes, tcfg, on_epoch=on_epoch)
    return learn.sgd_train_cyclic(train_set, train_labels, n_classes, tcfg, on_epoch=on_epoch)


def _dataset_meta(train: Dataset, test: Dataset) -> dict:
    return {
        "name": train.name,
        "n_train": int(len(train.labels)),
        "n_test": int(len(test.labels)),
        "n_features": train.n_features,
        "n_classes": train.n_classes,
        "splits": "standard train/test files of the dataset",
        "label_map": {str(k): v for k, v in (train.label_map or {}).items()},
        "minmax_scaled": train.scaling is not None,
        "quantization": "8-bit round-half-up of features in [-1, 1]",
        **{k: v for k, v in train.meta.items() if isinstance(v, (str, int, float))},
    }


def run_experiment(config: ExperimentConfig | str | Path, output_dir: str | Path | None = None) -> RunRecord:
    cfg = config if isinstance(config, ExperimentConfig) else load_config(config)
    out = Path(output_dir or cfg.output_dir)
    family = Family.parse(cfg.family)
    times: dict[str, float] = {}
    t0 = time.perf_counter()

    train = load_directory(cfg.dataset.path, "train").head(cfg.dataset.limit_train)
    test = load_directory(cfg.dataset.path, "test", reference=train).head(cfg.dataset.limit_test)
    times["load"] = time.perf_counter() - t0

    t = time.perf_counter()
    basis = build_basis(family, cfg.dim, cfg.basis, cfg.sigma, train.n_features, SeededRng(cfg.seed, BASIS_STREAM), cfg.threads)
    times["basis"] = time.perf_counter() - t

    t = time.perf_counter()
    enc = Encoder(basis, train.n_features)
    a = enc.encode_batch(quantize_features(train.features), cfg.threads)
    b = enc.encode_batch(quantize_features(test.features), cfg.threads)
    times["encode"] = time.perf_counter() - t

    epochs: list[dict] = []

    def on_epoch(epoch: int, model: Model):
        epochs.append({"epoch": epoch + 1, "test_accuracy": learn.evaluate(b, test.labels, model)})

    t = time.perf_counter()
    model = train_model(cfg, family, a, train.labels, train.n_classes, on_epoch)
    times["train"] = time.perf_counter() - t

    t = time.perf_counter()
    acc = learn.evaluate(b, test.labels, model)
    times["eval"] = time.perf_counter() - t
    times["total"] = time.perf_counter() - t0

    out.mkdir(parents=True, exist_ok=True)
    model_bytes = learn.model_to_bytes(model)
    basis_bytes = basis.to_bytes()
    (out / "model.vsa").write_bytes(model_bytes)
    (out / "basis.cb").write_bytes(basis_bytes)
    record = RunRecord(
        config=cfg.model_dump(mode="json"),
        build=build_id(),
        seed=cfg.seed,
        dataset=_dataset_meta(train, test),
        epochs=epochs,
        accuracy=acc,
        times=times,
        hashes={"model_sha256": sha256(model_bytes), "basis_sha256": sha256(basis_bytes)},
        files={"model": str(out / "model.vsa"), "basis": str(out / "basis.cb")},
    )
    (out / "run.json").write_text(record.to_json())
    return record
