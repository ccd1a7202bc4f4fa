"""Classifiers over encoded hypervectors.

Three ways to get class weights:

* single-pass bundling of each class's encodings into a prototype,
* gradient training of low-precision weights (sign weights via a
  straight-through estimator, or cyclic-group weights rounded back to the
  integer lattice after every step),
* a multiclass perceptron on the binary encodings (real weights).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from . import core
from .core import BINARY, CyclicSimilaritySpec, Family
from .encoding import EncodedSet
from .errors import ConfigError, DataError
from .rng import SeededRng, as_rng, chunk_bounds, parallel_map, resolve_threads

PROTOTYPE, SGD_BINARY, SGD_CYCLIC, PERCEPTRON = 0, 1, 2, 3
PARADIGM_NAMES = {PROTOTYPE: "bundle", SGD_BINARY: "sgd", SGD_CYCLIC: "sgd", PERCEPTRON: "perceptron"}
VOTE_CHUNK = 1024
PREDICT_CHUNK = 2048
STE_WINDOW = 1.0
WARM_START_SCALE = 0.9
ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


class TrainConfig(BaseModel):
    """Hyperparameters shared by the gradient learners and the perceptron."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    lr: float = Field(0.01, gt=0)
    epochs: int = Field(10, ge=0)
    batch_size: int = Field(32, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    beta: float = Field(10.0, gt=0)
    warm_start: bool = False
    optimizer: Literal["adam", "sgd"] = "adam"
    keep_residual: bool = True


# ---------------------------------------------------------------------------
# models


@dataclass
class PrototypeModel:
    family: Family
    dim: int
    data: np.ndarray  # (C, words) packed or (C, D) elements
    seed: int = 0
    spec: CyclicSimilaritySpec | None = None

    def __post_init__(self):
        if len(self.data) < 1:
            raise ValueError("need at least one class")
        if not self.family.binary and self.spec is None:
            self.spec = core.standard_spec(self.family.order)

    @property
    def n_classes(self) -> int:
        return len(self.data)

    @property
    def paradigm(self) -> int:
        return PROTOTYPE

    @property
    def prototypes(self) -> list[core.Hypervector]:
        rows = EncodedSet(self.family, self.dim, self.data)
        return [rows.row(c) for c in range(self.n_classes)]

    def scores(self, enc: EncodedSet, rows=slice(None)) -> np.ndarray:
        """Similarity of each selected encoding to each prototype, ``(M, C)``."""
        if self.family.binary:
            x = enc.signs(rows)
            p = core.unpack_bits(self.data, self.dim).astype(np.float64) * 2 - 1
            return x @ p.T / self.dim  # integer-valued sums, exact in float64
        return _table_sums(enc.elements(rows), self.data, self.spec) / self.dim


@dataclass
class SgdModel:
    """Real shadow weights ``(C, D)`` with a projection applied at inference.

    ``paradigm`` selects the projection: sign (binary SGD), lattice rounding
    mod ``n`` (cyclic SGD), or none (perceptron).
    """

    family: Family
    paradigm: int
    weights: np.ndarray
    beta: float = 10.0
    seed: int = 0
    spec: CyclicSimilaritySpec | None = None

    def __post_init__(self):
        if self.paradigm not in (SGD_BINARY, SGD_CYCLIC, PERCEPTRON):
            raise ValueError(f"not a weight-model paradigm: {self.paradigm}")
        if (self.paradigm == SGD_CYCLIC) == self.family.binary:
            raise ValueError("cyclic SGD needs a cyclic family; the other paradigms need binary")
        if self.weights.ndim != 2 or len(self.weights) < 1:
            raise ValueError("weights must be a non-empty (C, D) matrix")
        if self.paradigm == SGD_CYCLIC and self.spec is None:
            self.spec = core.standard_spec(self.family.order)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]

    def effective(self) -> np.ndarray:
        return project(self.weights, self.paradigm, self.family)

    def scores(self, enc: EncodedSet, rows=slice(None)) -> np.ndarray:
        w = self.effective()
        if self.paradigm == PERCEPTRON:
            return enc.signs(rows) @ w.T
        if self.paradigm == SGD_BINARY:
            return self.beta / self.dim * (enc.signs(rows) @ w.T)
        return self.beta / self.dim * _table_sums(enc.elements(rows), w, self.spec)


Model = PrototypeModel | SgdModel


def project(weights: np.ndarray, paradigm: int, family: Family) -> np.ndarray:
    """Map shadow weights to the values used at inference (idempotent)."""
    if paradigm == SGD_BINARY:
        return np.where(weights >= 0, 1.0, -1.0)
    if paradigm == SGD_CYCLIC:
        return np.mod(round_half_up(weights), family.order)
    return weights


def round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(x + 0.5)


def _table_sums(e: np.ndarray, w: np.ndarray, spec: CyclicSimilaritySpec) -> np.ndarray:
    """``sum_i table[(x_i - w_ci) mod n]`` for lattice weights, ``(M, C)``.

    Summing through per-difference counts makes equal multisets give bitwise
    equal scores, so exact ties stay ties under any positive rescaling.
    """
    x = e.astype(np.int64)
    n = spec.order
    w = w.astype(np.int64)
    out = np.empty((len(x), len(w)))
    for c in range(len(w)):
        diff = (x - w[c]) % n
        counts = np.stack([(diff == k).sum(axis=1) for k in range(n)], axis=1)
        out[:, c] = counts @ spec.table
    return out


# ---------------------------------------------------------------------------
# bundling


def _check_labels(labels: np.ndarray, n: int, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ValueError(f"expected {n} labels, got shape {labels.shape}")
    if n and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(f"labels must lie in [0, {n_classes})")
    return labels.astype(np.int64)


def _class_votes(enc: EncodedSet, labels: np.ndarray, n_classes: int, threads: int | None) -> np.ndarray:
    """Binary: per-class sum of signs ``(C, D)``; cyclic: per-class symbol counts ``(C, n, D)``."""
    n_threads = resolve_threads(threads)
    groups = np.array_split(np.arange(len(enc)), n_threads)
    order = enc.family.order

    def accumulate(rows: np.ndarray) -> np.ndarray:
        shape = (n_classes, enc.dim) if enc.family.binary else (n_classes, order, enc.dim)
        acc = np.zeros(shape, dtype=np.int64)
        for lo, hi in chunk_bounds(len(rows), VOTE_CHUNK):
            sel = rows[lo:hi]
            onehot = np.zeros((n_classes, len(sel)))
            onehot[labels[sel], np.arange(len(sel))] = 1.0
            if enc.family.binary:
                acc += np.rint(onehot @ enc.signs(sel)).astype(np.int64)
            else:
                e = enc.elements(sel)
                for k in range(order):
                    acc[:, k] += np.rint(onehot @ (e == k)).astype(np.int64)
        return acc

    parts = parallel_map(accumulate, [g for g in groups if len(g)], n_threads)
    return sum(parts[1:], parts[0]) if parts else None


def bundle_train(
    enc: EncodedSet,
    labels: np.ndarray,
    n_classes: int,
    rng: SeededRng | int | None = None,
    spec: CyclicSimilaritySpec | None = None,
    threads: int | None = None,
) -> PrototypeModel:
    """One prototype per class by bundling that class's encodings (one streaming pass)."""
    labels = _check_labels(labels, len(enc), n_classes)
    present = np.bincount(labels, minlength=n_classes)
    empty = np.flatnonzero(present == 0)
    if empty.size:
        raise DataError(f"class {int(empty[0])} has no training samples")
    rng = as_rng(rng)
    votes = _class_votes(enc, labels, n_classes, threads)
    if enc.family.binary:
        signs = np.stack([core.majority_from_votes(votes[c], rng.child(c).generator()) for c in range(n_classes)])
        data = core.pack_bits((signs > 0).astype(np.uint8))
        return PrototypeModel(BINARY, enc.dim, data, rng.seed)
    spec = spec or core.standard_spec(enc.family.order)
    rows = [
        core.argmax_from_scores(core.cyclic_scores(votes[c], spec), rng.child(c).generator()).astype(np.uint8)
        for c in range(n_classes)
    ]
    return PrototypeModel(enc.family, enc.dim, np.stack(rows), rng.seed, spec)


# ---------------------------------------------------------------------------
# inference


def predict(t, model: Model) -> int:
    """Class of one hypervector; ties go to the lowest class index."""
    enc = EncodedSet.from_vectors([t])
    _check_compatible(enc, model)
    return int(np.argmax(model.scores(enc)[0]))


def predict_batch(enc: EncodedSet, model: Model) -> np.ndarray:
    _check_compatible(enc, model)
    out = np.empty(len(enc), dtype=np.int64)
    for lo, hi in chunk_bounds(len(enc), PREDICT_CHUNK):
        out[lo:hi] = np.argmax(model.scores(enc, slice(lo, hi)), axis=1)
    return out


def evaluate(enc: EncodedSet, labels: np.ndarray, model: Model) -> float:
    if len(enc) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    labels = np.asarray(labels)
    if labels.shape != (len(enc),):
        raise ValueError("label count does not match the encoded set")
    return float(np.mean(predict_batch(enc, model) == labels))


def _check_compatible(enc: EncodedSet, model: Model):
    if enc.dim != model.dim:
        raise ValueError(f"dimension mismatch: data {enc.dim}, model {model.dim}")
    if enc.family != model.family:
        raise ValueError(f"family mismatch: data {enc.family.name}, model {model.family.name}")


# ---------------------------------------------------------------------------
# losses and gradients


def _softmax_xent(logits: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient with respect to the logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=1, keepdims=True)
    rows = np.arange(len(y))
    loss = float(-np.mean(np.log(p[rows, y])))
    g = p
    g[rows, y] -= 1.0
    return loss, g / len(y)


def binary_relaxed_loss_grad(w: np.ndarray, x: np.ndarray, y: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    """Loss with the sign replaced by its straight-through surrogate (clip to [-1, 1])."""
    d = w.shape[1]
    loss, g = _softmax_xent(beta / d * (x @ np.clip(w, -1, 1).T), y)
    grad = beta / d * (g.T @ x)
    return loss, grad * (np.abs(w) < STE_WINDOW)


def binary_ste_loss_grad(w: np.ndarray, x: np.ndarray, y: np.ndarray, beta: float) -> tuple[float, np.ndarray]:
    """Loss at the sign weights; gradient passed straight through inside the window."""
    d = w.shape[1]
    loss, g = _softmax_xent(beta / d * (x @ project(w, SGD_BINARY, BINARY).T), y)
    grad = beta / d * (g.T @ x)
    return loss, grad * (np.abs(w) < STE_WINDOW)


def _trig(e: np.ndarray, k: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    a = 2 * np.pi * k / order * e
    return np.cos(a), np.sin(a)


def _cyclic_logit_sums(e: np.ndarray, w: np.ndarray, spec: CyclicSimilaritySpec) -> np.ndarray:
    """``sum_i sim(x_i - w_ci)`` with the smooth character expansion."""
    total = sum(spec.alpha)
    e = e.astype(np.float64)
    out = np.zeros((len(e), w.shape[0]))
    for k, wk in spec.folded_weights():
        cx, sx = _trig(e, k, spec.order)
        cw, sw = _trig(w, k, spec.order)
        out += wk / total * (cx @ cw.T + sx @ sw.T)
    return out


def cyclic_loss_grad(
    w: np.ndarray, e: np.ndarray, y: np.ndarray, beta: float, spec: CyclicSimilaritySpec
) -> tuple[float, np.ndarray]:
    """Cross-entropy of ``beta/D * sum_i sim(x_i - w_ci)`` and its gradient in ``w`` (real-valued)."""
    d = w.shape[1]
    loss, g = _softmax_xent(beta / d * _cyclic_logit_sums(e, w, spec), y)
    total = sum(spec.alpha)
    e = e.astype(np.float64)
    grad = np.zeros_like(w, dtype=np.float64)
    for k, wk in spec.folded_weights():
        cx, sx = _trig(e, k, spec.order)
        cw, sw = _trig(w, k, spec.order)
        # d/dw cos(a(x - w)) = a sin(a(x - w)) = a (sin ax cos aw - cos ax sin aw)
        a = 2 * np.pi * k / spec.order
        grad += wk / total * a * ((g.T @ sx) * cw - (g.T @ cx) * sw)
    return loss, beta / d * grad


# ---------------------------------------------------------------------------
# optimizers


@dataclass
class _Optimizer:
    kind: str
    lr: float
    shape: tuple
    m: np.ndarray = field(init=False)
    v: np.ndarray = field(init=False)
    t: int = 0

    def __post_init__(self):
        self.m = np.zeros(self.shape)
        self.v = np.zeros(self.shape)

    def delta(self, grad: np.ndarray) -> np.ndarray:
        if self.kind == "sgd":
            return -self.lr * grad
        b1, b2 = ADAM_BETAS
        self.t += 1
        self.m = b1 * self.m + (1 - b1) * grad
        self.v = b2 * self.v + (1 - b2) * grad * grad
        m_hat = self.m / (1 - b1**self.t)
        v_hat = self.v / (1 - b2**self.t)
        return -self.lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


EpochHook = Callable[[int, SgdModel], None]


def _batches(n: int, cfg: TrainConfig, epoch: int):
    order = SeededRng(cfg.seed, (1, epoch)).generator().permutation(n)
    for lo, hi in chunk_bounds(n, cfg.batch_size):
        yield order[lo:hi]


def _check_config(cfg: TrainConfig | dict | None) -> TrainConfig:
    if cfg is None:
        return TrainConfig()
    if isinstance(cfg, TrainConfig):
        return cfg
    try:
        return TrainConfig(**cfg)
    except Exception as exc:
        raise ConfigError(str(exc)) from exc


def sgd_train_binary(
    enc: EncodedSet,
    labels: np.ndarray,
    n_classes: int,
    cfg: TrainConfig | dict | None = None,
    on_epoch: EpochHook | None = None,
    on_step: EpochHook | None = None,
) -> SgdModel:
    """Sign weights trained with the straight-through estimator.

    Coordinates with ``|w| >= 1`` get exactly zero update, whatever the optimizer.
    """
    cfg = _check_config(cfg)
    if not enc.family.binary:
        raise ValueError("binary SGD needs binary encodings")
    labels = _check_labels(labels, len(enc), n_classes)
    d = enc.dim
    if cfg.warm_start:
        votes = _class_votes(enc, labels, n_classes, None).astype(np.float64)
        scale = np.maximum(np.abs(votes).max(axis=1, keepdims=True), 1.0)
        w = WARM_START_SCALE * votes / scale
    else:
        w = SeededRng(cfg.seed, (0,)).generator().uniform(-0.5, 0.5, size=(n_classes, d))
    model = SgdModel(BINARY, SGD_BINARY, w, cfg.beta, cfg.seed)
    opt = _Optimizer(cfg.optimizer, cfg.lr, w.shape)
    step = 0
    for epoch in range(cfg.epochs):
        for rows in _batches(len(enc), cfg, epoch):
            x = enc.signs(rows)
            _, grad = binary_ste_loss_grad(model.weights, x, labels[rows], cfg.beta)
            trainable = np.abs(model.weights) < STE_WINDOW
            model.weights = model.weights + opt.delta(grad) * trainable
            step += 1
            if on_step:
                on_step(step, model)
        if on_epoch:
            on_epoch(epoch, model)
    return model


def sgd_train_cyclic(
    enc: EncodedSet,
    labels: np.ndarray,
    n_classes: int,
    cfg: TrainConfig | dict | None = None,
    spec: CyclicSimilaritySpec | None = None,
    on_epoch: EpochHook | None = None,
    on_step: EpochHook | None = None,
) -> SgdModel:
    """Group-element weights: gradient step, then round to the nearest integer mod ``n``.

    The model's weights are on the lattice after every step. With
    ``keep_residual`` the optimizer also remembers the part of each update
    that rounding discarded and adds it to the next one; without it, updates
    smaller than half a lattice step are lost.
    """
    cfg = _check_config(cfg)
    if enc.family.binary:
        raise ValueError("cyclic SGD needs cyclic encodings")
    n = enc.family.order
    spec = spec or core.standard_spec(n)
    if spec.order != n:
        raise ValueError(f"similarity spec has order {spec.order}, encodings have {n}")
    labels = _check_labels(labels, len(enc), n_classes)
    if cfg.warm_start:
        w = bundle_train(enc, labels, n_classes, SeededRng(cfg.seed, (0,)), spec).data.astype(np.float64)
    else:
        w = SeededRng(cfg.seed, (0,)).generator().integers(0, n, size=(n_classes, enc.dim)).astype(np.float64)
    model = SgdModel(enc.family, SGD_CYCLIC, w, cfg.beta, cfg.seed, spec)
    opt = _Optimizer(cfg.optimizer, cfg.lr, w.shape)
    residual = np.zeros_like(w)
    step = 0
    for epoch in range(cfg.epochs):
        for rows in _batches(len(enc), cfg, epoch):
            e = enc.elements(rows)
            _, grad = cyclic_loss_grad(model.weights, e, labels[rows], cfg.beta, spec)
            latent = model.weights + opt.delta(grad)
            if cfg.keep_residual:
                latent = latent + residual
            snapped = round_half_up(latent)
            if cfg.keep_residual:
                residual = latent - snapped
            model.weights = np.mod(snapped, n)
            step += 1
            if on_step:
                on_step(step, model)
        if on_epoch:
            on_epoch(epoch, model)
    return model


def perceptron_train(
    enc: EncodedSet,
    labels: np.ndarray,
    n_classes: int,
    cfg: TrainConfig | dict | None = None,
    on_epoch: EpochHook | None = None,
) -> SgdModel:
    """Multiclass perceptron on the ``+-1`` encodings; weights stay real."""
    cfg = _check_config(cfg)
    if not enc.family.binary:
        raise ValueError("the perceptron needs binary encodings")
    labels = _check_labels(labels, len(enc), n_classes)
    w = np.zeros((n_classes, enc.dim))
    for epoch in range(cfg.epochs):
        order = SeededRng(cfg.seed, (1, epoch)).generator().permutation(len(enc))
        for lo, hi in chunk_bounds(len(order), VOTE_CHUNK):
            rows = order[lo:hi]
            xs = enc.signs(rows)
            for x, y in zip(xs, labels[rows]):
                guess = int(np.argmax(w @ x))
                if guess != y:
                    w[y] += cfg.lr * x
                    w[guess] -= cfg.lr * x
        if on_epoch:
            on_epoch(epoch, SgdModel(BINARY, PERCEPTRON, w.copy(), cfg.beta, cfg.seed))
    return SgdModel(BINARY, PERCEPTRON, w, cfg.beta, cfg.seed)


# ---------------------------------------------------------------------------
# model files: b"VSA1" | paradigm u8 | family u8 | C u32 | D u64 | payload | seed u64

MODEL_MAGIC = b"VSA1"
_MODEL_HEADER = struct.Struct("<4sBBIQ")
_SEED = struct.Struct("<Q")


def model_to_bytes(model: Model) -> bytes:
    head = _MODEL_HEADER.pack(MODEL_MAGIC, model.paradigm, model.family.code, model.n_classes, model.dim)
    if isinstance(model, PrototypeModel):
        payload = b"".join(core.to_record(v) for v in model.prototypes)
    else:
        payload = np.ascontiguousarray(model.weights, dtype="<f8").tobytes()
    return head + payload + _SEED.pack(model.seed)


def model_from_bytes(buf: bytes, beta: float = 10.0) -> Model:
    if len(buf) < _MODEL_HEADER.size + _SEED.size:
        raise DataError("truncated model file")
    magic, paradigm, code, n_classes, dim = _MODEL_HEADER.unpack_from(buf, 0)
    if magic != MODEL_MAGIC:
        raise DataError(f"bad model magic {magic!r}")
    (seed,) = _SEED.unpack_from(buf, len(buf) - _SEED.size)
    body = buf[_MODEL_HEADER.size : len(buf) - _SEED.size]
    if paradigm == PROTOTYPE:
        rows, offset = [], 0
        try:
            for _ in range(n_classes):
                v, offset = core.from_record(body, offset)
                rows.append(v)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
        if offset != len(body):
            raise DataError("trailing bytes in model payload")
        stacked = EncodedSet.from_vectors(rows)
        if stacked.dim != dim or stacked.family.code != code:
            raise DataError("prototype records disagree with the model header")
        return PrototypeModel(stacked.family, dim, stacked.data, seed)
    if paradigm not in (SGD_BINARY, SGD_CYCLIC, PERCEPTRON):
        raise DataError(f"unknown paradigm byte {paradigm}")
    expected = n_classes * dim * 8
    if len(body) != expected:
        raise DataError(f"weight payload has {len(body)} bytes, expected {expected}")
    weights = np.frombuffer(body, dtype="<f8").reshape(n_classes, dim).astype(np.float64)
    family = core.family_from_code(code, cyclic=paradigm == SGD_CYCLIC)
    return SgdModel(family, paradigm, weights, beta, seed)


def save_model(model: Model, path: str | Path) -> bytes:
    data = model_to_bytes(model)
    Path(path).write_bytes(data)
    return data


def load_model(path: str | Path) -> Model:
    try:
        return model_from_bytes(Path(path).read_bytes())
    except OSError as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc

