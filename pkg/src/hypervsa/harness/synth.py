"""A three-symbol task where binary bundling loses to a richer group.

Inputs and labels both live in ``{0, 1, 2}``. The joint law puts
``1/9 + 2p`` on each diagonal pair and ``1/9 - p`` elsewhere, so the best
possible rule is ``y = x`` with accuracy ``1/3 + 6p``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import core, learn
from ..core import BINARY, Family
from ..encoding import Encoder
from ..rff import CorrelatedBasis
from ..rng import SeededRng, as_rng
from .data import Dataset

SYMBOLS = 3


@dataclass(frozen=True)
class SyntheticTaskSpec:
    p: float = 0.05
    m: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.p < 1 / 9:
            raise ValueError(f"p must lie in (0, 1/9), got {self.p}")
        if self.m < 1:
            raise ValueError("m must be at least 1")

    def joint(self) -> np.ndarray:
        return np.where(np.eye(SYMBOLS, dtype=bool), 1 / 9 + 2 * self.p, 1 / 9 - self.p)

    @property
    def bayes_accuracy(self) -> float:
        return 1 / 3 + 6 * self.p


def synth_task(spec: SyntheticTaskSpec, split: str = "train") -> Dataset:
    """Draw ``m`` pairs; the single feature stores ``x - 1`` so it lies in ``[-1, 1]``."""
    gen = SeededRng(spec.seed, (20, 0 if split == "train" else 1)).generator()
    cells = gen.choice(SYMBOLS * SYMBOLS, size=spec.m, p=spec.joint().ravel())
    x, y = np.divmod(cells, SYMBOLS)
    return Dataset("synthetic", (x - 1).astype(np.float64)[:, None], y.astype(np.int64), split, meta={"p": spec.p})


def symbols(ds: Dataset) -> np.ndarray:
    """The input symbol of each sample, shape ``(M,)``."""
    return np.rint(ds.features[:, 0] + 1).astype(np.int64)


def synth_encoder(family: Family, dim: int, rng: SeededRng | int | None = None) -> Encoder:
    """Symbol hypervectors: independent random ones for binary, ``r + x`` for cyclic.

    In the cyclic family the three vectors differ by a constant shift, so
    every pair has similarity equal to the character value at that shift
    (``-1/2`` for order 3).
    """
    gen = as_rng(rng).generator()
    if family.binary:
        bits = gen.integers(0, 2, size=(SYMBOLS, dim), dtype=np.uint8)
        basis = CorrelatedBasis(BINARY, dim, core.pack_bits(bits))
    else:
        r = gen.integers(0, family.order, size=dim)
        elems = np.stack([(r + x) % family.order for x in range(SYMBOLS)]).astype(np.uint8)
        basis = CorrelatedBasis(family, dim, elems)
    return Encoder(basis, 1)


def simulate(
    spec: SyntheticTaskSpec,
    m_test: int,
    dim: int,
    families: tuple[str, ...] = ("binary", "g3"),
    threads: int | None = None,
) -> dict:
    """Bundling accuracy of each family on the task."""
    train = synth_task(spec, "train")
    test = synth_task(SyntheticTaskSpec(spec.p, m_test, spec.seed), "test")
    out = {"p": spec.p, "m_train": spec.m, "m_test": m_test, "dim": dim, "bayes_accuracy": spec.bayes_accuracy}
    for i, name in enumerate(families):
        family = Family.parse(name)
        enc = synth_encoder(family, dim, SeededRng(spec.seed, (21, i)))
        a = enc.encode_batch(symbols(train)[:, None], threads)
        b = enc.encode_batch(symbols(test)[:, None], threads)
        model = learn.bundle_train(a, train.labels, SYMBOLS, SeededRng(spec.seed, (22, i)), threads=threads)
        out[name] = {
            "accuracy": learn.evaluate(b, test.labels, model),
            "prototypes_equal": bool(np.all(model.data == model.data[0])),
        }
    return out

