"""Circuit-depth estimates (longest two-input-gate path) for three classifiers.

Depths use real-valued ``log2`` and are rounded half-up only for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

MODELS = ("binary_hdc", "group", "perceptron")


@dataclass(frozen=True)
class CdcQuery:
    n_features: int
    dim: int
    n_bits: int = 3

    def __post_init__(self):
        if self.n_features < 2:
            raise ValueError("n_features must be at least 2")
        if self.dim < 2:
            raise ValueError("dim must be at least 2")
        if not 1 <= self.n_bits <= 8:
            raise ValueError("n_bits must be in [1, 8]")


@dataclass(frozen=True)
class Depth:
    model: str
    real: float

    @property
    def rounded(self) -> int:
        return math.floor(self.real + 0.5)

    def as_dict(self) -> dict:
        return {"model": self.model, "depth_real": self.real, "depth_rounded": self.rounded}


def _majority_tree(dim: int) -> float:
    # popcount over D bits followed by an argmax comparison tree
    ld = math.log2(dim)
    return 1.5 * ld * (1 + ld)


def cdc_binary_hdc(q: CdcQuery) -> Depth:
    return Depth("binary_hdc", math.log2(q.n_features) + 1 + _majority_tree(q.dim))


def cdc_group(q: CdcQuery) -> Depth:
    return Depth(f"group_2^{q.n_bits}", 3 * q.n_bits * math.log2(q.n_features) + 24 * math.log2(q.dim))


def cdc_perceptron(q: CdcQuery) -> Depth:
    return Depth("perceptron", 91 + 96 * math.log2(q.n_features) + _majority_tree(q.dim))


def cdc_all(q: CdcQuery) -> list[Depth]:
    return [cdc_binary_hdc(q), cdc_group(q), cdc_perceptron(q)]
