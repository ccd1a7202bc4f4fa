"""Feature quantization and position-shifted binding encoders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core, rff
from ._kernels import encode_rows
from .core import Family
from .rng import SeededRng, as_rng, chunk_bounds, parallel_map

LEVELS = 256
ENCODE_CHUNK = 256
SIGMA_PER_ROOT_FEATURE = 32.0


def quantize_features(x: np.ndarray, bits: int = 8) -> np.ndarray:
    """Map values in ``[-1, 1]`` to level indices, rounding half up."""
    if not 1 <= bits <= 8:
        raise ValueError("bits must be in [1, 8]")
    top = (1 << bits) - 1
    x = np.clip(np.asarray(x, dtype=np.float64), -1.0, 1.0)
    q = np.floor((x + 1.0) / 2.0 * top + 0.5)
    return np.clip(q, 0, top).astype(np.uint8)


def auto_sigma(n_features: int) -> float:
    """Default RBF bandwidth in level units; grows with ``sqrt(N)`` like image distances do."""
    return SIGMA_PER_ROOT_FEATURE * math.sqrt(n_features)


def build_basis(
    family: Family,
    dim: int,
    mode: str = "rff",
    sigma: float | None = None,
    n_features: int = 1,
    rng: SeededRng | int | None = None,
    threads: int | None = None,
    levels: int = LEVELS,
) -> rff.CorrelatedBasis:
    """Basis over ``levels`` quantized values: ``"random"`` or RBF-correlated ``"rff"``."""
    rng = as_rng(rng)
    if mode == "random":
        return rff.random_basis(levels, dim, family, rng)
    if mode != "rff":
        raise ValueError(f"unknown basis mode {mode!r}")
    sigma = auto_sigma(n_features) if sigma is None else float(sigma)
    target = rff.rbf_target(np.arange(levels, dtype=np.float64), sigma)
    return rff.sample_correlated(target, dim, family, rng, threads)


@dataclass
class Encoder:
    """``t = v[p_0] (x) P^1 v[p_1] (x) ... (x) P^(N-1) v[p_(N-1)]`` with ``P`` a one-step rotation."""

    basis: rff.CorrelatedBasis
    num_features: int

    def __post_init__(self):
        if self.num_features < 1:
            raise ValueError("num_features must be at least 1")
        self._elements = np.ascontiguousarray(self.basis.elements())

    @property
    def family(self) -> Family:
        return self.basis.family

    @property
    def dim(self) -> int:
        return self.basis.dim

    def _check(self, indices: np.ndarray) -> np.ndarray:
        idx = np.asarray(indices)
        if idx.ndim == 1:
            idx = idx[None, :]
        if idx.ndim != 2 or idx.shape[1] != self.num_features:
            raise ValueError(f"expected {self.num_features} feature indices per sample")
        if idx.size and (idx.min() < 0 or idx.max() >= len(self.basis)):
            raise IndexError(f"feature index outside the basis range [0, {len(self.basis)})")
        return idx.astype(np.int64)

    def encode(self, p: np.ndarray) -> core.Hypervector:
        return self.encode_batch(np.asarray(p)[None, :]).row(0)

    def encode_batch(self, indices: np.ndarray, threads: int | None = None) -> EncodedSet:
        idx = self._check(indices)
        order = 2 if self.family.binary else self.family.order

        def work(bounds):
            lo, hi = bounds
            out = np.empty((hi - lo, self.dim), dtype=np.uint8)
            encode_rows(idx[lo:hi], self._elements, order, out)
            if self.family.binary:
                return core.pack_bits(1 - out)
            return out

        parts = parallel_map(work, chunk_bounds(len(idx), ENCODE_CHUNK), threads)
        if parts:
            data = np.concatenate(parts)
        else:
            width = core.n_words(self.dim) if self.family.binary else self.dim
            data = np.zeros((0, width), dtype=np.uint64 if self.family.binary else np.uint8)
        return EncodedSet(self.family, self.dim, data)


def encode(p: np.ndarray, enc: Encoder) -> core.Hypervector:
    return enc.encode(p)


@dataclass
class EncodedSet:
    """A batch of encodings: packed words (binary) or group elements (cyclic).

    ``reads`` counts rows handed out by the accessors, which lets tests check
    that a learner touched every sample exactly once.
    """

    family: Family
    dim: int
    data: np.ndarray
    reads: int = field(default=0, compare=False)

    def __post_init__(self):
        width = core.n_words(self.dim) if self.family.binary else self.dim
        if self.data.ndim != 2 or self.data.shape[1] != width:
            raise ValueError("encoded data shape does not match family and dim")

    def __len__(self) -> int:
        return self.data.shape[0]

    def row(self, i: int) -> core.Hypervector:
        if self.family.binary:
            return core.BinaryHypervector(self.dim, self.data[i])
        return core.CyclicHypervector(self.family.order, self.data[i])

    def _take(self, rows) -> np.ndarray:
        block = self.data[rows]
        self.reads += block.shape[0]
        return block

    def signs(self, rows=slice(None)) -> np.ndarray:
        """Binary rows as float64 ``+-1``."""
        if not self.family.binary:
            raise TypeError("signs() needs a binary encoded set")
        return core.unpack_bits(self._take(rows), self.dim).astype(np.float64) * 2 - 1

    def elements(self, rows=slice(None)) -> np.ndarray:
        """Group elements; binary rows use the ``+1 -> 0`` convention."""
        block = self._take(rows)
        if self.family.binary:
            return (1 - core.unpack_bits(block, self.dim)).astype(np.uint8)
        return block

    @classmethod
    def from_vectors(cls, vs: list[core.Hypervector]) -> EncodedSet:
        if not vs:
            raise ValueError("need at least one vector")
        v0 = vs[0]
        if isinstance(v0, core.BinaryHypervector):
            return cls(core.BINARY, v0.dim, np.stack([v.words for v in vs]))
        return cls(Family(v0.order), v0.dim, np.stack([v.elems for v in vs]))
