"""Hypervector types and the four VSA primitives.

Two families are supported:

* binary HDC over ``{-1, +1}``, stored as bit-packed 64-bit words (bit 1 is +1),
  with XNOR binding, popcount similarity and majority bundling;
* the cyclic group ``Z/nZ``, one byte per element, with modular-addition
  binding and a character-weighted cosine similarity.

Under the bijection ``+1 <-> 0``, ``-1 <-> 1`` binary HDC is the ``n = 2`` cyclic
VSA; :func:`binary_to_cyclic` and :func:`cyclic_to_binary` convert between them.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .rng import SeededRng, as_rng

WORD_BITS = 64
MAX_ORDER = 256

# ---------------------------------------------------------------------------
# bit packing


def n_words(dim: int) -> int:
    return (dim + WORD_BITS - 1) // WORD_BITS


def pack_bits(bits: np.ndarray) -> np.ndarray:
    """Pack a ``(..., D)`` 0/1 array into ``(..., ceil(D/64))`` little-endian words.

    Coordinate 0 lands in the least significant bit of word 0; padding is zero.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    dim = bits.shape[-1]
    packed = np.packbits(bits, axis=-1, bitorder="little")
    pad = n_words(dim) * 8 - packed.shape[-1]
    if pad:
        widths = [(0, 0)] * (packed.ndim - 1) + [(0, pad)]
        packed = np.pad(packed, widths)
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns uint8 0/1 of shape ``(..., dim)``."""
    words = np.ascontiguousarray(words, dtype="<u8")
    raw = words.view(np.uint8)
    return np.unpackbits(raw, axis=-1, count=dim, bitorder="little")


def tail_mask(dim: int) -> np.uint64:
    rem = dim % WORD_BITS
    return np.uint64((1 << rem) - 1) if rem else np.uint64(0xFFFFFFFFFFFFFFFF)


def popcount(words: np.ndarray, axis: int = -1) -> np.ndarray:
    return np.bitwise_count(words).sum(axis=axis, dtype=np.int64)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# value types


class BinaryHypervector:
    """A point of ``{-1, +1}^D`` stored as packed bits."""

    __slots__ = ("dim", "words")

    def __init__(self, dim: int, words: np.ndarray):
        dim = int(dim)
        if dim <= 0:
            raise ValueError("dim must be positive")
        words = np.asarray(words, dtype=np.uint64).reshape(-1)
        if words.shape[0] != n_words(dim):
            raise ValueError(f"expected {n_words(dim)} words for dim {dim}, got {words.shape[0]}")
        if words[-1] & ~tail_mask(dim):
            raise ValueError("padding bits must be zero")
        self.dim = dim
        self.words = _frozen(words)

    @classmethod
    def from_signs(cls, signs) -> BinaryHypervector:
        signs = np.asarray(signs)
        if signs.ndim != 1:
            raise ValueError("signs must be one-dimensional")
        if not np.all((signs == 1) | (signs == -1)):
            raise ValueError("signs must be -1 or +1")
        return cls(signs.shape[0], pack_bits(signs > 0))

    @classmethod
    def from_bits(cls, bits) -> BinaryHypervector:
        bits = np.asarray(bits)
        if not np.all((bits == 0) | (bits == 1)):
            raise ValueError("bits must be 0 or 1")
        return cls(bits.shape[0], pack_bits(bits))

    @classmethod
    def ones(cls, dim: int) -> BinaryHypervector:
        return cls.from_bits(np.ones(dim, dtype=np.uint8))

    def bits(self) -> np.ndarray:
        return unpack_bits(self.words, self.dim)

    def signs(self) -> np.ndarray:
        return self.bits().astype(np.int8) * 2 - 1

    def __neg__(self) -> BinaryHypervector:
        flipped = ~self.words
        flipped[-1] &= tail_mask(self.dim)
        return BinaryHypervector(self.dim, flipped)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryHypervector):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.dim, self.words.tobytes()))

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return f"BinaryHypervector(dim={self.dim})"


class CyclicHypervector:
    """A point of ``(Z/nZ)^D``, one unsigned byte per element."""

    __slots__ = ("dim", "order", "elems")

    def __init__(self, order: int, elems):
        order = int(order)
        if not 2 <= order <= MAX_ORDER:
            raise ValueError(f"order must be in [2, {MAX_ORDER}], got {order}")
        raw = np.asarray(elems)
        if raw.ndim != 1 or raw.shape[0] == 0:
            raise ValueError("elems must be a non-empty one-dimensional sequence")
        if np.any(raw < 0) or np.any(raw >= order):
            raise ValueError(f"elements must lie in [0, {order})")
        self.dim = raw.shape[0]
        self.order = order
        self.elems = _frozen(raw.astype(np.uint8))

    @classmethod
    def zeros(cls, dim: int, order: int) -> CyclicHypervector:
        return cls(order, np.zeros(dim, dtype=np.uint8))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CyclicHypervector):
            return NotImplemented
        return self.order == other.order and np.array_equal(self.elems, other.elems)

    def __hash__(self):
        return hash((self.order, self.elems.tobytes()))

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return f"CyclicHypervector(dim={self.dim}, order={self.order})"


Hypervector = BinaryHypervector | CyclicHypervector


@dataclass(frozen=True)
class Family:
    """Which carrier a basis, encoding or model uses."""

    order: int
    binary: bool = False

    def __post_init__(self):
        if self.binary and self.order != 2:
            raise ValueError("the binary family has order 2")
        if not 2 <= self.order <= MAX_ORDER:
            raise ValueError(f"order must be in [2, {MAX_ORDER}]")

    @classmethod
    def parse(cls, name: str) -> Family:
        """``"binary"``, or ``"gN"`` for the cyclic group of order N."""
        key = name.strip().lower()
        if key in ("binary", "bin", "hdc"):
            return BINARY
        if key.startswith("g") and key[1:].isdigit():
            return cls(int(key[1:]))
        raise ValueError(f"unknown family {name!r}; use 'binary' or 'g<order>'")

    @property
    def name(self) -> str:
        return "binary" if self.binary else f"g{self.order}"

    @property
    def code(self) -> int:
        """One-byte tag for the serialized formats: 0 for binary, else n mod 256."""
        return 0 if self.binary else self.order % 256


BINARY = Family(2, binary=True)


def family_from_code(code: int, cyclic: bool = False) -> Family:
    if code == 0 and not cyclic:
        return BINARY
    return Family(code or 256)


@dataclass(frozen=True)
class CyclicSimilaritySpec:
    """Similarity on ``Z/nZ`` as a non-negative mix of characters.

    ``alpha[k - 1]`` weights character ``k`` for ``k = 1 .. n-1`` and must satisfy
    ``alpha(k) = alpha(n - k)``. ``table[d]`` is the similarity of two elements
    whose difference is ``d`` (mod n).
    """

    order: int
    alpha: tuple[float, ...] = ()
    table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.order
        if not 2 <= n <= MAX_ORDER:
            raise ValueError(f"order must be in [2, {MAX_ORDER}]")
        alpha = np.zeros(n - 1) if not self.alpha else np.asarray(self.alpha, dtype=float)
        if not self.alpha:
            alpha[0] = alpha[n - 2] = 1.0
        if alpha.shape != (n - 1,):
            raise ValueError(f"alpha needs {n - 1} weights (characters 1..{n - 1})")
        if np.any(alpha < 0) or alpha.sum() <= 0:
            raise ValueError("alpha must be non-negative with positive total")
        if not np.allclose(alpha, alpha[::-1], rtol=0, atol=1e-12):
            raise ValueError("alpha must satisfy alpha(k) == alpha(n - k)")
        object.__setattr__(self, "alpha", tuple(float(a) for a in alpha))
        # Fold conjugate characters onto k <= n/2 so both members of a pair use
        # the same angle; this keeps table[d] == table[n - d] bit-exact.
        d = np.arange(n)
        table = np.zeros(n)
        for k, w in self.folded_weights():
            r = (k * d) % n
            r = np.minimum(r, n - r)
            table += w * _exact_cos(2 * np.pi * r / n)
        table /= alpha.sum()
        table[0] = 1.0
        table.flags.writeable = False
        object.__setattr__(self, "table", table)

    @classmethod
    def standard(cls, order: int) -> CyclicSimilaritySpec:
        """``S(x, y) = cos(2 pi (x - y) / n)``."""
        return cls(order)

    def folded_weights(self) -> list[tuple[int, float]]:
        """Pairs ``(k, w)`` with ``k <= n/2`` and the conjugate weight merged in."""
        n = self.order
        out = []
        for k in range(1, n // 2 + 1):
            w = self.alpha[k - 1]
            if n - k != k:
                w += self.alpha[n - k - 1]
            if w > 0:
                out.append((k, w))
        return out

    def relaxed(self, delta: np.ndarray) -> np.ndarray:
        """Smooth extension of the table to real-valued differences."""
        total = sum(self.alpha)
        out = np.zeros_like(delta, dtype=float)
        for k, w in self.folded_weights():
            out += w * np.cos(2 * np.pi * k * delta / self.order)
        return out / total


def _exact_cos(angle: np.ndarray) -> np.ndarray:
    """Cosine with the only rational values at rational angles (0, +-1/2, +-1) made exact."""
    c = np.cos(angle)
    exact = np.round(2 * c) / 2
    return np.where(np.abs(c - exact) < 1e-14, exact, c)


def standard_spec(order: int) -> CyclicSimilaritySpec:
    return _standard_specs.setdefault(order, CyclicSimilaritySpec(order))


_standard_specs: dict[int, CyclicSimilaritySpec] = {}


# ---------------------------------------------------------------------------
# binary operations


def _check_binary(u: BinaryHypervector, v: BinaryHypervector):
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: {u.dim} vs {v.dim}")


def similarity_binary(u: BinaryHypervector, v: BinaryHypervector) -> float:
    """``(matches - mismatches) / D`` via XOR and popcount."""
    _check_binary(u, v)
    mismatches = int(popcount(u.words ^ v.words))
    return (u.dim - 2 * mismatches) / u.dim


def bind_binary(u: BinaryHypervector, v: BinaryHypervector) -> BinaryHypervector:
    """Coordinate-wise product, i.e. XNOR of the packed bits."""
    _check_binary(u, v)
    out = ~(u.words ^ v.words)
    out[-1] &= tail_mask(u.dim)
    return BinaryHypervector(u.dim, out)


def _break_ties(scores_tied: np.ndarray, n_candidates: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """One uniform draw per tied coordinate, consumed in coordinate order."""
    u = gen.random(scores_tied.shape[0])
    return np.minimum((u * n_candidates).astype(np.int64), n_candidates - 1)


def majority_from_votes(votes: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    """Signs of an integer vote vector; zero votes are broken with ``gen``."""
    out = np.where(votes > 0, 1, -1).astype(np.int8)
    tied = np.flatnonzero(votes == 0)
    if tied.size:
        pick = _break_ties(tied, np.full(tied.size, 2), gen)
        out[tied] = np.where(pick == 0, 1, -1)
    return out


def bundle_binary(vs: Sequence[BinaryHypervector], rng: SeededRng | int | None = None) -> BinaryHypervector:
    """Coordinate-wise majority; ties take a uniformly random sign from ``rng``."""
    if len(vs) == 0:
        raise ValueError("cannot bundle an empty list")
    dim = vs[0].dim
    for v in vs:
        _check_binary(vs[0], v)
    ones = np.zeros(dim, dtype=np.int64)
    for v in vs:
        ones += v.bits()
    votes = 2 * ones - len(vs)
    signs = majority_from_votes(votes, as_rng(rng).generator())
    return BinaryHypervector.from_signs(signs)


def random_binary(dim: int, p_plus: float = 0.5, rng: SeededRng | int | None = None) -> BinaryHypervector:
    if not 0.0 <= p_plus <= 1.0:
        raise ValueError(f"p_plus must be a probability, got {p_plus}")
    gen = as_rng(rng).generator()
    bits = gen.random(dim) < p_plus
    return BinaryHypervector.from_bits(bits.astype(np.uint8))


# ---------------------------------------------------------------------------
# cyclic operations


def _check_cyclic(u: CyclicHypervector, v: CyclicHypervector):
    if u.dim != v.dim:
        raise ValueError(f"dimension mismatch: {u.dim} vs {v.dim}")
    if u.order != v.order:
        raise ValueError(f"order mismatch: {u.order} vs {v.order}")


def _spec_for(order: int, spec: CyclicSimilaritySpec | None) -> CyclicSimilaritySpec:
    if spec is None:
        return standard_spec(order)
    if spec.order != order:
        raise ValueError(f"similarity spec has order {spec.order}, vectors have {order}")
    return spec


def similarity_cyclic(u: CyclicHypervector, v: CyclicHypervector, spec: CyclicSimilaritySpec | None = None) -> float:
    """Mean of ``spec.table[(u_i - v_i) mod n]``."""
    _check_cyclic(u, v)
    spec = _spec_for(u.order, spec)
    diff = (u.elems.astype(np.int64) - v.elems) % u.order
    # Summing through a histogram makes the result depend only on the multiset
    # of differences, so similarity preservation under binding is exact.
    counts = np.bincount(diff, minlength=u.order)
    return float(counts @ spec.table) / u.dim


def bind_cyclic(u: CyclicHypervector, v: CyclicHypervector) -> CyclicHypervector:
    _check_cyclic(u, v)
    return CyclicHypervector(u.order, (u.elems.astype(np.int64) + v.elems) % u.order)


def invert_cyclic(u: CyclicHypervector) -> CyclicHypervector:
    return CyclicHypervector(u.order, (-u.elems.astype(np.int64)) % u.order)


def cyclic_scores(counts: np.ndarray, spec: CyclicSimilaritySpec) -> np.ndarray:
    """Summed similarity of every candidate symbol given per-symbol vote counts.

    ``counts`` has shape ``(n, D)``; the result ``scores[g, i]`` equals
    ``sum_h counts[h, i] * table[(g - h) mod n]``.
    """
    n = spec.order
    g = np.arange(n)
    circulant = spec.table[(g[:, None] - g[None, :]) % n]
    return circulant @ counts


def argmax_from_scores(scores: np.ndarray, gen: np.random.Generator, rtol: float = 1e-9) -> np.ndarray:
    """Per-column argmax; near-equal maxima are broken uniformly with ``gen``."""
    best = scores.max(axis=0)
    tol = rtol * np.maximum(1.0, np.abs(scores).max(axis=0))
    is_max = scores >= (best - tol)[None, :]
    n_max = is_max.sum(axis=0)
    out = np.argmax(is_max, axis=0)
    tied = np.flatnonzero(n_max > 1)
    if tied.size:
        pick = _break_ties(tied, n_max[tied], gen)
        rank = np.cumsum(is_max[:, tied], axis=0)
        out[tied] = np.argmax(is_max[:, tied] & (rank == pick + 1), axis=0)
    return out


def bundle_cyclic(
    vs: Sequence[CyclicHypervector],
    spec: CyclicSimilaritySpec | None = None,
    rng: SeededRng | int | None = None,
) -> CyclicHypervector:
    """Per coordinate, the symbol with the largest summed similarity to the inputs."""
    if len(vs) == 0:
        raise ValueError("cannot bundle an empty list")
    for v in vs:
        _check_cyclic(vs[0], v)
    n, dim = vs[0].order, vs[0].dim
    spec = _spec_for(n, spec)
    counts = np.zeros((n, dim), dtype=np.int64)
    cols = np.arange(dim)
    for v in vs:
        counts[v.elems, cols] += 1
    scores = cyclic_scores(counts, spec)
    return CyclicHypervector(n, argmax_from_scores(scores, as_rng(rng).generator()))


def random_cyclic(dim: int, order: int, rng: SeededRng | int | None = None) -> CyclicHypervector:
    gen = as_rng(rng).generator()
    return CyclicHypervector(order, gen.integers(0, order, size=dim))


# ---------------------------------------------------------------------------
# shared


def permute(v: Hypervector, j: int) -> Hypervector:
    """Cyclic rotation: coordinate ``i`` moves to ``(i + j) mod D``."""
    if isinstance(v, BinaryHypervector):
        return BinaryHypervector.from_bits(np.roll(v.bits(), j))
    if isinstance(v, CyclicHypervector):
        return CyclicHypervector(v.order, np.roll(v.elems, j))
    raise TypeError(f"not a hypervector: {type(v).__name__}")


def similarity(u: Hypervector, v: Hypervector, spec: CyclicSimilaritySpec | None = None) -> float:
    if isinstance(u, BinaryHypervector) and isinstance(v, BinaryHypervector):
        return similarity_binary(u, v)
    if isinstance(u, CyclicHypervector) and isinstance(v, CyclicHypervector):
        return similarity_cyclic(u, v, spec)
    raise TypeError("both arguments must be hypervectors of the same family")


def bind(u: Hypervector, v: Hypervector) -> Hypervector:
    if isinstance(u, BinaryHypervector) and isinstance(v, BinaryHypervector):
        return bind_binary(u, v)
    if isinstance(u, CyclicHypervector) and isinstance(v, CyclicHypervector):
        return bind_cyclic(u, v)
    raise TypeError("both arguments must be hypervectors of the same family")


def binary_to_cyclic(v: BinaryHypervector) -> CyclicHypervector:
    """``+1 -> 0``, ``-1 -> 1``."""
    return CyclicHypervector(2, 1 - v.bits())


def cyclic_to_binary(v: CyclicHypervector) -> BinaryHypervector:
    if v.order != 2:
        raise ValueError("only order-2 cyclic vectors map to binary")
    return BinaryHypervector.from_bits(1 - v.elems)


# ---------------------------------------------------------------------------
# canonical record: b"HV01" | kind u8 | order u8 | D u64 | payload

RECORD_MAGIC = b"HV01"
_HEADER = struct.Struct("<4sBBQ")


def to_record(v: Hypervector) -> bytes:
    if isinstance(v, BinaryHypervector):
        return _HEADER.pack(RECORD_MAGIC, 0, 0, v.dim) + v.words.astype("<u8").tobytes()
    if isinstance(v, CyclicHypervector):
        return _HEADER.pack(RECORD_MAGIC, 1, v.order % 256, v.dim) + v.elems.tobytes()
    raise TypeError(f"not a hypervector: {type(v).__name__}")


def from_record(buf: bytes | memoryview, offset: int = 0) -> tuple[Hypervector, int]:
    """Parse one record starting at ``offset``; returns the vector and the next offset."""
    if len(buf) - offset < _HEADER.size:
        raise ValueError("truncated hypervector record header")
    magic, kind, order, dim = _HEADER.unpack_from(buf, offset)
    if magic != RECORD_MAGIC:
        raise ValueError(f"bad hypervector magic {magic!r}")
    offset += _HEADER.size
    if kind == 0:
        size = n_words(dim) * 8
        if len(buf) - offset < size:
            raise ValueError("truncated binary payload")
        words = np.frombuffer(buf, dtype="<u8", count=n_words(dim), offset=offset)
        return BinaryHypervector(dim, words.astype(np.uint64)), offset + size
    if kind == 1:
        if len(buf) - offset < dim:
            raise ValueError("truncated cyclic payload")
        elems = np.frombuffer(buf, dtype=np.uint8, count=dim, offset=offset)
        return CyclicHypervector(order or 256, elems), offset + dim
    raise ValueError(f"unknown hypervector kind {kind}")
