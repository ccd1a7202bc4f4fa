"""Correlated basis hypervectors from a target similarity matrix.

The construction: push the target through ``sin(pi/2 * M)``, clip the negative
part of its spectrum, draw correlated Gaussians from the clipped factor, and
quantize them. Sign quantization gives binary hypervectors whose expected
pairwise similarity is ``(2/pi) arcsin`` of the Gaussian correlation, which
undoes the sine exactly whenever no clipping was needed. For ``Z/nZ`` the
Gaussians are standardized and cut at the ``n``-quantiles of the normal law.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from . import core
from ._kernels import jacobi_eigh
from .core import BINARY, Family
from .errors import DataError, DegenerateTargetError, NumericError
from .rng import SeededRng, as_rng, chunk_bounds, parallel_map

SYMMETRY_TOL = 1e-12
FACTOR_SYMMETRY_TOL = 1e-8
JACOBI_TOL = 1e-10
CLIPPED_WARN_RATIO = 0.05
COLUMN_BLOCK = 1024
DEFAULT_SIGMA = 16.0


class ClippedSpectrumWarning(UserWarning):
    """The target needed a large eigenvalue clip; it is far from binary-expressible."""


@dataclass(frozen=True)
class SimilarityTarget:
    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValueError("similarity target must be a non-empty square matrix")
        if np.abs(m - m.T).max() > SYMMETRY_TOL:
            raise ValueError("similarity target must be symmetric")
        if np.abs(np.diag(m) - 1).max() > SYMMETRY_TOL:
            raise ValueError("similarity target must have a unit diagonal")
        if np.any(np.abs(m) > 1 + SYMMETRY_TOL):
            raise ValueError("similarity entries must lie in [-1, 1]")
        m = np.clip((m + m.T) / 2, -1.0, 1.0)
        np.fill_diagonal(m, 1.0)
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def constant(cls, n: int, off_diagonal: float) -> SimilarityTarget:
        m = np.full((n, n), float(off_diagonal))
        np.fill_diagonal(m, 1.0)
        return cls(m)

    @classmethod
    def read(cls, path: str | Path) -> SimilarityTarget:
        """Text format: first line ``n``, then ``n`` rows of ``n`` numbers."""
        try:
            lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
        except (OSError, UnicodeDecodeError) as exc:
            raise DataError(f"cannot read target {path}: {exc}") from exc
        try:
            n = int(lines[0].strip())
            rows = [[float(x) for x in ln.split()] for ln in lines[1 : n + 1]]
        except (IndexError, ValueError) as exc:
            raise DataError(f"{path}: malformed target matrix ({exc})") from exc
        if len(rows) != n or any(len(r) != n for r in rows):
            raise DataError(f"{path}: expected {n} rows of {n} values")
        try:
            return cls(np.array(rows))
        except ValueError as exc:
            raise DataError(f"{path}: {exc}") from exc

    def write(self, path: str | Path) -> None:
        rows = [" ".join(repr(float(x)) for x in row) for row in self.entries]
        Path(path).write_text(f"{self.n}\n" + "\n".join(rows) + "\n")


@dataclass(frozen=True)
class GaussianFactor:
    """Eigenpairs of the sine-transformed target with the negative part clipped.

    Columns of ``vectors`` are orthonormal; ``values`` are the clipped
    (non-negative) eigenvalues in descending order.
    """

    vectors: np.ndarray
    values: np.ndarray
    clipped_mass: float

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    def loading(self) -> np.ndarray:
        """``U diag(sqrt(lambda_+))``: multiplying by iid normals gives the Gaussians."""
        return self.vectors * np.sqrt(self.values)[None, :]

    def reconstruction(self) -> np.ndarray:
        return (self.vectors * self.values[None, :]) @ self.vectors.T


@dataclass(frozen=True)
class CorrelatedBasis:
    """``n`` hypervectors of one family, indexed by entity (e.g. quantized value).

    ``data`` is the packed ``(n, words)`` uint64 matrix for binary bases and the
    ``(n, D)`` uint8 element matrix for cyclic bases.
    """

    family: Family
    dim: int
    data: np.ndarray
    target: SimilarityTarget | None = None
    seed: int = 0

    def __post_init__(self):
        expected = (core.n_words(self.dim),) if self.family.binary else (self.dim,)
        if self.data.ndim != 2 or self.data.shape[1:] != expected:
            raise ValueError("basis data shape does not match family and dim")
        if self.target is not None and self.target.n != self.data.shape[0]:
            raise ValueError("basis length must equal target size")

    def __len__(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, i: int) -> core.Hypervector:
        if self.family.binary:
            return core.BinaryHypervector(self.dim, self.data[i])
        return core.CyclicHypervector(self.family.order, self.data[i])

    @property
    def vectors(self) -> list[core.Hypervector]:
        return [self[i] for i in range(len(self))]

    def elements(self) -> np.ndarray:
        """Group elements ``(n, D)``; binary uses the ``+1 -> 0`` convention."""
        if self.family.binary:
            return (1 - core.unpack_bits(self.data, self.dim)).astype(np.uint8)
        return self.data

    def to_bytes(self) -> bytes:
        head = _BASIS_HEADER.pack(BASIS_MAGIC, int(not self.family.binary), self.family.code, len(self), self.dim, self.seed)
        return head + b"".join(core.to_record(v) for v in self.vectors)

    @classmethod
    def from_bytes(cls, buf: bytes) -> CorrelatedBasis:
        if len(buf) < _BASIS_HEADER.size:
            raise DataError("truncated basis header")
        magic, kind, code, n, dim, seed = _BASIS_HEADER.unpack_from(buf, 0)
        if magic != BASIS_MAGIC:
            raise DataError(f"bad basis magic {magic!r}")
        family = core.family_from_code(code, cyclic=bool(kind))
        offset = _BASIS_HEADER.size
        rows = []
        try:
            for _ in range(n):
                v, offset = core.from_record(buf, offset)
                rows.append(v.words if family.binary else v.elems)
        except ValueError as exc:
            raise DataError(str(exc)) from exc
        if offset != len(buf):
            raise DataError("trailing bytes after basis records")
        return cls(family, dim, np.stack(rows), None, seed)

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> CorrelatedBasis:
        try:
            return cls.from_bytes(Path(path).read_bytes())
        except OSError as exc:
            raise DataError(f"cannot read basis {path}: {exc}") from exc


BASIS_MAGIC = b"CB01"
_BASIS_HEADER = struct.Struct("<4sBBIQQ")


# ---------------------------------------------------------------------------


def rbf_target(values: Sequence[float], sigma: float = DEFAULT_SIGMA, rescale: tuple[float, float] | None = None) -> SimilarityTarget:
    """Gaussian-kernel similarity between scalar entity values.

    With ``rescale=(lo, hi)`` the off-diagonal range is mapped affinely onto
    ``[lo, hi]`` and the diagonal is reset to 1.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    x = np.asarray(values, dtype=float)
    m = np.exp(-((x[:, None] - x[None, :]) ** 2) / (2.0 * sigma**2))
    if rescale is not None:
        lo, hi = rescale
        if not -1.0 <= lo < hi <= 1.0:
            raise ValueError("rescale bounds must satisfy -1 <= lo < hi <= 1")
        off = ~np.eye(len(x), dtype=bool)
        if off.any():
            mn, mx = m[off].min(), m[off].max()
            span = mx - mn
            m = lo + (m - mn) * ((hi - lo) / span) if span > 0 else np.full_like(m, hi)
        np.fill_diagonal(m, 1.0)
    return SimilarityTarget(m)


def sin_transform(target: SimilarityTarget | np.ndarray) -> np.ndarray:
    m = target.entries if isinstance(target, SimilarityTarget) else np.asarray(target, dtype=float)
    out = np.sin(np.pi / 2 * m)
    np.fill_diagonal(out, 1.0)
    return out


def psd_factor(s: np.ndarray, warn: bool = True) -> GaussianFactor:
    """Eigendecompose ``s`` and clip negative eigenvalues to zero.

    The clipped reconstruction is the Frobenius-nearest PSD matrix to ``s``.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("matrix must be square")
    if np.abs(s - s.T).max() > FACTOR_SYMMETRY_TOL:
        raise ValueError("matrix must be symmetric")
    s = (s + s.T) / 2
    values, vectors, sweeps = jacobi_eigh(s, JACOBI_TOL, 100)
    if sweeps < 0:
        raise NumericError("Jacobi eigendecomposition did not converge")
    order = np.argsort(-values, kind="stable")
    values, vectors = values[order], vectors[:, order]
    negative = values < 0
    clipped = float(-values[negative].sum())
    values = np.where(negative, 0.0, values)
    trace = float(np.trace(s))
    if warn and trace > 0 and clipped / trace > CLIPPED_WARN_RATIO:
        warnings.warn(
            f"clipped eigenvalue mass is {clipped / trace:.1%} of the trace; "
            "the target is far from binary-expressible",
            ClippedSpectrumWarning,
            stacklevel=2,
        )
    return GaussianFactor(vectors, values, clipped)


def arcsine_moment(rho: float) -> float:
    """``E[sgn X sgn Y]`` for standard jointly Gaussian ``X, Y`` with correlation ``rho``."""
    if abs(rho) > 1:
        raise ValueError("correlation must lie in [-1, 1]")
    value = 2.0 / math.pi * math.asin(rho)
    # rational points (rho = sin of a multiple of pi/12) come back exact
    snapped = round(value * 6) / 6
    return snapped if abs(value - snapped) < 1e-14 else value


def expected_binary_similarity(target: SimilarityTarget) -> np.ndarray:
    """What sign sampling from the clipped factor achieves in expectation."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClippedSpectrumWarning)
        cov = psd_factor(sin_transform(target)).reconstruction()
    d = np.sqrt(np.clip(np.diag(cov), 1e-300, None))
    corr = np.clip(cov / d[:, None] / d[None, :], -1.0, 1.0)
    out = 2.0 / np.pi * np.arcsin(corr)
    np.fill_diagonal(out, 1.0)
    return out


def _gaussian_blocks(loading: np.ndarray, dim: int, rng: SeededRng, threads: int | None, fn):
    """Apply ``fn`` to ``loading @ X`` one column block at a time.

    Block ``b`` draws its normals from stream ``rng.child(b)``, so the result
    is the same for every thread count.
    """
    n = loading.shape[0]

    def work(args):
        b, (lo, hi) = args
        x = rng.child(b).generator().standard_normal((n, hi - lo))
        return fn(loading @ x)

    return parallel_map(work, list(enumerate(chunk_bounds(dim, COLUMN_BLOCK))), threads)


def _factor_for(target: SimilarityTarget) -> GaussianFactor:
    return psd_factor(sin_transform(target))


def sample_correlated_binary(
    target: SimilarityTarget,
    dim: int,
    rng: SeededRng | int | None = None,
    threads: int | None = None,
    factor: GaussianFactor | None = None,
) -> CorrelatedBasis:
    """Binary hypervectors whose pairwise similarity approximates ``target``."""
    if dim < 1:
        raise ValueError("dim must be at least 1")
    rng = as_rng(rng)
    factor = factor or _factor_for(target)
    blocks = _gaussian_blocks(factor.loading(), dim, rng, threads, lambda z: (z >= 0).astype(np.uint8))
    bits = np.concatenate(blocks, axis=1)
    return CorrelatedBasis(BINARY, dim, core.pack_bits(bits), target, rng.seed)


def sample_correlated_cyclic(
    target: SimilarityTarget,
    dim: int,
    order: int,
    rng: SeededRng | int | None = None,
    threads: int | None = None,
    factor: GaussianFactor | None = None,
) -> CorrelatedBasis:
    """Cyclic-group hypervectors: standardized Gaussians cut at normal quantiles."""
    if order < 2:
        raise ValueError("order must be at least 2")
    if dim < 1:
        raise ValueError("dim must be at least 1")
    rng = as_rng(rng)
    factor = factor or _factor_for(target)
    loading = factor.loading()
    scale = np.sqrt((loading**2).sum(axis=1))
    zero = np.flatnonzero(scale <= 1e-12)
    if zero.size:
        raise DegenerateTargetError(int(zero[0]))
    loading = loading / scale[:, None]

    def quantize(z):
        q = np.floor(order * ndtr(z)).astype(np.int64)
        return np.minimum(q, order - 1).astype(np.uint8)

    blocks = _gaussian_blocks(loading, dim, rng, threads, quantize)
    return CorrelatedBasis(Family(order), dim, np.concatenate(blocks, axis=1), target, rng.seed)


def sample_correlated(target: SimilarityTarget, dim: int, family: Family, rng=None, threads=None) -> CorrelatedBasis:
    if family.binary:
        return sample_correlated_binary(target, dim, rng, threads)
    return sample_correlated_cyclic(target, dim, family.order, rng, threads)


def random_basis(n: int, dim: int, family: Family, rng: SeededRng | int | None = None) -> CorrelatedBasis:
    """Independent uniform hypervectors (the classic initialization)."""
    gen = as_rng(rng).generator()
    seed = as_rng(rng).seed
    if family.binary:
        bits = gen.integers(0, 2, size=(n, dim), dtype=np.uint8)
        return CorrelatedBasis(BINARY, dim, core.pack_bits(bits), None, seed)
    return CorrelatedBasis(family, dim, gen.integers(0, family.order, size=(n, dim), dtype=np.uint8), None, seed)


def empirical_similarity(basis: CorrelatedBasis, spec: core.CyclicSimilaritySpec | None = None) -> np.ndarray:
    """Pairwise similarity matrix of the basis vectors."""
    if basis.family.binary:
        signs = core.unpack_bits(basis.data, basis.dim).astype(np.float64) * 2 - 1
        out = signs @ signs.T / basis.dim
    else:
        spec = spec or core.standard_spec(basis.family.order)
        if spec.order != basis.family.order:
            raise ValueError("similarity spec order does not match the basis")
        e = basis.data.astype(np.float64)
        out = np.zeros((len(basis), len(basis)))
        for k, w in spec.folded_weights():
            ang = 2 * np.pi * k / spec.order * e
            c, s = np.cos(ang), np.sin(ang)
            out += w * (c @ c.T + s @ s.T)
        out /= sum(spec.alpha) * basis.dim
    out = (out + out.T) / 2
    np.fill_diagonal(out, 1.0)
    return out
