"""What similarity matrices binary HDC can and cannot produce.

Every binary similarity matrix is an average over coordinates of rank-one
sign matrices ``s s^T``, so a target is expressible exactly when it lies in
the convex hull of those atoms. That is a small linear program for ``n <= 12``.
The module also holds the limits of classically initialized vectors (built
from independent random generators by binding and permutation) and the
bundling-angle formulas.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import core, simplex
from .rng import SeededRng, as_rng, parallel_map
from .rff import SimilarityTarget

MAX_ATOMS_N = 12
EXACT_BINOMIAL_K = 30
MAX_ANGLE_K = 500


@dataclass(frozen=True)
class SignAtom:
    pattern: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.pattern)

    @property
    def outer(self) -> np.ndarray:
        s = np.array(self.pattern, dtype=float)
        return np.outer(s, s)


@dataclass
class ExpressibilityReport:
    feasible: bool
    weights: np.ndarray | None
    residual: float
    certificate_note: str
    atoms: list[SignAtom] = field(default_factory=list, repr=False)

    def nonzero_weights(self, tol: float = 1e-12) -> dict[tuple[int, ...], float]:
        if self.weights is None:
            return {}
        return {a.pattern: float(w) for a, w in zip(self.atoms, self.weights) if w > tol}


def _check_n(n: int):
    if not 2 <= n <= MAX_ATOMS_N:
        raise ValueError(f"n must be in [2, {MAX_ATOMS_N}], got {n}")


def enumerate_atoms(n: int) -> list[SignAtom]:
    """All ``2^(n-1)`` sign patterns with first entry +1, in lexicographic order (+ before -)."""
    _check_n(n)
    return [SignAtom((1,) + rest) for rest in itertools.product((1, -1), repeat=n - 1)]


def _pair_matrix(atoms: list[SignAtom]) -> tuple[np.ndarray, list[tuple[int, int]]]:
    n = atoms[0].n
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    p = np.array([a.pattern for a in atoms], dtype=float)  # (atoms, n)
    cols = np.array([p[:, i] * p[:, j] for i, j in pairs])  # (pairs, atoms)
    return cols, pairs


def check_binary_expressible(target: SimilarityTarget | np.ndarray, eps: float = 0.0) -> ExpressibilityReport:
    """Decide whether ``target`` is within ``eps`` (entrywise) of the atom hull."""
    if not isinstance(target, SimilarityTarget):
        target = SimilarityTarget(np.asarray(target, dtype=float))
    if eps < 0:
        raise ValueError("eps must be non-negative")
    n = target.n
    _check_n(n)
    atoms = enumerate_atoms(n)
    a_pairs, pairs = _pair_matrix(atoms)
    m_vals = np.array([target.entries[i, j] for i, j in pairs])
    k = len(atoms)
    res = simplex.solve(
        c=np.zeros(k),
        a_eq=np.ones((1, k)),
        b_eq=np.ones(1),
        a_ub=np.vstack([a_pairs, -a_pairs]),
        b_ub=np.concatenate([m_vals + eps, -(m_vals - eps)]),
    )
    if res.status != "optimal":
        violated = sorted({pairs[r % len(pairs)] for r in res.artificial_rows if r < 2 * len(pairs)})
        note = (
            f"phase-1 minimum total violation {res.infeasibility:.6g} > 0: no convex combination "
            f"of the {k} sign atoms meets every pair bound at eps={eps:g}"
        )
        if violated:
            note += "; pair constraints still carrying violation " + ", ".join(f"({i},{j})" for i, j in violated)
        return ExpressibilityReport(False, None, math.inf, note, atoms)
    w = np.clip(res.x, 0.0, None)
    w /= w.sum()
    achieved = sum(wi * a.outer for wi, a in zip(w, atoms))
    residual = float(np.abs(achieved - target.entries).max())
    note = f"convex combination of {int((w > 1e-12).sum())} atoms; max deviation {residual:.3g}"
    return ExpressibilityReport(True, w, residual, note, atoms)


# ---------------------------------------------------------------------------
# classic random initialization


def verify_classic_limit(em: np.ndarray, tol: float = 0.0) -> bool:
    """True iff some off-diagonal entry of the 3x3 matrix is ``>= -tol``.

    For classically initialized vectors ``E[M]`` has off-diagonals ``xy, xz, yz``
    whose product is a square, so they cannot all be negative.
    """
    em = np.asarray(em, dtype=float)
    if em.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    if np.abs(em - em.T).max() > 1e-9 or np.abs(np.diag(em) - 1).max() > 1e-9:
        raise ValueError("expected a symmetric matrix with unit diagonal")
    return bool(max(em[0, 1], em[0, 2], em[1, 2]) >= -tol)


@dataclass(frozen=True)
class Gen:
    """Leaf: the generator hypervector with this index."""

    index: int


@dataclass(frozen=True)
class Bind:
    left: object
    right: object


@dataclass(frozen=True)
class Permute:
    child: object
    shift: int


def _eval_expr(node, gens: list[np.ndarray]) -> np.ndarray:
    if isinstance(node, Gen):
        return gens[node.index]
    if isinstance(node, Bind):
        return _eval_expr(node.left, gens) * _eval_expr(node.right, gens)
    if isinstance(node, Permute):
        return np.roll(_eval_expr(node.child, gens), node.shift)
    raise ValueError(f"only Gen, Bind and Permute nodes are allowed, got {type(node).__name__}")


def _validate_expr(node, k: int):
    if isinstance(node, Gen):
        if not 0 <= node.index < k:
            raise ValueError(f"generator index {node.index} out of range")
    elif isinstance(node, Bind):
        _validate_expr(node.left, k)
        _validate_expr(node.right, k)
    elif isinstance(node, Permute):
        _validate_expr(node.child, k)
    else:
        raise ValueError(f"only Gen, Bind and Permute nodes are allowed, got {type(node).__name__}")


def classic_init_expectation(
    outputs: tuple,
    p_plus: list[float],
    trials: int,
    dim: int,
    rng: SeededRng | int | None = None,
    threads: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo ``E[M]`` for three vectors built from random generators.

    ``outputs`` holds three expressions over ``Gen``, ``Bind`` and ``Permute``;
    generator ``k`` has independent coordinates equal to +1 with probability
    ``p_plus[k]``. Returns the mean similarity matrix and its standard error.
    """
    if len(outputs) != 3:
        raise ValueError("need exactly three output expressions")
    for out in outputs:
        _validate_expr(out, len(p_plus))
    rng = as_rng(rng)
    probs = np.asarray(p_plus, dtype=float)

    def trial(t: int) -> np.ndarray:
        gen = rng.child(t).generator()
        gens = [np.where(gen.random(dim) < p, 1, -1).astype(np.int8) for p in probs]
        vs = np.stack([_eval_expr(o, gens) for o in outputs]).astype(np.float64)
        return vs @ vs.T / dim

    samples = np.stack(parallel_map(trial, range(trials), threads))
    mean = samples.mean(axis=0)
    se = samples.std(axis=0, ddof=1) / np.sqrt(trials) if trials > 1 else np.full((3, 3), np.inf)
    return mean, se


# ---------------------------------------------------------------------------
# bundling angle


def _central_ratio(k: int) -> float:
    """``C(2k, k) / 4^k``, exact for small ``k`` and via log-gamma beyond."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k <= EXACT_BINOMIAL_K:
        return math.comb(2 * k, k) / 4**k
    return math.exp(math.lgamma(2 * k + 1) - 2 * math.lgamma(k + 1) - 2 * k * math.log(2))


def bundling_angle_theory(k: int) -> float:
    """Expected angle in degrees between the bundle of ``2k+1`` random vectors and a member."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > MAX_ANGLE_K:
        raise ValueError(f"k must be at most {MAX_ANGLE_K}")
    return math.degrees(math.acos(_central_ratio(k)))


def pk(k: int) -> float:
    """Probability that a member's coordinate survives bundling with ``2k`` others."""
    return (1.0 + _central_ratio(k)) / 2.0


def pk_monotone_check(kmax: int) -> bool:
    return all(pk(k + 1) < pk(k) for k in range(kmax))


def bundling_angle_empirical(k: int, dim: int, trials: int, rng: SeededRng | int | None = None, threads: int | None = None) -> float:
    """Mean angle (degrees) between a bundle of ``2k+1`` random vectors and a random member."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if dim < 1000:
        raise ValueError("dim must be at least 1000")
    rng = as_rng(rng)
    m = 2 * k + 1

    def trial(t: int) -> float:
        gen = rng.child(t).generator()
        bits = gen.integers(0, 2, size=(m, dim), dtype=np.int8)
        votes = 2 * bits.sum(axis=0, dtype=np.int32) - m
        bundled = core.majority_from_votes(votes, gen)  # odd m: never tied
        member = 2 * bits[gen.integers(0, m)] - 1
        sim = int(bundled.astype(np.int32) @ member) / dim
        return math.degrees(math.acos(min(1.0, max(-1.0, sim))))

    return float(np.mean(parallel_map(trial, range(trials), threads)))
