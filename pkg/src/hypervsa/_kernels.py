"""Compiled inner loops (numba, GIL released so thread pools scale)."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def encode_rows(indices, basis, order, out):
    """``out[m] = sum_j roll(basis[indices[m, j]], j) mod order``.

    ``basis`` holds group elements (uint8). For the binary family the caller
    passes elements in the ``+1 -> 0`` convention with ``order = 2``, where
    the modular sum is the XOR that implements sign products.
    """
    n_rows, n_feat = indices.shape
    dim = basis.shape[1]
    acc = np.zeros(dim, dtype=np.uint32)
    for m in range(n_rows):
        acc[:] = 0
        for j in range(n_feat):
            s = j % dim
            row = basis[indices[m, j]]
            for d in range(s, dim):
                acc[d] += row[d - s]
            for d in range(s):
                acc[d] += row[dim - s + d]
        for d in range(dim):
            out[m, d] = acc[d] % order


@njit(nogil=True, cache=True)
def jacobi_eigh(a, tol, max_sweeps):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps)``; ``sweeps == -1`` means the
    off-diagonal Frobenius mass did not fall below ``tol``.
    """
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n)
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += 2.0 * a[p, q] * a[p, q]
        if np.sqrt(off) <= tol:
            return np.diag(a).copy(), v, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0:
                    t = 1.0 / (theta + np.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    off = 0.0
    for p in range(n):
        for q in range(p + 1, n):
            off += 2.0 * a[p, q] * a[p, q]
    if np.sqrt(off) <= tol:
        return np.diag(a).copy(), v, max_sweeps
    return np.diag(a).copy(), v, -1
