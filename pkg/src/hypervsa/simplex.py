"""Dense two-phase simplex.

Entering columns follow the steepest reduced cost; after a run of degenerate
pivots the solver switches to Bland's rule (lowest index enters, lowest basic
index leaves on ties), which cannot cycle, and switches back once the
objective moves again.

Solves ``min c @ x`` subject to ``A_eq x = b_eq``, ``A_ub x <= b_ub``, ``x >= 0``.
Small problems only (a few hundred rows, a few thousand columns).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9
DEGENERATE_STREAK = 50


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None
    objective: float
    infeasibility: float
    artificial_rows: list[int]


def _pivot(t: np.ndarray, row: int, col: int) -> None:
    t[row] /= t[row, col]
    others = np.flatnonzero(t[:, col])
    others = others[others != row]
    if others.size:
        t[others] -= np.outer(t[others, col], t[row])


def _run(t: np.ndarray, basis: np.ndarray, allowed: np.ndarray, max_iter: int) -> str:
    """Minimize the objective in the last row of ``t`` (reduced costs) in place."""
    m = t.shape[0] - 1
    stall = 0
    for _ in range(max_iter):
        costs = t[-1, :-1]
        enter = np.flatnonzero((costs < -PIVOT_TOL) & allowed)
        if enter.size == 0:
            return "optimal"
        if stall >= DEGENERATE_STREAK:
            col = int(enter[0])  # Bland
        else:
            col = int(enter[np.argmin(costs[enter])])
        column = t[:m, col]
        pos = column > PIVOT_TOL
        if not pos.any():
            return "unbounded"
        ratios = np.full(m, np.inf)
        ratios[pos] = t[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + PIVOT_TOL * max(1.0, abs(best)))
        row = int(ties[np.argmin(basis[ties])])  # lowest basic index leaves
        before = t[-1, -1]
        _pivot(t, row, col)
        stall = stall + 1 if abs(t[-1, -1] - before) <= PIVOT_TOL else 0
        basis[row] = col
    raise RuntimeError("simplex iteration limit reached")


def solve(
    c: np.ndarray,
    a_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
    a_ub: np.ndarray | None = None,
    b_ub: np.ndarray | None = None,
    max_iter: int = 50_000,
) -> LpResult:
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    blocks, rhs, slack_rows = [], [], []
    if a_ub is not None and len(a_ub):
        blocks.append(np.asarray(a_ub, dtype=float))
        rhs.append(np.asarray(b_ub, dtype=float))
        slack_rows.append(len(b_ub))
    else:
        slack_rows.append(0)
    if a_eq is not None and len(a_eq):
        blocks.append(np.asarray(a_eq, dtype=float))
        rhs.append(np.asarray(b_eq, dtype=float))
    a = np.vstack(blocks) if blocks else np.zeros((0, n))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    m = a.shape[0]
    n_slack = slack_rows[0]

    # Standard form with slacks, then flip rows so the right-hand side is >= 0.
    a_std = np.zeros((m, n + n_slack))
    a_std[:, :n] = a
    a_std[np.arange(n_slack), n + np.arange(n_slack)] = 1.0
    neg = b < 0
    a_std[neg] *= -1
    b = np.where(neg, -b, b)

    # Rows whose slack is +1 after flipping can start with the slack basic.
    basis = np.full(m, -1)
    for i in range(n_slack):
        if not neg[i]:
            basis[i] = n + i
    need_art = np.flatnonzero(basis < 0)
    n_art = need_art.size
    width = n + n_slack + n_art
    t = np.zeros((m + 1, width + 1))
    t[:m, : n + n_slack] = a_std
    t[:m, -1] = b
    for k, i in enumerate(need_art):
        t[i, n + n_slack + k] = 1.0
        basis[i] = n + n_slack + k

    # Phase 1: minimize the sum of artificials.
    t[-1, n + n_slack : width] = 1.0
    for i in need_art:
        t[-1] -= t[i]
    allowed = np.ones(width, dtype=bool)
    _run(t, basis, allowed, max_iter)
    infeas = -t[-1, -1]
    art_rows = [int(i) for i in range(m) if basis[i] >= n + n_slack and t[i, -1] > FEAS_TOL]
    if infeas > FEAS_TOL:
        return LpResult("infeasible", None, np.nan, float(infeas), art_rows)

    # Drive zero-level artificials out of the basis where possible.
    for i in range(m):
        if basis[i] >= n + n_slack:
            cand = np.flatnonzero(np.abs(t[i, : n + n_slack]) > PIVOT_TOL)
            if cand.size:
                _pivot(t, i, int(cand[0]))
                basis[i] = int(cand[0])

    # Phase 2 on the original objective; artificials may no longer enter.
    allowed = np.zeros(width, dtype=bool)
    allowed[: n + n_slack] = True
    t[-1] = 0.0
    t[-1, :n] = c
    for i in range(m):
        if basis[i] < width and t[-1, basis[i]] != 0:
            t[-1] -= t[-1, basis[i]] * t[i]
    status = _run(t, basis, allowed, max_iter)
    x = np.zeros(width)
    x[basis] = t[:m, -1]
    return LpResult(status, x[:n], float(c @ x[:n]), float(max(infeas, 0.0)), [])
