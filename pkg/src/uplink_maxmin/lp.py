"""Dense two-phase simplex for small linear programs.

Solves::

    maximize    c @ x
    subject to  A @ x <= b
                lo <= x <= hi

with finite `lo` and `hi` entries that may be ``+inf``. Bland's rule picks
both the entering and leaving variables, so the method terminates on
degenerate problems.

The tableau is kept in dictionary form: one row per basic variable and
one column per nonbasic variable, so a pivot costs ``O(m n)`` however many
slack variables there are. Phase 1 uses a single auxiliary variable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np


class LPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def build(cls, c, A=None, b=None, lo=None, hi=None) -> "LinearProgram":
        c = np.asarray(c, dtype=float).reshape(-1)
        n = c.shape[0]
        A = np.zeros((0, n)) if A is None else np.asarray(A, dtype=float).reshape(-1, n)
        b = np.zeros(0) if b is None else np.asarray(b, dtype=float).reshape(-1)
        lo = np.zeros(n) if lo is None else np.broadcast_to(np.asarray(lo, float), (n,)).copy()
        hi = np.full(n, np.inf) if hi is None else np.broadcast_to(np.asarray(hi, float), (n,)).copy()
        if A.shape[0] != b.shape[0]:
            raise ValueError(f"A has {A.shape[0]} rows but b has {b.shape[0]} entries")
        if not np.all(np.isfinite(lo)):
            raise ValueError("lower bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("need lo <= hi")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
            raise ValueError("c, A and b must be finite")
        return cls(c, A, b, lo, hi)

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]


@dataclass
class LPResult:
    status: LPStatus
    x: Optional[np.ndarray] = None
    value: Optional[float] = None
    pivots: int = 0
    message: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is LPStatus.OPTIMAL


class _Dictionary:
    """``x_B = rhs - T x_N`` with objective ``z = z0 - T[-1] x_N``.

    `basic` and `nonbasic` hold variable labels; Bland's rule compares
    labels, not positions.
    """

    def __init__(self, table, basic, nonbasic):
        self.t = table
        self.basic = basic
        self.nonbasic = nonbasic

    def pivot(self, row, col):
        t = self.t
        a = t[row, col]
        new_row = t[row] / a
        new_row[col] = 1.0 / a
        column = t[:, col].copy()
        t[:, col] = 0.0
        nz = np.flatnonzero(column)
        t[nz] -= np.outer(column[nz], new_row)
        t[row] = new_row
        self.basic[row], self.nonbasic[col] = self.nonbasic[col], self.basic[row]

    def run(self, tol, max_pivots, allowed=None):
        """Maximize the stored objective. Returns ``(state, pivots)``."""
        t = self.t
        m = t.shape[0] - 1
        pivots = 0
        while pivots < max_pivots:
            improving = t[-1, :-1] < -tol
            if allowed is not None:
                improving &= allowed
            cols = np.flatnonzero(improving)
            if cols.size == 0:
                return "optimal", pivots
            col = int(cols[np.argmin(self.nonbasic[cols])])
            column = t[:m, col]
            rows = np.flatnonzero(column > tol)
            if rows.size == 0:
                return "unbounded", pivots
            ratios = t[rows, -1] / column[rows]
            best = ratios.min()
            tied = rows[ratios <= best + tol * max(1.0, abs(best))]
            self.pivot(int(tied[np.argmin(self.basic[tied])]), col)
            pivots += 1
        return "stalled", pivots


def solve_lp(lp: LinearProgram, tol: float = 1e-9, max_pivots: int = 50_000) -> LPResult:
    """Solve `lp` with the two-phase simplex method.

    On ``OPTIMAL`` the returned point satisfies every constraint to within
    ``tol * max(1, |b_i|, |A_i| |x|)``; a point that fails that check is
    reported as ``NUMERICAL_FAILURE`` instead.
    """
    n = lp.n_vars
    shift = lp.lo
    width = lp.hi - lp.lo
    finite_hi = np.flatnonzero(np.isfinite(width))

    # y = x - lo >= 0; finite upper bounds become extra rows
    A = np.vstack([lp.A, np.eye(n)[finite_hi]])
    b = np.concatenate([lp.b - lp.A @ shift, width[finite_hi]])
    m = A.shape[0]
    scale = np.max(np.abs(A), axis=1) if n else np.zeros(m)
    scale[scale == 0] = 1.0
    A = A / scale[:, None]
    b = b / scale

    # labels: 0..n-1 structural, n..n+m-1 slacks, n+m auxiliary
    aux = n + m
    table = np.zeros((m + 1, n + 2))
    table[:m, :n] = A
    table[:m, n] = -1.0
    table[:m, -1] = b
    d = _Dictionary(table, np.arange(n, n + m), np.append(np.arange(n), aux))
    total = 0

    if m and b.min() < -tol:
        # phase 1: maximize -aux, starting from the most violated row
        table[-1, n] = 1.0
        worst = np.flatnonzero(b <= b.min() + tol * max(1.0, abs(b.min())))
        d.pivot(int(worst[np.argmin(d.basic[worst])]), n)
        state, piv = d.run(tol, max_pivots)
        total += piv + 1
        if state != "optimal":
            return LPResult(LPStatus.NUMERICAL_FAILURE, pivots=total, message=f"phase 1 {state}")
        if -table[-1, -1] > tol * max(1.0, float(np.max(np.abs(b)))):
            return LPResult(LPStatus.INFEASIBLE, pivots=total)
        if aux in d.basic:
            # degenerate: aux sits in the basis at zero; swap it for any usable column
            r = int(np.flatnonzero(d.basic == aux)[0])
            cols = np.flatnonzero(np.abs(table[r, :-1]) > tol)
            if cols.size:
                d.pivot(r, int(cols[np.argmax(np.abs(table[r, cols]))]))
                total += 1

    # drop the auxiliary column and express the objective in nonbasic terms
    keep = d.nonbasic != aux
    table = np.ascontiguousarray(table[:, np.append(keep, True)])
    d = _Dictionary(table, d.basic, d.nonbasic[keep])
    obj = np.zeros(table.shape[1])
    on_cols = d.nonbasic < n
    obj[:-1][on_cols] = -lp.c[d.nonbasic[on_cols]]
    for r in np.flatnonzero(d.basic < n):
        cj = lp.c[d.basic[r]]
        if cj:
            obj[:-1] += cj * table[r, :-1]
            obj[-1] += cj * table[r, -1]
    table[-1] = obj

    state, piv = d.run(tol, max_pivots)
    total += piv
    if state == "unbounded":
        return LPResult(LPStatus.UNBOUNDED, pivots=total)
    if state == "stalled":
        return LPResult(LPStatus.NUMERICAL_FAILURE, pivots=total, message="pivot limit in phase 2")

    y = np.zeros(n + m + 1)
    y[d.basic] = table[:m, -1]
    x = np.minimum(shift + np.clip(y[:n], 0.0, None), lp.hi)

    slack = lp.A @ x - lp.b
    # roundoff grows with the magnitude of the terms summed in each row
    bound = tol * np.maximum(1.0, np.maximum(np.abs(lp.b), np.abs(lp.A) @ np.abs(x)))
    if lp.A.shape[0] and np.any(slack > bound):
        return LPResult(LPStatus.NUMERICAL_FAILURE, x=x, pivots=total,
                        message=f"constraint residual {slack.max():.3e}")
    return LPResult(LPStatus.OPTIMAL, x=x, value=float(lp.c @ x), pivots=total)
