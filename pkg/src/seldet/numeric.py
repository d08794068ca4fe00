"""Numeric LDL^T factorization on a precomputed symbolic pattern.

The factorization is left-looking: column j of L is produced by applying
the Schur updates of all earlier columns k with L_jk != 0, then dividing
by the pivot.  Those source columns are found with the classic row-list
scheme — each still-active column is filed under the row index of its
next unconsumed pattern entry, so no row structure is ever searched for.

A multiply-add counter is maintained and must come out equal to the
symbolic prediction sum(m_i^2) - n on every input: each segment update
costs two FLOPs per touched entry (one multiply, one subtract) and each
column finalization costs one division per below-diagonal entry.  The
per-position products d_k * L_ik needed by the updates are kept from the
pre-division column values rather than recomputed, which is what keeps
the count exact.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    NearSingularWarning,
    NonPositivePivotError,
    PatternMismatchError,
    SizeMismatchError,
)
from .sparse_core import Permutation, SparseSymmetric, permute_symmetric
from .symbolic import SymbolicFactor

__all__ = ["LdlFactor", "ldlt_factorize", "log_det", "solve"]

PIVOT_TOL_ENV = "SELDET_PIVOT_TOL"


@dataclass(frozen=True)
class LdlFactor:
    """Unit-lower-triangular L and diagonal D with PAP^T = LDL^T.

    ``l_values`` aligns with the strictly-lower symbolic pattern;
    ``ld_values`` holds the matching entries of D*L (the pre-division
    column values), kept because both the factorization itself and the
    solver's forward sweep consume them.
    """

    sym: SymbolicFactor
    l_values: np.ndarray
    ld_values: np.ndarray
    d: np.ndarray
    flops: int

    @property
    def n(self) -> int:
        return self.sym.n

    @property
    def perm(self) -> Permutation:
        return self.sym.perm


def _near_singular_threshold(a: SparseSymmetric) -> float:
    """Default warning threshold: 1e-13 times the largest diagonal entry."""
    env = os.environ.get(PIVOT_TOL_ENV)
    if env is not None:
        return float(env)
    diag = a.diagonal()
    scale = float(np.max(np.abs(diag))) if a.n else 0.0
    return 1e-13 * scale


def ldlt_factorize(a: SparseSymmetric, sym: SymbolicFactor,
                   pivot_tol: float = 0.0,
                   near_tol: float | None = None) -> LdlFactor:
    """Factor PAP^T = LDL^T on the pattern prepared by ``sym``.

    Raises NonPositivePivotError as soon as a pivot d_j <= pivot_tol
    (default 0: the input was not positive definite), and emits a single
    NearSingularWarning if any accepted pivot falls below ``near_tol``
    (default 1e-13 * max |A_ii|, overridable via SELDET_PIVOT_TOL).
    """
    if sym.n != a.n:
        raise SizeMismatchError(f"symbolic factor is for n={sym.n}, matrix has n={a.n}")
    ap = permute_symmetric(a, sym.perm)
    if near_tol is None:
        near_tol = _near_singular_threshold(ap)
    n = sym.n
    colptr, rows = sym.l_col_ptr, sym.l_row_idx
    l_values = np.empty(rows.size)
    ld_values = np.empty(rows.size)
    d = np.empty(n)
    x = np.zeros(n)

    # Row lists: head[i] = first column whose next pattern entry has row i,
    # linked through nxt[]; pos[k] = offset of that entry in column k.
    head = np.full(n, -1, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)
    pos = np.empty(n, dtype=np.int64)
    flops = 0
    near_count = 0
    first_near = -1

    for j in range(n):
        lo, hi = colptr[j], colptr[j + 1]
        pattern = rows[lo:hi]
        # load column j of the permuted matrix into the scatter workspace
        x[pattern] = 0.0
        x[j] = 0.0
        arows, avals = ap.column(j)
        below = arows[1:] if (arows.size and arows[0] == j) else arows
        if below.size:
            at = np.searchsorted(pattern, below)
            if np.any(at >= pattern.size) or np.any(
                    pattern[np.minimum(at, pattern.size - 1)] != below):
                raise PatternMismatchError(
                    f"matrix entry outside the symbolic pattern in column {j}")
        x[arows] = avals

        # apply every pending column update that reaches row j
        k = head[j]
        while k != -1:
            knext = nxt[k]
            pk, pend = pos[k], colptr[k + 1]
            seg_rows = rows[pk:pend]
            x[seg_rows] -= l_values[pk] * ld_values[pk:pend]
            flops += 2 * (pend - pk)
            pk += 1
            if pk < pend:
                pos[k] = pk
                r = rows[pk]
                nxt[k] = head[r]
                head[r] = k
            k = knext

        dj = x[j]
        if dj <= pivot_tol:
            raise NonPositivePivotError(j, float(dj))
        if dj < near_tol:
            near_count += 1
            if first_near < 0:
                first_near = j
        d[j] = dj
        col = x[pattern]
        ld_values[lo:hi] = col
        l_values[lo:hi] = col / dj
        flops += hi - lo
        if hi > lo:
            pos[j] = lo
            r = pattern[0]
            nxt[j] = head[r]
            head[r] = j

    if near_count:
        warnings.warn(
            f"{near_count} pivot(s) below the near-singular threshold "
            f"{near_tol:g} (first at column {first_near})",
            NearSingularWarning,
            stacklevel=2,
        )
    return LdlFactor(sym=sym, l_values=l_values, ld_values=ld_values,
                     d=d, flops=flops)


def log_det(f: LdlFactor) -> float:
    """log det A = sum of log d_i (the factorization guarantees d_i > 0)."""
    return float(np.sum(np.log(f.d)))


def solve(f: LdlFactor, b: np.ndarray) -> np.ndarray:
    """Solve A x = b through the factor: x = P^T L^-T D^-1 L^-1 P b."""
    b = np.asarray(b, dtype=np.float64)
    n = f.n
    if b.shape != (n,):
        raise SizeMismatchError(f"right-hand side has shape {b.shape}, expected ({n},)")
    perm = f.perm.perm
    colptr, rows = f.sym.l_col_ptr, f.sym.l_row_idx
    lv = f.l_values
    y = b[perm].copy()
    for j in range(n):
        lo, hi = colptr[j], colptr[j + 1]
        if hi > lo:
            y[rows[lo:hi]] -= y[j] * lv[lo:hi]
    y /= f.d
    for j in range(n - 1, -1, -1):
        lo, hi = colptr[j], colptr[j + 1]
        if hi > lo:
            y[j] -= lv[lo:hi] @ y[rows[lo:hi]]
    x = np.empty(n)
    x[perm] = y
    return x


def reconstruct_dense(f: LdlFactor) -> np.ndarray:
    """Dense P^T (L D L^T) P — test helper for small instances."""
    n = f.n
    ldense = np.eye(n)
    colptr, rows = f.sym.l_col_ptr, f.sym.l_row_idx
    for j in range(n):
        lo, hi = colptr[j], colptr[j + 1]
        ldense[rows[lo:hi], j] = f.l_values[lo:hi]
    ap = ldense @ np.diag(f.d) @ ldense.T
    perm = f.perm.perm
    out = np.empty_like(ap)
    out[np.ix_(perm, perm)] = ap
    return out
