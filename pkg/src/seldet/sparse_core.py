"""Symmetric sparse matrices in compressed-column, lower-triangle storage.

Only the lower triangle (diagonal included) is stored; the upper triangle
is implied by symmetry.  Structural entries whose value happens to be zero
are kept, because derivative matrices share the pattern of the system
matrix even where their values vanish at a particular parameter point.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import IO, Iterable

import numpy as np

from .errors import (
    AsymmetricInputError,
    IndexOutOfRangeError,
    NotAPermutationError,
    ParseError,
    SizeMismatchError,
    UnsupportedFormatError,
)

__all__ = [
    "SparseSymmetric",
    "Permutation",
    "TripletList",
    "from_triplets",
    "read_matrix_market",
    "write_matrix_market",
    "permute_symmetric",
    "is_subpattern",
]

# Relative tolerance for explicit (i,j)/(j,i) pairs to count as consistent.
SYMMETRY_RTOL = 1e-12


@dataclass(frozen=True)
class SparseSymmetric:
    """Lower triangle of a symmetric matrix in compressed-column form.

    Attributes
    ----------
    n : int
        Matrix dimension.
    col_ptr : ndarray of int64, shape (n + 1,)
        Start offset of each column's entries; ``col_ptr[n]`` is the total
        number of stored entries.
    row_idx : ndarray of int64
        Row indices, strictly increasing within each column, all >= the
        column index.
    values : ndarray of float64
        Entry values aligned with ``row_idx``.
    """

    n: int
    col_ptr: np.ndarray
    row_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        col_ptr = np.ascontiguousarray(self.col_ptr, dtype=np.int64)
        row_idx = np.ascontiguousarray(self.row_idx, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "col_ptr", col_ptr)
        object.__setattr__(self, "row_idx", row_idx)
        object.__setattr__(self, "values", values)
        if self.n < 0 or col_ptr.shape != (self.n + 1,):
            raise SizeMismatchError("col_ptr must have length n + 1")
        if col_ptr[0] != 0 or col_ptr[-1] != row_idx.size or values.size != row_idx.size:
            raise SizeMismatchError("col_ptr does not index row_idx/values")
        if np.any(np.diff(col_ptr) < 0):
            raise SizeMismatchError("col_ptr must be non-decreasing")
        if row_idx.size:
            cols = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(col_ptr))
            if row_idx.min() < 0 or row_idx.max() >= self.n:
                raise IndexOutOfRangeError("row index outside matrix dimension")
            if np.any(row_idx < cols):
                raise SizeMismatchError("entry above the diagonal in lower-triangle storage")
            inside = np.diff(row_idx) <= 0
            bnd = col_ptr[1:-1]
            bnd = bnd[(bnd > 0) & (bnd < row_idx.size)]
            inside[bnd - 1] = False  # column boundaries may decrease
            if np.any(inside):
                raise SizeMismatchError("row indices must strictly increase within a column")
        for arr in (col_ptr, row_idx, values):
            arr.flags.writeable = False

    @property
    def nnz(self) -> int:
        """Number of stored (lower-triangle) entries."""
        return int(self.row_idx.size)

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices and values of stored column ``j``."""
        lo, hi = self.col_ptr[j], self.col_ptr[j + 1]
        return self.row_idx[lo:hi], self.values[lo:hi]

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Stored entries as parallel (row, col, value) arrays."""
        cols = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.col_ptr))
        return self.row_idx.copy(), cols, self.values.copy()

    def diagonal(self) -> np.ndarray:
        """Dense diagonal (zeros where the diagonal is structurally absent)."""
        d = np.zeros(self.n)
        rows, cols, vals = self.triplets()
        on_diag = rows == cols
        d[rows[on_diag]] = vals[on_diag]
        return d

    def to_dense(self) -> np.ndarray:
        """Full symmetric dense matrix; intended for tests and small oracles."""
        a = np.zeros((self.n, self.n))
        rows, cols, vals = self.triplets()
        a[rows, cols] = vals
        off = rows != cols
        a[cols[off], rows[off]] = vals[off]
        return a


@dataclass(frozen=True)
class Permutation:
    """A bijection on 0..n-1; ``perm`` maps new index -> old index."""

    perm: np.ndarray
    inverse: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        perm = np.ascontiguousarray(self.perm, dtype=np.int64)
        object.__setattr__(self, "perm", perm)
        n = perm.size
        if n and (perm.min() < 0 or perm.max() >= n):
            raise NotAPermutationError("indices outside 0..n-1")
        counts = np.bincount(perm, minlength=n)
        if np.any(counts != 1):
            raise NotAPermutationError("indices are not a bijection")
        inverse = np.empty(n, dtype=np.int64)
        inverse[perm] = np.arange(n, dtype=np.int64)
        inverse.flags.writeable = False
        perm.flags.writeable = False
        object.__setattr__(self, "inverse", inverse)

    @property
    def n(self) -> int:
        return int(self.perm.size)

    def inverted(self) -> "Permutation":
        """The inverse permutation as a new object."""
        return Permutation(self.inverse.copy())


@dataclass
class TripletList:
    """Unordered (row, col, value) entries staged for assembly."""

    n: int
    entries: list[tuple[int, int, float]] = field(default_factory=list)

    def add(self, row: int, col: int, value: float):
        self.entries.append((row, col, value))

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self.entries:
            empty_i = np.empty(0, dtype=np.int64)
            return empty_i, empty_i.copy(), np.empty(0)
        rows, cols, vals = zip(*self.entries)
        return (
            np.asarray(rows, dtype=np.int64),
            np.asarray(cols, dtype=np.int64),
            np.asarray(vals, dtype=np.float64),
        )


def _compress_lower(n: int, rows: np.ndarray, cols: np.ndarray,
                    vals: np.ndarray) -> SparseSymmetric:
    """Build CSC lower-triangle storage from entries already at r >= c.

    Duplicate positions are summed.
    """
    order = np.lexsort((rows, cols))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        keep = np.empty(rows.size, dtype=bool)
        keep[0] = True
        keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        group = np.cumsum(keep) - 1
        summed = np.bincount(group, weights=vals, minlength=int(group[-1]) + 1)
        rows, cols, vals = rows[keep], cols[keep], summed
    col_ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(cols, minlength=n), out=col_ptr[1:])
    return SparseSymmetric(n=n, col_ptr=col_ptr, row_idx=rows, values=vals)


def from_coo_arrays(n: int, rows: np.ndarray, cols: np.ndarray,
                    vals: np.ndarray) -> SparseSymmetric:
    """Assemble from parallel index/value arrays (either triangle, duplicates summed).

    Entries given above the diagonal are mirrored into the lower triangle.
    An explicit (i, j)/(j, i) pair must agree to a relative 1e-12 or the
    input is rejected as asymmetric.
    """
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    vals = np.ascontiguousarray(vals, dtype=np.float64)
    if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= n):
        raise IndexOutOfRangeError("triplet index outside 0..n-1")
    upper = rows < cols
    lo_r = np.where(upper, cols, rows)
    lo_c = np.where(upper, rows, cols)

    # Sum duplicates on each side of the diagonal separately, then compare
    # the two sides wherever both were given explicitly.
    def _sum_side(mask):
        return _collapse(lo_r[mask], lo_c[mask], vals[mask])

    off = lo_r != lo_c
    low_r, low_c, low_v = _sum_side(off & ~upper)
    up_r, up_c, up_v = _sum_side(off & upper)
    if up_r.size and low_r.size:
        low_keys = low_r * n + low_c
        up_keys = up_r * n + up_c
        pos = np.searchsorted(low_keys, up_keys)
        pos_c = np.minimum(pos, low_keys.size - 1)
        both = low_keys[pos_c] == up_keys
        lv, uv = low_v[pos_c[both]], up_v[both]
        scale = np.maximum(np.abs(lv), np.abs(uv))
        bad = np.abs(lv - uv) > SYMMETRY_RTOL * np.maximum(scale, 1.0)
        if np.any(bad):
            i = int(up_r[both][bad][0])
            j = int(up_c[both][bad][0])
            raise AsymmetricInputError(
                f"entries ({j},{i}) and ({i},{j}) disagree beyond tolerance")
        up_r, up_c, up_v = up_r[~both], up_c[~both], up_v[~both]

    diag = ~off
    all_r = np.concatenate([rows[diag], low_r, up_r])
    all_c = np.concatenate([cols[diag], low_c, up_c])
    all_v = np.concatenate([vals[diag], low_v, up_v])
    return _compress_lower(n, all_r, all_c, all_v)


def _collapse(r, c, v):
    """Sum duplicate (r, c) positions; returns entries sorted by (c, r)... key order (r major)."""
    if not r.size:
        return r, c, v
    order = np.lexsort((c, r))
    r, c, v = r[order], c[order], v[order]
    keep = np.empty(r.size, dtype=bool)
    keep[0] = True
    keep[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
    group = np.cumsum(keep) - 1
    summed = np.bincount(group, weights=v, minlength=int(group[-1]) + 1)
    return r[keep], c[keep], summed


def from_triplets(t: TripletList) -> SparseSymmetric:
    """Assemble a :class:`SparseSymmetric` from staged triplets.

    Duplicates are summed; upper-triangle entries are mirrored and checked
    against any explicit symmetric counterpart.
    """
    rows, cols, vals = t.arrays()
    return from_coo_arrays(t.n, rows, cols, vals)


def identity_matrix(n: int, scale: float = 1.0) -> SparseSymmetric:
    """scale * I as a SparseSymmetric (handy for tests and demos)."""
    idx = np.arange(n, dtype=np.int64)
    return SparseSymmetric(
        n=n,
        col_ptr=np.arange(n + 1, dtype=np.int64),
        row_idx=idx,
        values=np.full(n, float(scale)),
    )


# ---------------------------------------------------------------------------
# Matrix Market coordinate I/O (the only on-disk matrix format).


def read_matrix_market(stream: IO[str] | str) -> SparseSymmetric:
    """Read a symmetric real/pattern coordinate Matrix Market stream.

    File indices are 1-based; entries above the diagonal are reflected into
    the lower triangle.  ``pattern`` entries get the value 1.0.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    header = stream.readline()
    if not header:
        raise ParseError("empty stream")
    parts = header.strip().split()
    if len(parts) != 5 or parts[0] != "%%MatrixMarket":
        raise ParseError(f"bad Matrix Market header: {header.strip()!r}")
    _, obj, fmt, fieldkind, symmetry = (p.lower() for p in parts)
    if obj != "matrix" or fmt != "coordinate":
        raise UnsupportedFormatError("only coordinate matrices are supported")
    if fieldkind not in ("real", "pattern"):
        raise UnsupportedFormatError(f"unsupported field {fieldkind!r}")
    if symmetry != "symmetric":
        raise UnsupportedFormatError(f"unsupported symmetry {symmetry!r}")
    is_pattern = fieldkind == "pattern"

    size_line = None
    for line in stream:
        s = line.strip()
        if s and not s.startswith("%"):
            size_line = s
            break
    if size_line is None:
        raise ParseError("missing size line")
    toks = size_line.split()
    if len(toks) != 3:
        raise ParseError(f"bad size line: {size_line!r}")
    try:
        nrows, ncols, nnz = (int(tk) for tk in toks)
    except ValueError as exc:
        raise ParseError(f"bad size line: {size_line!r}") from exc
    if nrows != ncols:
        raise UnsupportedFormatError("symmetric matrix must be square")
    if nrows < 0 or nnz < 0:
        raise ParseError("negative dimensions")

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.ones(nnz)
    k = 0
    want = 2 if is_pattern else 3
    for line in stream:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        toks = s.split()
        if len(toks) != want:
            raise ParseError(f"bad coordinate record: {s!r}")
        if k >= nnz:
            raise ParseError("more records than declared")
        try:
            i, j = int(toks[0]), int(toks[1])
            if not is_pattern:
                vals[k] = float(toks[2])
        except ValueError as exc:
            raise ParseError(f"bad coordinate record: {s!r}") from exc
        if not (1 <= i <= nrows and 1 <= j <= nrows):
            raise ParseError(f"coordinate ({i},{j}) outside 1..{nrows}")
        rows[k], cols[k] = i - 1, j - 1
        k += 1
    if k != nnz:
        raise ParseError(f"declared {nnz} records, found {k}")
    return from_coo_arrays(nrows, rows, cols, vals)


def write_matrix_market(a: SparseSymmetric, stream: IO[str]):
    """Write coordinate symmetric real format (lower triangle, 1-based).

    Values carry 17 significant digits so that read(write(A)) reproduces A
    exactly.
    """
    stream.write("%%MatrixMarket matrix coordinate real symmetric\n")
    stream.write(f"{a.n} {a.n} {a.nnz}\n")
    rows, cols, vals = a.triplets()
    for i, j, v in zip(rows, cols, vals):
        stream.write(f"{i + 1} {j + 1} {v:.17g}\n")


# ---------------------------------------------------------------------------
# Structural operations.


def permute_symmetric(a: SparseSymmetric, p: Permutation) -> SparseSymmetric:
    """Symmetric permutation P A P^T, restricted to its lower triangle."""
    if p.n != a.n:
        raise SizeMismatchError(f"permutation size {p.n} != matrix size {a.n}")
    rows, cols, vals = a.triplets()
    new_r = p.inverse[rows]
    new_c = p.inverse[cols]
    swap = new_r < new_c
    new_r2 = np.where(swap, new_c, new_r)
    new_c2 = np.where(swap, new_r, new_c)
    return _compress_lower(a.n, new_r2, new_c2, vals)


def is_subpattern(b: SparseSymmetric, a: SparseSymmetric) -> bool:
    """True iff every structural entry of ``b`` is structural in ``a``."""
    if a.n != b.n:
        raise SizeMismatchError("dimension mismatch")
    for j in range(b.n):
        rb, _ = b.column(j)
        if not rb.size:
            continue
        ra, _ = a.column(j)
        pos = np.searchsorted(ra, rb)
        if np.any(pos >= ra.size) or np.any(ra[np.minimum(pos, ra.size - 1)] != rb):
            return False
    return True
