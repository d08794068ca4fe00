"""Restricted-likelihood quantities for variance-component mixed models.

The model is y = X tau + Z u + e with var(u) = sigma^2 * G and
var(e) = sigma^2 * R, where G and R are direct sums of scaled identity
blocks: each random grouping factor j contributes a gamma_j * I block to
G, each residual block k a phi_k * I block to R.  All the heavy lifting
runs through the mixed-model-equation matrix

    C = [[X'R^-1X, X'R^-1Z], [Z'R^-1X, Z'R^-1Z + G^-1]]

which is sparse, SPD for full-rank X and positive parameters, and of
dimension p + b.  The restricted log-likelihood, its log-determinant
derivative traces, and prediction-error variances are all functionals of
C's factorization and selected inverse.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import (
    EmptyFactorError,
    ParseError,
    PatternNotCoveredError,
    RankDeficientDesignError,
    SizeMismatchError,
    TooLargeForDenseFormError,
)
from .numeric import LdlFactor, ldlt_factorize, log_det, solve
from .ordering import amd_order, natural_order
from .selinv import SelectedInverse, selected_inverse
from .sparse_core import (
    Permutation,
    SparseSymmetric,
    from_coo_arrays,
    permute_symmetric,
)
from .symbolic import predict_flops, symbolic_factor

__all__ = [
    "RandomFactor",
    "MixedModelDataset",
    "VarianceParams",
    "MmeSystem",
    "assemble_mme",
    "solve_mme",
    "restricted_loglik",
    "trace_product",
    "logdet_gradient",
    "pev_diagonal",
    "RemlReport",
    "reml_report",
    "read_dataset",
    "write_dataset",
]

DENSE_FORM_LIMIT = 500


@dataclass(frozen=True)
class RandomFactor:
    """One grouping factor: a level code per observation."""

    name: str
    codes: np.ndarray  # int64, shape (n,), values in 0..n_levels-1
    n_levels: int
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        codes = np.ascontiguousarray(self.codes, dtype=np.int64)
        object.__setattr__(self, "codes", codes)
        if self.labels and len(self.labels) != self.n_levels:
            raise SizeMismatchError(f"factor {self.name}: label/level count mismatch")


@dataclass(frozen=True)
class MixedModelDataset:
    """Observations with fixed design, random grouping factors, and
    residual blocks.  X is dense (p is small in this model class)."""

    y: np.ndarray
    x: np.ndarray
    fixed_names: tuple[str, ...]
    factors: tuple[RandomFactor, ...]
    residual_codes: np.ndarray
    n_residual_blocks: int
    residual_labels: tuple[str, ...] = ()

    def __post_init__(self):
        y = np.ascontiguousarray(self.y, dtype=np.float64)
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        rc = np.ascontiguousarray(self.residual_codes, dtype=np.int64)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "residual_codes", rc)
        n = y.size
        if x.ndim != 2 or x.shape[0] != n or rc.shape != (n,):
            raise SizeMismatchError("inconsistent dataset shapes")
        if len(self.fixed_names) != x.shape[1]:
            raise SizeMismatchError("fixed_names length != number of X columns")
        for f in self.factors:
            if f.codes.shape != (n,):
                raise SizeMismatchError(f"factor {f.name}: wrong length")

    @property
    def n_obs(self) -> int:
        return int(self.y.size)

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    @property
    def b(self) -> int:
        return int(sum(f.n_levels for f in self.factors))

    def factor_offsets(self) -> list[int]:
        """Start index of each factor's block inside C (first block at p)."""
        offs = []
        at = self.p
        for f in self.factors:
            offs.append(at)
            at += f.n_levels
        return offs


@dataclass(frozen=True)
class VarianceParams:
    """(sigma^2, gamma per random factor, phi per residual block)."""

    sigma2: float
    gamma: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.gamma, dtype=np.float64))
        p = np.atleast_1d(np.asarray(self.phi, dtype=np.float64))
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "phi", p)
        if self.sigma2 <= 0 or np.any(g <= 0) or np.any(p <= 0):
            raise ValueError("variance parameters must be strictly positive")

    def perturbed(self, index: int, factor: float) -> "VarianceParams":
        """Copy with the index-th (gamma..., phi...) entry scaled — the
        layout matches logdet_gradient's output order."""
        g, p = self.gamma.copy(), self.phi.copy()
        if index < g.size:
            g[index] *= factor
        else:
            p[index - g.size] *= factor
        return VarianceParams(self.sigma2, g, p)


@dataclass(frozen=True)
class MmeSystem:
    """Assembled mixed-model equations and derivative templates.

    ``templates`` holds one dC/d(kappa) per variance ratio, gammas first
    then phis, each on a subpattern of C.
    """

    C: SparseSymmetric
    rhs: np.ndarray
    templates: tuple[SparseSymmetric, ...]
    template_names: tuple[str, ...]
    p: int
    b: int
    factor_names: tuple[str, ...] = ()
    factor_offsets: tuple[int, ...] = ()
    factor_sizes: tuple[int, ...] = ()


def _check_factors(d: MixedModelDataset):
    for f in d.factors:
        if f.n_levels <= 0:
            raise EmptyFactorError(f"factor {f.name} has no levels")
        if f.codes.size and (f.codes.min() < 0 or f.codes.max() >= f.n_levels):
            raise EmptyFactorError(f"factor {f.name}: code outside 0..{f.n_levels - 1}")
        counts = np.bincount(f.codes, minlength=f.n_levels)
        if np.any(counts == 0):
            empty = int(np.argmin(counts))
            raise EmptyFactorError(
                f"factor {f.name}: level {empty} has no observations")
    rc = np.bincount(d.residual_codes, minlength=d.n_residual_blocks)
    if np.any(rc == 0):
        raise EmptyFactorError("a residual block has no observations")


def _wtw_lower_triplets(d: MixedModelDataset, w: np.ndarray):
    """Lower-triangle triplets of W' diag(w) W, with W = [X, Z-blocks].

    Returns (rows, cols, vals) covering the dense X'X block, every
    X-factor cross block, factor diagonal blocks, and all factor-factor
    cross blocks, in C's block layout.
    """
    n, p = d.x.shape
    offs = d.factor_offsets()
    rows_l: list[np.ndarray] = []
    cols_l: list[np.ndarray] = []
    vals_l: list[np.ndarray] = []

    xtwx = d.x.T @ (w[:, None] * d.x)
    ii, jj = np.tril_indices(p)
    rows_l.append(ii.astype(np.int64))
    cols_l.append(jj.astype(np.int64))
    vals_l.append(xtwx[ii, jj])

    for fi, f in enumerate(d.factors):
        # X cross block: rows are factor levels (offset), cols are X columns
        m = np.zeros((f.n_levels, p))
        np.add.at(m, f.codes, w[:, None] * d.x)
        li, xi = np.meshgrid(np.arange(f.n_levels, dtype=np.int64),
                             np.arange(p, dtype=np.int64), indexing="ij")
        rows_l.append(offs[fi] + li.ravel())
        cols_l.append(xi.ravel().astype(np.int64))
        vals_l.append(m.ravel())

        # diagonal block of this factor (dummy designs make it diagonal)
        diag = np.bincount(f.codes, weights=w, minlength=f.n_levels)
        lev = np.arange(f.n_levels, dtype=np.int64)
        rows_l.append(offs[fi] + lev)
        cols_l.append(offs[fi] + lev)
        vals_l.append(diag)

        # cross blocks against every earlier factor
        for gi in range(fi):
            g = d.factors[gi]
            key = f.codes * g.n_levels + g.codes
            uk, inv = np.unique(key, return_inverse=True)
            sums = np.bincount(inv, weights=w)
            rows_l.append(offs[fi] + uk // g.n_levels)
            cols_l.append(offs[gi] + uk % g.n_levels)
            vals_l.append(sums)

    return (np.concatenate(rows_l), np.concatenate(cols_l),
            np.concatenate(vals_l))


def assemble_mme(d: MixedModelDataset, v: VarianceParams) -> MmeSystem:
    """Build C, the right-hand side, and the dC/d(kappa) templates."""
    n, p = d.x.shape
    if v.gamma.size != len(d.factors):
        raise SizeMismatchError(
            f"{v.gamma.size} gamma values for {len(d.factors)} factors")
    if v.phi.size != d.n_residual_blocks:
        raise SizeMismatchError(
            f"{v.phi.size} phi values for {d.n_residual_blocks} residual blocks")
    _check_factors(d)
    if np.linalg.matrix_rank(d.x) < p:
        raise RankDeficientDesignError("fixed-effect design X is rank deficient")

    offs = d.factor_offsets()
    dim = p + d.b
    r = 1.0 / v.phi[d.residual_codes]

    rows, cols, vals = _wtw_lower_triplets(d, r)
    # G^-1 on the factor diagonals (summed onto the W'R^-1W diagonal)
    g_rows = []
    g_vals = []
    for fi, f in enumerate(d.factors):
        lev = offs[fi] + np.arange(f.n_levels, dtype=np.int64)
        g_rows.append(lev)
        g_vals.append(np.full(f.n_levels, 1.0 / v.gamma[fi]))
    if g_rows:
        gr = np.concatenate(g_rows)
        rows = np.concatenate([rows, gr])
        cols = np.concatenate([cols, gr])
        vals = np.concatenate([vals, np.concatenate(g_vals)])
    c_mat = from_coo_arrays(dim, rows, cols, vals)

    ry = r * d.y
    rhs = np.concatenate(
        [d.x.T @ ry]
        + [np.bincount(f.codes, weights=ry, minlength=f.n_levels)
           for f in d.factors])

    templates: list[SparseSymmetric] = []
    names: list[str] = []
    for fi, f in enumerate(d.factors):
        lev = offs[fi] + np.arange(f.n_levels, dtype=np.int64)
        coef = -1.0 / (v.gamma[fi] * v.gamma[fi])
        templates.append(from_coo_arrays(
            dim, lev, lev, np.full(f.n_levels, coef)))
        names.append(f"gamma:{f.name}")
    for k in range(d.n_residual_blocks):
        mask = (d.residual_codes == k).astype(np.float64)
        tr_, tc_, tv_ = _wtw_lower_triplets(d, mask)
        coef = -1.0 / (v.phi[k] * v.phi[k])
        templates.append(from_coo_arrays(dim, tr_, tc_, coef * tv_))
        label = (d.residual_labels[k]
                 if k < len(d.residual_labels) else str(k))
        names.append(f"phi:{label}")

    return MmeSystem(
        C=c_mat,
        rhs=rhs,
        templates=tuple(templates),
        template_names=tuple(names),
        p=p,
        b=d.b,
        factor_names=tuple(f.name for f in d.factors),
        factor_offsets=tuple(offs),
        factor_sizes=tuple(f.n_levels for f in d.factors),
    )


def _resolve_ordering(c_mat: SparseSymmetric,
                      ordering: str | Permutation) -> Permutation:
    if isinstance(ordering, Permutation):
        return ordering
    if ordering == "amd":
        return amd_order(c_mat)
    if ordering == "natural":
        return natural_order(c_mat.n)
    raise ValueError(f"unknown ordering {ordering!r}")


def _factorize(c_mat: SparseSymmetric, ordering: str | Permutation) -> LdlFactor:
    perm = _resolve_ordering(c_mat, ordering)
    return ldlt_factorize(c_mat, symbolic_factor(c_mat, perm))


def solve_mme(m: MmeSystem,
              ordering: str | Permutation = "amd") -> tuple[np.ndarray, np.ndarray]:
    """BLUE of the fixed effects and BLUP of the random effects."""
    f = _factorize(m.C, ordering)
    x = solve(f, m.rhs)
    return x[:m.p], x[m.p:]


def _logdet_r(d: MixedModelDataset, v: VarianceParams) -> float:
    nk = np.bincount(d.residual_codes, minlength=d.n_residual_blocks)
    return float(nk @ np.log(v.phi))


def _logdet_g(d: MixedModelDataset, v: VarianceParams) -> float:
    bj = np.asarray([f.n_levels for f in d.factors], dtype=np.float64)
    return float(bj @ np.log(v.gamma))


def restricted_loglik(d: MixedModelDataset, v: VarianceParams,
                      form: str = "c",
                      ordering: str | Permutation = "amd") -> float:
    """Restricted log-likelihood at the given parameter point.

    form="c" evaluates the sparse MME formulation

        -1/2 [ (n-p) ln sigma^2 + logdet C + logdet R + logdet G
               + y'Py / sigma^2 ],

    with y'Py = y'R^-1 y - rhs' C^-1 rhs.  form="h" evaluates the dense
    formulation -1/2 [ (n-p) ln sigma^2 + logdet H + logdet(X'H^-1X)
    + y'Py / sigma^2 ] with H = R + ZGZ', guarded to n <= 500; the two
    agree to rounding and the dense path exists as an oracle.
    """
    n, p = d.x.shape
    if n <= p:
        raise SizeMismatchError(f"need n > p, got n = {n}, p = {p}")
    if form == "c":
        m = assemble_mme(d, v)
        f = _factorize(m.C, ordering)
        ldc = log_det(f)
        r = 1.0 / v.phi[d.residual_codes]
        ypy = float(d.y @ (r * d.y) - m.rhs @ solve(f, m.rhs))
        return -0.5 * ((n - p) * math.log(v.sigma2) + ldc
                       + _logdet_r(d, v) + _logdet_g(d, v) + ypy / v.sigma2)
    if form == "h":
        if n > DENSE_FORM_LIMIT:
            raise TooLargeForDenseFormError(
                f"dense likelihood form limited to n <= {DENSE_FORM_LIMIT}")
        _check_factors(d)
        h = np.diag(v.phi[d.residual_codes]).astype(np.float64)
        for fi, f_ in enumerate(d.factors):
            same = f_.codes[:, None] == f_.codes[None, :]
            h += v.gamma[fi] * same
        sign, ldh = np.linalg.slogdet(h)
        if sign <= 0:
            raise RankDeficientDesignError("H is not positive definite")
        hinv_x = np.linalg.solve(h, d.x)
        xthx = d.x.T @ hinv_x
        sign2, ldxthx = np.linalg.slogdet(xthx)
        if sign2 <= 0:
            raise RankDeficientDesignError("X'H^-1X is not positive definite")
        hinv_y = np.linalg.solve(h, d.y)
        beta = np.linalg.solve(xthx, d.x.T @ hinv_y)
        py = hinv_y - hinv_x @ beta
        ypy = float(d.y @ py)
        return -0.5 * ((n - p) * math.log(v.sigma2) + ldh + ldxthx
                       + ypy / v.sigma2)
    raise ValueError(f"unknown form {form!r}; use 'c' or 'h'")


def trace_product(zsel: SelectedInverse, b_mat: SparseSymmetric) -> float:
    """tr(C^-1 B) for a symmetric B on a subpattern of the selected inverse.

    Diagonal entries contribute once, off-diagonal structural entries
    twice (symmetry).  A structural entry of B off the selected pattern
    raises PatternNotCoveredError: that position of the inverse was never
    computed, which signals a modeling error upstream.
    """
    if b_mat.n != zsel.n:
        raise SizeMismatchError("dimension mismatch")
    bp = permute_symmetric(b_mat, zsel.perm)
    colptr, rows = zsel.sym.l_col_ptr, zsel.sym.l_row_idx
    total = 0.0
    for j in range(bp.n):
        brows, bvals = bp.column(j)
        if not brows.size:
            continue
        if brows[0] == j:
            total += zsel.z_diag[j] * bvals[0]
            brows, bvals = brows[1:], bvals[1:]
        if not brows.size:
            continue
        lo, hi = colptr[j], colptr[j + 1]
        seg = rows[lo:hi]
        off = np.searchsorted(seg, brows)
        if np.any(off >= seg.size) or not np.array_equal(
                seg[np.minimum(off, seg.size - 1)], brows):
            raise PatternNotCoveredError(
                f"column {j}: entry outside the selected-inverse pattern")
        total += 2.0 * float(zsel.z_values[lo + off] @ bvals)
    return float(total)


def logdet_gradient(m: MmeSystem, zsel: SelectedInverse) -> np.ndarray:
    """d logdet(C) / d kappa for every variance ratio, gammas then phis."""
    return np.asarray([trace_product(zsel, t) for t in m.templates])


def pev_diagonal(zsel: SelectedInverse, sigma2: float) -> np.ndarray:
    """Prediction-error variances sigma^2 * diag(C^-1), original order."""
    out = np.empty(zsel.n)
    out[zsel.perm.perm] = sigma2 * zsel.z_diag
    return out


@dataclass(frozen=True)
class RemlReport:
    """Everything the full pipeline produces at one parameter point."""

    loglik: float
    logdet_c: float
    logdet_r: float
    logdet_g: float
    ypy: float
    tau: np.ndarray
    u: np.ndarray
    gradient: np.ndarray
    gradient_names: tuple[str, ...]
    pev: np.ndarray
    dim: int
    nnz_c: int
    nnz_l: int
    predicted_ldlt_flops: int
    measured_ldlt_flops: int
    predicted_selinv_flops: int
    measured_selinv_flops: int
    times: dict[str, float]


def reml_report(d: MixedModelDataset, v: VarianceParams,
                ordering: str | Permutation = "amd") -> RemlReport:
    """Assemble -> order -> factor -> selected inverse -> REML quantities.

    One call covering the whole pipeline, with per-phase wall times
    (informational only) and both FLOP counters alongside their symbolic
    predictions.
    """
    n, p = d.x.shape
    if n <= p:
        raise SizeMismatchError(f"need n > p, got n = {n}, p = {p}")
    times: dict[str, float] = {}
    t0 = time.perf_counter()
    m = assemble_mme(d, v)
    times["assemble"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    perm = _resolve_ordering(m.C, ordering)
    times["ordering"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sym = symbolic_factor(m.C, perm)
    times["symbolic"] = time.perf_counter() - t0
    pred_ldlt, pred_selinv = predict_flops(sym)

    t0 = time.perf_counter()
    f = ldlt_factorize(m.C, sym)
    times["factorize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    zsel = selected_inverse(f)
    times["selinv"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    x = solve(f, m.rhs)
    grad = logdet_gradient(m, zsel)
    times["derivatives"] = time.perf_counter() - t0

    ldc = log_det(f)
    r = 1.0 / v.phi[d.residual_codes]
    ypy = float(d.y @ (r * d.y) - m.rhs @ x)
    ldr = _logdet_r(d, v)
    ldg = _logdet_g(d, v)
    loglik = -0.5 * ((n - p) * math.log(v.sigma2) + ldc + ldr + ldg
                     + ypy / v.sigma2)
    return RemlReport(
        loglik=loglik,
        logdet_c=ldc,
        logdet_r=ldr,
        logdet_g=ldg,
        ypy=ypy,
        tau=x[:m.p],
        u=x[m.p:],
        gradient=grad,
        gradient_names=m.template_names,
        pev=pev_diagonal(zsel, v.sigma2),
        dim=m.C.n,
        nnz_c=m.C.nnz,
        nnz_l=sym.nnz_L,
        predicted_ldlt_flops=pred_ldlt,
        measured_ldlt_flops=f.flops,
        predicted_selinv_flops=pred_selinv,
        measured_selinv_flops=zsel.flops,
        times=times,
    )


# ---------------------------------------------------------------------------
# Dataset file format: tab-separated, UTF-8, one header row.  Column roles
# are carried by the header: `response` (exactly one), `fixed:<name>`
# (numeric covariate columns, typically a constant 1 for the grand mean),
# `random:<name>` (level labels), and `resblock` (residual-block labels,
# optional — one shared block when absent).  Missing values are not in
# scope, so the token NA is rejected outright.


def write_dataset(d: MixedModelDataset, stream: IO[str]):
    header = (["response"]
              + [f"fixed:{name}" for name in d.fixed_names]
              + [f"random:{f.name}" for f in d.factors]
              + ["resblock"])
    stream.write("\t".join(header) + "\n")
    res_labels = (d.residual_labels if d.residual_labels
                  else tuple(str(k) for k in range(d.n_residual_blocks)))
    factor_labels = []
    for f in d.factors:
        labels = f.labels if f.labels else tuple(
            str(v) for v in range(f.n_levels))
        factor_labels.append(labels)
    for i in range(d.n_obs):
        parts = [f"{d.y[i]:.17g}"]
        parts += [f"{d.x[i, c]:.17g}" for c in range(d.p)]
        parts += [factor_labels[fi][f.codes[i]]
                  for fi, f in enumerate(d.factors)]
        parts.append(res_labels[d.residual_codes[i]])
        stream.write("\t".join(parts) + "\n")


def _encode_labels(column: list[str]) -> tuple[np.ndarray, tuple[str, ...]]:
    labels, codes = np.unique(np.asarray(column), return_inverse=True)
    return codes.astype(np.int64), tuple(str(s) for s in labels)


def read_dataset(stream: IO[str]) -> MixedModelDataset:
    """Parse the tab-separated dataset dialect written by write_dataset."""
    header_line = stream.readline()
    if not header_line:
        raise ParseError("empty dataset stream")
    header = header_line.rstrip("\n").split("\t")
    if header.count("response") != 1 or header[0] != "response":
        raise ParseError("first column must be 'response'")
    fixed_names = []
    random_names = []
    has_resblock = False
    for tok in header[1:]:
        if tok.startswith("fixed:"):
            fixed_names.append(tok[len("fixed:"):])
        elif tok.startswith("random:"):
            random_names.append(tok[len("random:"):])
        elif tok == "resblock":
            has_resblock = True
        else:
            raise ParseError(f"unrecognized dataset column {tok!r}")
    ncol = len(header)
    y_raw: list[float] = []
    fixed_raw: list[list[float]] = [[] for _ in fixed_names]
    random_raw: list[list[str]] = [[] for _ in random_names]
    res_raw: list[str] = []
    for lineno, line in enumerate(stream, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != ncol:
            raise ParseError(f"line {lineno}: expected {ncol} columns, got {len(parts)}")
        if "NA" in parts:
            raise ParseError(f"line {lineno}: missing values (NA) are not supported")
        try:
            y_raw.append(float(parts[0]))
            at = 1
            for c in range(len(fixed_names)):
                fixed_raw[c].append(float(parts[at]))
                at += 1
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad numeric field") from exc
        for c in range(len(random_names)):
            random_raw[c].append(parts[at])
            at += 1
        res_raw.append(parts[at] if has_resblock else "0")
    n = len(y_raw)
    if n == 0:
        raise ParseError("dataset has no observations")
    x = (np.asarray(fixed_raw, dtype=np.float64).T
         if fixed_names else np.ones((n, 1)))
    if not fixed_names:
        fixed_names = ["mean"]
    factors = []
    for name, col in zip(random_names, random_raw):
        codes, labels = _encode_labels(col)
        factors.append(RandomFactor(name=name, codes=codes,
                                    n_levels=len(labels), labels=labels))
    res_codes, res_labels = _encode_labels(res_raw)
    return MixedModelDataset(
        y=np.asarray(y_raw),
        x=x,
        fixed_names=tuple(fixed_names),
        factors=tuple(factors),
        residual_codes=res_codes,
        n_residual_blocks=len(res_labels),
        residual_labels=res_labels,
    )
