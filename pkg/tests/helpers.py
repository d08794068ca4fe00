"""Shared builders and brute-force oracles for the test suite.

Everything here is deliberately naive: dense boolean elimination for fill
patterns, dense linear algebra for numeric references, explicit loops where
that makes the intent obvious.  The point is independence from the library
code under test.
"""

import numpy as np

import seldet as sd


# ---------------------------------------------------------------- builders


def tridiag(diag, off):
    """Symmetric tridiagonal matrix from its diagonal and subdiagonal."""
    n = len(diag)
    t = sd.TripletList(n=n)
    for i, v in enumerate(diag):
        t.add(i, i, float(v))
    for i, v in enumerate(off):
        t.add(i + 1, i, float(v))
    return sd.from_triplets(t)


def grid_laplacian(k):
    """Shifted 5-point Laplacian on a k-by-k grid (SPD, 4 on the diagonal)."""
    n = k * k
    t = sd.TripletList(n=n)
    for i in range(k):
        for j in range(k):
            node = i * k + j
            t.add(node, node, 4.0)
            if i + 1 < k:
                t.add(node + k, node, -1.0)
            if j + 1 < k:
                t.add(node + 1, node, -1.0)
    return sd.from_triplets(t)


def arrowhead(n, dense_first=True):
    """SPD arrowhead: one row/column dense, the rest diagonal.

    dense_first puts the dense column at index 0 (worst case for the
    natural ordering: factors completely full); otherwise it goes last
    (already fill-free).
    """
    t = sd.TripletList(n=n)
    hub = 0 if dense_first else n - 1
    for i in range(n):
        t.add(i, i, float(n))
        if i != hub:
            t.add(max(i, hub), min(i, hub), 1.0)
    return sd.from_triplets(t)


def random_spd(rng, n, extra_per_row=2.0):
    """Random sparse strictly diagonally dominant (hence SPD) matrix.

    Off-diagonal entries are uniform in [-1, 1]; each diagonal entry covers
    its row's absolute sum plus a margin in [0.5, 2], which keeps the
    condition number far below 1e6.
    """
    m = int(round(extra_per_row * n))
    if m > 0 and n > 1:
        i = rng.integers(1, n, size=m)
        j = (rng.random(m) * i).astype(np.int64)
        key = np.unique(i * n + j)
        i, j = key // n, key % n
        v = rng.uniform(-1.0, 1.0, size=key.size)
    else:
        i = j = np.zeros(0, dtype=np.int64)
        v = np.zeros(0)
    slack = rng.uniform(0.5, 2.0, size=n)
    np.add.at(slack, i, np.abs(v))
    np.add.at(slack, j, np.abs(v))
    rows = np.concatenate([i, np.arange(n)])
    cols = np.concatenate([j, np.arange(n)])
    vals = np.concatenate([v, slack])
    return sd.from_coo_arrays(n, rows, cols, vals)


def random_dataset(rng, n_obs, p, level_sizes, n_blocks):
    """Random mixed-model dataset: grand mean plus p-1 numeric covariates,
    one random factor per entry of level_sizes, n_blocks residual groups.
    Every factor level and every block is guaranteed at least one
    observation."""
    cols = [np.ones(n_obs)]
    cols += [rng.standard_normal(n_obs) for _ in range(p - 1)]
    x = np.column_stack(cols)
    factors = []
    for fi, nl in enumerate(level_sizes):
        codes = rng.integers(0, nl, size=n_obs)
        codes[:nl] = rng.permutation(nl)
        factors.append(sd.RandomFactor(name=f"f{fi}", codes=codes, n_levels=nl))
    rb = rng.integers(0, n_blocks, size=n_obs)
    rb[n_obs - n_blocks:] = np.arange(n_blocks)
    return sd.MixedModelDataset(
        y=rng.standard_normal(n_obs),
        x=x,
        fixed_names=tuple(f"x{c}" for c in range(p)),
        factors=tuple(factors),
        residual_codes=rb,
        n_residual_blocks=n_blocks,
    )


def random_params(rng, d):
    return sd.VarianceParams(
        sigma2=float(rng.uniform(0.5, 2.0)),
        gamma=tuple(rng.uniform(0.3, 3.0, size=len(d.factors))),
        phi=tuple(rng.uniform(0.3, 3.0, size=d.n_residual_blocks)),
    )


# ----------------------------------------------------------------- oracles


def fill_pattern(a):
    """No-cancellation elimination fill, simulated on a dense boolean matrix.

    Returns the lower-triangular (diagonal included) structure of L: after
    eliminating column k, every pair of remaining rows adjacent to k becomes
    adjacent.  Quadratic and value-free — the reference the symbolic module
    is checked against.
    """
    n = a.n
    s = (a.to_dense() != 0.0) | np.eye(n, dtype=bool)
    for k in range(n - 1):
        below = np.flatnonzero(s[k + 1:, k]) + k + 1
        if below.size > 1:
            s[np.ix_(below, below)] = True
    return np.tril(s)


def etree_from_pattern(lpat):
    """parent[j] = first below-diagonal row of column j, -1 for roots."""
    n = lpat.shape[0]
    parent = np.full(n, -1, dtype=np.int64)
    for j in range(n):
        below = np.flatnonzero(lpat[j + 1:, j])
        if below.size:
            parent[j] = j + 1 + below[0]
    return parent


def dense_ldlt(a_dense):
    """Dense LDL^T without pivoting; returns (L, d)."""
    n = a_dense.shape[0]
    a = a_dense.astype(float).copy()
    l_mat = np.eye(n)
    d = np.zeros(n)
    for k in range(n):
        d[k] = a[k, k]
        l_mat[k + 1:, k] = a[k + 1:, k] / d[k]
        a[k + 1:, k + 1:] -= np.outer(l_mat[k + 1:, k], a[k + 1:, k])
    return l_mat, d


def spearman(x, y):
    """Spearman rank correlation with average ranks for ties."""
    def ranks(v):
        v = np.asarray(v, dtype=float)
        order = np.argsort(v, kind="stable")
        r = np.empty(v.size)
        r[order] = np.arange(1, v.size + 1, dtype=float)
        _, inv = np.unique(v, return_inverse=True)
        sums = np.bincount(inv, weights=r)
        cnts = np.bincount(inv)
        return (sums / cnts)[inv]

    rx, ry = ranks(x), ranks(y)
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx @ ry) / np.sqrt((rx @ rx) * (ry @ ry)))
