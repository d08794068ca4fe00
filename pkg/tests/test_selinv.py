"""Sparse-subset inversion: worked examples, dense oracle, entry lookup."""

import numpy as np
import pytest

import seldet as sd
from seldet.errors import (
    IndexOutOfRangeError,
    SingularMatrixError,
    TooLargeError,
)
from helpers import random_spd, tridiag


def pipeline(a, ordering="natural"):
    p = sd.amd_order(a) if ordering == "amd" else sd.natural_order(a.n)
    sym = sd.symbolic_factor(a, p)
    f = sd.ldlt_factorize(a, sym)
    return sd.selected_inverse(f), sym


def test_chain_worked_example():
    a = tridiag([2.0, 2.0, 2.0], [-1.0, -1.0])
    z, _ = pipeline(a)
    assert sd.get_entry(z, 0, 0) == pytest.approx(0.75, abs=1e-15)
    assert sd.get_entry(z, 1, 0) == pytest.approx(0.5, abs=1e-15)
    assert sd.get_entry(z, 1, 1) == pytest.approx(1.0, abs=1e-15)
    assert sd.get_entry(z, 2, 1) == pytest.approx(0.5, abs=1e-15)
    assert sd.get_entry(z, 2, 2) == pytest.approx(0.75, abs=1e-15)
    # (2,0) is structurally zero in L: not part of the computed subset,
    # even though the true inverse entry (0.25) is nonzero
    assert sd.get_entry(z, 2, 0) is None
    assert sd.get_entry(z, 0, 2) is None
    # symmetric lookup
    assert sd.get_entry(z, 0, 1) == sd.get_entry(z, 1, 0)


def test_two_by_two_values_and_flops():
    a = sd.from_coo_arrays(2, np.array([0, 1, 1]), np.array([0, 0, 1]),
                           np.array([4.0, 2.0, 3.0]))
    z, sym = pipeline(a)
    assert np.allclose(z.z_diag, [0.375, 0.5])
    assert np.allclose(z.z_values, [-0.25])
    assert z.flops == 5 == sd.predict_flops(sym)[1]


def test_diagonal_matrix_costs_nothing():
    z, _ = pipeline(sd.identity_matrix(5, 4.0))
    assert np.allclose(z.z_diag, 0.25)
    assert z.z_values.size == 0
    assert z.flops == 0


def test_matches_dense_inverse_on_pattern():
    rng = np.random.default_rng(71)
    for ordering in ("natural", "amd"):
        for _ in range(10):
            a = random_spd(rng, int(rng.integers(2, 90)))
            z, _ = pipeline(a, ordering)
            inv = sd.dense_inverse_oracle(a)
            scale = np.sqrt(np.outer(np.diag(inv), np.diag(inv)))
            for i in range(a.n):
                for j in range(i + 1):
                    got = sd.get_entry(z, i, j)
                    if got is not None:
                        assert abs(got - inv[i, j]) <= 1e-10 * scale[i, j]


def test_lookup_uses_original_indices():
    # under a nontrivial ordering, (i, j) still means row/column of A
    rng = np.random.default_rng(73)
    a = random_spd(rng, 40)
    z, _ = pipeline(a, "amd")
    inv = sd.dense_inverse_oracle(a)
    for i in range(a.n):
        assert sd.get_entry(z, i, i) == pytest.approx(inv[i, i], rel=1e-10)


def test_selinv_flops_equal_forecast():
    rng = np.random.default_rng(79)
    for ordering in ("natural", "amd"):
        for _ in range(8):
            a = random_spd(rng, int(rng.integers(1, 80)))
            z, sym = pipeline(a, ordering)
            assert z.flops == sd.predict_flops(sym)[1]


def test_get_entry_range_check():
    z, _ = pipeline(sd.identity_matrix(3))
    with pytest.raises(IndexOutOfRangeError):
        sd.get_entry(z, 3, 0)
    with pytest.raises(IndexOutOfRangeError):
        sd.get_entry(z, 0, -1)


def test_dense_oracle_guards():
    with pytest.raises(TooLargeError):
        sd.dense_inverse_oracle(sd.identity_matrix(501))
    singular = sd.from_coo_arrays(2, np.array([0, 1, 1]), np.array([0, 0, 1]),
                                  np.array([1.0, 1.0, 1.0]))
    with pytest.raises(SingularMatrixError):
        sd.dense_inverse_oracle(singular)


def test_oracle_at_size_limit():
    a = sd.identity_matrix(500, 2.0)
    inv = sd.dense_inverse_oracle(a)
    assert np.allclose(np.diag(inv), 0.5)
