"""Tensor primitives checked against explicit loop oracles."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from risopt import DimensionError, DomainError, ShapeError
from risopt.tensor_ops import (
    expand,
    hadamard2,
    logdet_hermitian_psd,
    mode_multiply,
    mode_product,
    shrink,
)

from conftest import crandn


def mode_product_loops(t, v, mode):
    m, l, n = t.shape
    if mode == 1:
        out = np.zeros((l, n), dtype=complex)
        for a in range(l):
            for b in range(n):
                out[a, b] = sum(t[i, a, b] * v[i] for i in range(m))
        return out
    if mode == 2:
        out = np.zeros((m, n), dtype=complex)
        for a in range(m):
            for b in range(n):
                out[a, b] = sum(t[a, i, b] * v[i] for i in range(l))
        return out
    out = np.zeros((m, l), dtype=complex)
    for a in range(m):
        for b in range(l):
            out[a, b] = sum(t[a, b, i] * v[i] for i in range(n))
    return out


class TestModeProduct:
    @pytest.mark.parametrize("mode", [1, 2, 3])
    def test_matches_loop_oracle(self, rng, mode):
        t = crandn(rng, 3, 4, 2)
        v = crandn(rng, t.shape[mode - 1])
        got = mode_product(t, v, mode)
        np.testing.assert_allclose(got, mode_product_loops(t, v, mode), atol=1e-13)

    def test_rejects_bad_mode(self, rng):
        t = crandn(rng, 2, 2, 2)
        with pytest.raises(DimensionError):
            mode_product(t, np.ones(2), 4)
        with pytest.raises(DimensionError):
            mode_product(t, np.ones(2), 0)

    def test_rejects_non_3d(self, rng):
        with pytest.raises(ShapeError):
            mode_product(crandn(rng, 3, 3), np.ones(3), 1)

    def test_rejects_length_mismatch(self, rng):
        t = crandn(rng, 3, 4, 2)
        with pytest.raises(DimensionError):
            mode_product(t, np.ones(5), 2)

    @settings(max_examples=25, deadline=None, derandomize=True)
    @given(seed=st.integers(0, 2**31 - 1), mode=st.integers(1, 3))
    def test_linear_in_vector(self, seed, mode):
        r = np.random.default_rng(seed)
        t = crandn(r, 2, 3, 2)
        dim = t.shape[mode - 1]
        u, v = crandn(r, dim), crandn(r, dim)
        a, b = crandn(r, 2)
        lhs = mode_product(t, a * u + b * v, mode)
        rhs = a * mode_product(t, u, mode) + b * mode_product(t, v, mode)
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


class TestModeMultiply:
    def test_mode1_is_transposed_matmul(self, rng):
        t = crandn(rng, 3, 4, 2)
        b = crandn(rng, 3, 5)
        got = mode_multiply(t, b, 1)
        want = np.einsum("mln,mp->pln", t, b)
        np.testing.assert_allclose(got, want, atol=1e-13)

    @pytest.mark.parametrize("mode", [1, 2, 3])
    def test_each_slot(self, rng, mode):
        t = crandn(rng, 3, 4, 2)
        b = crandn(rng, t.shape[mode - 1], 6)
        spec = {1: "mln,mp->pln", 2: "mln,lp->mpn", 3: "mln,np->mlp"}[mode]
        np.testing.assert_allclose(mode_multiply(t, b, mode), np.einsum(spec, t, b), atol=1e-13)

    def test_mode_product_consistency(self, rng):
        # contracting with a column matrix then shrinking == mode_product
        t = crandn(rng, 3, 4, 2)
        v = crandn(rng, 4)
        via_multiply = shrink(mode_multiply(t, v.reshape(-1, 1), 2), axis=2)
        np.testing.assert_allclose(via_multiply, mode_product(t, v, 2), atol=1e-13)

    def test_rejects_mismatch(self, rng):
        with pytest.raises(DimensionError):
            mode_multiply(crandn(rng, 3, 4, 2), crandn(rng, 5, 2), 2)


class TestHadamard2:
    def test_slabs_are_outer_products(self, rng):
        a = crandn(rng, 3, 5)
        b = crandn(rng, 5, 2)
        t = hadamard2(a, b)
        assert t.shape == (3, 5, 2)
        for n in range(5):
            np.testing.assert_allclose(t[:, n, :], np.outer(a[:, n], b[n, :]), atol=1e-13)

    def test_contraction_recovers_weighted_product(self, rng):
        # sum_n v_n a_:n b_n: is exactly a @ diag(v) @ b
        a = crandn(rng, 4, 6)
        b = crandn(rng, 6, 3)
        v = crandn(rng, 6)
        got = mode_product(hadamard2(a, b), v, 2)
        np.testing.assert_allclose(got, a @ np.diag(v) @ b, atol=1e-12)

    def test_rejects_inner_mismatch(self, rng):
        with pytest.raises(DimensionError):
            hadamard2(crandn(rng, 3, 5), crandn(rng, 4, 2))


class TestShrinkExpand:
    def test_roundtrip_each_axis(self, rng):
        m = crandn(rng, 3, 4)
        for axis in (1, 2, 3):
            t = expand(m, axis)
            assert t.ndim == 3 and t.shape[axis - 1] == 1
            np.testing.assert_array_equal(shrink(t), m)
            np.testing.assert_array_equal(shrink(t, axis=axis), m)

    def test_ambiguous_without_axis(self, rng):
        t = crandn(rng, 1, 4, 1)
        with pytest.raises(ShapeError):
            shrink(t)
        assert shrink(t, axis=1).shape == (4, 1)
        assert shrink(t, axis=3).shape == (1, 4)

    def test_no_unit_axis(self, rng):
        with pytest.raises(ShapeError):
            shrink(crandn(rng, 2, 3, 4))

    def test_explicit_non_unit_axis(self, rng):
        with pytest.raises(ShapeError):
            shrink(crandn(rng, 2, 3, 1), axis=2)


class TestLogdetHermitianPsd:
    def test_matches_slogdet(self, rng):
        for _ in range(20):
            g = crandn(rng, 5, 5)
            a = np.eye(5) + g @ g.conj().T
            sign, want = np.linalg.slogdet(a)
            assert sign.real > 0
            assert abs(logdet_hermitian_psd(a) - want) < 1e-10

    def test_rank_deficient_uses_eig_path(self, rng):
        # Cholesky fails on the singular matrix; the eigenvalue fallback
        # must still return a finite value for det = 0 handled via clipping.
        g = crandn(rng, 4, 2)
        a = g @ g.conj().T
        val = logdet_hermitian_psd(a)
        assert np.isfinite(val)
        assert val < -100.0  # two zero eigenvalues clipped at tiny floor

    def test_rejects_non_hermitian(self, rng):
        a = crandn(rng, 3, 3)
        a = a + a.conj().T
        a[0, 1] += 1.0
        with pytest.raises(DomainError):
            logdet_hermitian_psd(a)

    def test_identity_is_zero(self):
        assert logdet_hermitian_psd(np.eye(6)) == pytest.approx(0.0, abs=1e-14)
