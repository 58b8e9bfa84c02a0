import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from multiverse.errors import DimensionError, IndefiniteError, SymmetryError
from multiverse.linalg import (cholesky, default_regularizer, effective_rank, gen_sym_eig,
                               gram_spectrum, sym_eig, sym_sqrt)

from conftest import random_spd


def power_iteration(A, iters=5000):
    """Dominant eigenpair by plain power iteration on a shifted PSD matrix."""
    shift = np.abs(A).sum()
    B = A + shift * np.eye(A.shape[0])
    x = np.ones(A.shape[0]) / np.sqrt(A.shape[0])
    for _ in range(iters):
        x = B @ x
        x /= np.linalg.norm(x)
    return x @ A @ x, x


class TestSymEig:
    def test_diagonal(self, kernels):
        w, V = sym_eig(np.diag([1.0, 3.0, 2.0]), kernels=kernels)
        assert w.tolist() == [3.0, 2.0, 1.0]
        assert np.array_equal(np.abs(V), np.eye(3)[:, [1, 2, 0]])

    def test_two_by_two(self, kernels):
        w, V = sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]), kernels=kernels)
        np.testing.assert_allclose(w, [3.0, 1.0], atol=1e-15)
        np.testing.assert_allclose(V[:, 0], [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-15)

    def test_reconstruction_and_orthogonality(self, kernels, rng):
        for d in (1, 2, 5, 12, 30):
            X = rng.normal(size=(d, d))
            A = X + X.T
            w, V = sym_eig(A, kernels=kernels)
            np.testing.assert_allclose(V @ np.diag(w) @ V.T, A, atol=1e-12 * np.abs(A).max() * d)
            np.testing.assert_allclose(V.T @ V, np.eye(d), atol=1e-13)
            assert np.all(np.diff(w) <= 0)

    def test_matches_power_iteration(self, kernels, rng):
        A = random_spd(rng, 6, cond=10.0)
        lam, x = power_iteration(A)
        w, V = sym_eig(A, kernels=kernels)
        assert w[0] == pytest.approx(lam, rel=1e-12)
        assert abs(V[:, 0] @ x) == pytest.approx(1.0, abs=1e-10)

    def test_sign_convention(self, kernels, rng):
        A = random_spd(rng, 7)
        _, V = sym_eig(A, kernels=kernels)
        for k in range(7):
            i = np.argmax(np.abs(V[:, k]))
            assert V[i, k] > 0

    def test_rejects_asymmetric(self):
        with pytest.raises(SymmetryError):
            sym_eig(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            sym_eig(np.zeros((2, 3)))

    @pytest.mark.parametrize("scale", [1e-250, 1e250])
    def test_extreme_scales(self, kernels, scale):
        # squared entries would under/overflow without rescaling
        A = np.full((4, 4), scale) + np.diag([scale, 0.0, 0.0, 0.0])
        w, V = sym_eig(A, kernels=kernels)
        assert np.abs(A @ V - V * w).max() <= 1e-12 * scale
        np.testing.assert_allclose(w, np.linalg.eigvalsh(A / scale)[::-1] * scale, rtol=1e-12,
                                   atol=1e-14 * scale)

    def test_backends_agree(self, rng):
        from multiverse import _backend
        if len(_backend.available()) < 2:
            pytest.skip("compiled backend not built")
        A = random_spd(rng, 20)
        a = sym_eig(A, kernels=_backend.get("python"))
        b = sym_eig(A, kernels=_backend.get("cython"))
        np.testing.assert_allclose(a.values, b.values, rtol=1e-13)
        np.testing.assert_allclose(a.vectors, b.vectors, atol=1e-11)

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, (5, 5), elements=st.floats(-1e3, 1e3)))
    def test_property_trace_and_residual(self, M):
        A = M + M.T
        w, V = sym_eig(A)
        scale = max(np.abs(A).max(), 1e-300)
        assert abs(w.sum() - np.trace(A)) <= 1e-11 * scale
        assert np.abs(A @ V - V * w).max() <= 1e-11 * scale


class TestCholesky:
    def test_hand_example(self, kernels):
        L = cholesky(np.array([[4.0, 2.0], [2.0, 5.0]]), kernels=kernels)
        np.testing.assert_array_equal(L.L, [[2.0, 0.0], [1.0, 2.0]])
        assert L.logdet == pytest.approx(np.log(16.0))

    def test_identity(self, kernels):
        assert np.array_equal(cholesky(np.eye(4), kernels=kernels).L, np.eye(4))

    def test_indefinite_reports_pivot(self, kernels):
        with pytest.raises(IndefiniteError) as exc:
            cholesky(np.array([[1.0, 1.0], [1.0, 1.0]]), kernels=kernels)
        assert exc.value.pivot == 2

    def test_jitter_rescues_singular(self, kernels):
        L = cholesky(np.ones((3, 3)), jitter=1e-3, kernels=kernels)
        np.testing.assert_allclose(L.L @ L.L.T, np.ones((3, 3)) + 1e-3 * np.eye(3), atol=1e-14)

    def test_solves(self, kernels, rng):
        A = random_spd(rng, 9)
        f = cholesky(A, kernels=kernels)
        B = rng.normal(size=(9, 3))
        np.testing.assert_allclose(A @ f.solve(B), B, atol=1e-10)
        np.testing.assert_allclose(f.L @ f.solve_lower(B), B, atol=1e-12)
        np.testing.assert_allclose(f.L.T @ f.solve_lower_t(B), B, atol=1e-12)
        x = B[:, 0]
        assert f.quad(x) == pytest.approx(x @ np.linalg.solve(A, x), rel=1e-10)

    def test_negative_jitter_rejected(self):
        with pytest.raises(DimensionError):
            cholesky(np.eye(2), jitter=-1.0)


class TestGenSymEig:
    def test_identity_metric_reduces_to_sym_eig(self, rng):
        A = random_spd(rng, 6)
        g = gen_sym_eig(A, np.eye(6), regularizer=0.0)
        np.testing.assert_allclose(g.values, sym_eig(A).values, rtol=1e-12)

    def test_explicit_inverse_oracle(self, rng):
        A, B = random_spd(rng, 8), random_spd(rng, 8)
        g = gen_sym_eig(A, B, regularizer=0.0)
        ref = np.sort(np.linalg.eigvals(np.linalg.inv(B) @ A).real)[::-1]
        np.testing.assert_allclose(g.values, ref, rtol=1e-9)
        np.testing.assert_allclose(A @ g.vectors, B @ g.vectors * g.values, atol=1e-9 * np.abs(A).max())
        np.testing.assert_allclose(g.vectors.T @ B @ g.vectors, np.eye(8), atol=1e-10)

    def test_default_regularizer(self, rng):
        A, B = random_spd(rng, 5), random_spd(rng, 5)
        eps = default_regularizer(B)
        assert eps == pytest.approx(1e-6 * np.trace(B) / 5)
        g = gen_sym_eig(A, B)
        Br = B + eps * np.eye(5)
        np.testing.assert_allclose(A @ g.vectors, Br @ g.vectors * g.values, atol=1e-9 * np.abs(A).max())

    def test_singular_metric_needs_regularizer(self):
        B = np.diag([1.0, 0.0])
        with pytest.raises(IndefiniteError):
            gen_sym_eig(np.eye(2), B, regularizer=0.0)
        g = gen_sym_eig(np.eye(2), B)
        assert np.all(np.isfinite(g.values))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            gen_sym_eig(np.eye(2), np.eye(3))


class TestGram:
    def test_rank_of_low_rank_representation(self, rng):
        D = rng.normal(size=(10, 3)) @ rng.normal(size=(3, 200))
        eig, rank = gram_spectrum(D)
        assert rank == 3
        assert eig.values[3] <= 1e-10 * eig.values[0]

    def test_zero_matrix(self):
        eig, rank = gram_spectrum(np.zeros((4, 5)))
        assert rank == 0
        assert np.all(eig.values == 0)

    def test_threshold_is_strict(self):
        assert effective_rank(np.array([1.0, 1e-3, 1e-4])) == 1
        assert effective_rank(np.array([1.0, 1.0000001e-3])) == 2

    def test_sym_sqrt(self, rng):
        A = random_spd(rng, 6)
        R = sym_sqrt(A)
        np.testing.assert_allclose(R @ R, A, atol=1e-10 * np.abs(A).max())
        np.testing.assert_allclose(R, R.T)
