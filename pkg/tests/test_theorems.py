import math

import numpy as np
import pytest

from multiverse.errors import (DegenerateDirectionError, DimensionError, DomainError,
                               IndefiniteError, PremiseError)
from multiverse.linalg import gen_sym_eig
from multiverse.loss import ce_loss
from multiverse.rng import Rng
from multiverse.scatter import compute_scatter, fisher_spectrum
from multiverse.theorems import (BoundCheck, check_fisher_sum_bound, check_inverse_spectrum,
                                 check_jb_fisher_bound, check_shift_invariance,
                                 construct_m_solutions, construct_pair_solution,
                                 ellipse_constraint_residual, min_norm_coefficients,
                                 newton_coefficients, optimization_instance, optimized_heads,
                                 overlapping_instance, pad_instance, random_spd,
                                 rank1_difference_residual, rows_csv, run_all)


@pytest.fixture(scope="module")
def optimized():
    D, y = optimization_instance(123)
    fit = optimized_heads(D, y, 5, 7)
    assert fit.grad_norm < 1e-8
    return fit.F, fit.b, D, y


def test_bound_check_semantics():
    assert BoundCheck(1.0, 1.0, 0.0).holds
    assert BoundCheck(1.1, 1.0, 0.2).holds
    assert not BoundCheck(1.1, 1.0, 0.05).holds


class TestShift:
    def test_zero_shift(self):
        D, y = overlapping_instance(0)
        chk = check_shift_invariance(np.ones((8, 5)), np.zeros(5), D, y, np.zeros(8), 0.0)
        assert chk.lhs == 0.0

    def test_large_shift(self):
        D, y = overlapping_instance(1)
        r = np.random.default_rng(1)
        v = r.normal(size=8)
        v *= 1e3 / np.linalg.norm(v)
        assert check_shift_invariance(r.normal(size=(8, 5)), r.normal(size=5), D, y, v, 50.0).holds


class TestRankOne:
    def test_exact_structure(self):
        F = np.random.default_rng(0).normal(size=(4, 3))
        v = np.array([1.0, -2.0, 0.5, 3.0])
        assert rank1_difference_residual(F, F + v[:, None]) < 1e-15
        assert rank1_difference_residual(F, F) == 0.0

    def test_independent_optima(self):
        D, y = optimization_instance(5)
        a = optimized_heads(D, y, 5, 1)
        b = optimized_heads(D, y, 5, 2)
        assert max(a.grad_norm, b.grad_norm) <= 1e-8
        assert rank1_difference_residual(a.F, b.F) <= 0.05


class TestEllipse:
    def test_hand_case(self):
        v, res = ellipse_constraint_residual(np.array([[1.0, -1.0]]))
        assert v[0] == pytest.approx(0.0, abs=1e-15) and res == pytest.approx(1.0)

    def test_planted_solution(self):
        r = np.random.default_rng(3)
        v = r.normal(size=3)
        U = r.normal(size=(3, 7))
        U /= np.linalg.norm(U, axis=0)
        F = -v[:, None] / 2 + np.linalg.norm(v) / 2 * U   # ||f||^2 = -v^T f
        fit = ellipse_constraint_residual(F)
        assert fit.residual < 1e-12
        np.testing.assert_allclose(fit.v, v, atol=1e-10)

    def test_random_instances_are_far_off(self):
        r = np.random.default_rng(4)
        res = [ellipse_constraint_residual(r.normal(size=(4, 8))).residual for _ in range(20)]
        assert np.median(res) > 0.1

    def test_rank_deficient_uses_pseudo_inverse(self):
        F = np.zeros((3, 5))
        F[0] = np.arange(1.0, 6.0)
        assert ellipse_constraint_residual(F).pseudo_inverse

    def test_needs_more_classes(self):
        with pytest.raises(DomainError):
            ellipse_constraint_residual(np.ones((3, 3)))


class TestPairSolution:
    def test_hand_instance(self):
        D = np.array([[3.0, -3.0, 1.0, -1.0], [1.0, 1.0, -1.0, -1.0]])   # D D^T = diag(20, 4)
        F = np.array([[1.0, 2.0], [1.0, -1.0]])
        F2, alpha, _ = construct_pair_solution(F, np.zeros(2), D, [0, 1, 0, 1])
        # v = +-e2, alpha = -(2, 5) / (+-1, -+1)
        np.testing.assert_allclose(np.abs(alpha), [2.0, 5.0])
        np.testing.assert_allclose(F2, [[1.0, 2.0], [-1.0, 4.0]], atol=1e-15)

    def test_orthogonal_and_bounded(self, optimized):
        F, b, D, y = optimized
        F2, _, chk = construct_pair_solution(F, b, D, y)
        assert np.max(np.abs(np.sum(F * F2, axis=0)) /
                      (np.linalg.norm(F, axis=0) * np.linalg.norm(F2, axis=0))) <= 1e-8
        assert chk.holds

    def test_orthogonality_does_not_need_an_optimum(self):
        r = np.random.default_rng(8)
        D = r.normal(size=(5, 30))
        _, _, chk = construct_pair_solution(r.normal(size=(5, 4)), np.zeros(4), D, np.arange(30) % 4)
        assert chk.context["orthogonality"] <= 1e-8

    def test_degenerate_direction(self):
        D = np.diag([2.0, 1.0])
        F = np.array([[1.0, 1.0], [0.0, 1.0]])   # first column orthogonal to e2
        with pytest.raises(DegenerateDirectionError):
            construct_pair_solution(F, np.zeros(2), D, [0, 1])

    def test_padded_equality(self, optimized):
        F, b, D, y = optimized
        Fp, Dp = pad_instance(F, D, 1)
        _, _, chk = construct_pair_solution(Fp, b, Dp, y)
        assert chk.context["lambda_min"] == 0.0
        assert chk.lhs == pytest.approx(2 * ce_loss(F, b, D, y), abs=1e-12)


class TestMSolutions:
    def test_two_heads_reduce_to_pair(self, optimized):
        F, b, D, y = optimized
        F2, alpha, chk = construct_pair_solution(F, b, D, y)
        heads, A, chk_m = construct_m_solutions(F, b, D, y, 2)
        np.testing.assert_allclose(heads.F[1], F2, rtol=1e-14, atol=1e-14)
        np.testing.assert_allclose(A[:, 0, 1], alpha, rtol=1e-14)
        assert chk_m.lhs == pytest.approx(chk.lhs, rel=1e-14)

    @pytest.mark.parametrize("m", [3, 4])
    def test_orthogonal_and_bounded(self, optimized, m):
        F, b, D, y = optimized
        heads, alpha, chk = construct_m_solutions(F, b, D, y, m)
        assert chk.context["orthogonality"] <= 1e-8
        assert chk.holds
        assert np.array_equal(heads.F[0], F) and not alpha[:, :, 0].any()

    def test_padded_equality(self, optimized):
        F, b, D, y = optimized
        Fp, Dp = pad_instance(F, D, 2)
        _, _, chk = construct_m_solutions(Fp, b, Dp, y, 3)
        assert abs(chk.lhs - 3 * chk.context["loss"]) <= 1e-10

    def test_closed_form_agrees_with_newton(self):
        r = np.random.default_rng(2)
        for m in (3, 4, 5):
            V, _ = np.linalg.qr(r.normal(size=(7, m - 1)))
            g = r.normal(size=7)
            closed = min_norm_coefficients(g, V, m)
            newton, _ = newton_coefficients(g, V, m)
            for a in (closed, newton):
                G = g[:, None] + V @ a
                off = G.T @ G - np.diag(np.diag(G.T @ G))
                assert np.abs(off).max() <= 1e-10 * (g @ g)
            # the closed form is the smallest solution
            assert np.linalg.norm(closed) <= np.linalg.norm(newton) * (1 + 1e-9)

    def test_too_many_heads(self, optimized):
        F, b, D, y = optimized
        with pytest.raises(DimensionError):
            construct_m_solutions(F, b, D, y, 9)


class TestInverseSpectrum:
    def test_identity(self):
        assert check_inverse_spectrum(np.eye(3), np.eye(3)) < 1e-15

    def test_proportional(self):
        S_w = random_spd(Rng(1), 5)
        assert check_inverse_spectrum(2 * S_w, S_w) < 1e-12
        g, _ = gen_sym_eig(2 * S_w, S_w, regularizer=0.0)
        np.testing.assert_allclose(g / (1 + g), 2 / 3, rtol=1e-12)

    def test_random(self):
        r = Rng(9)
        for _ in range(10):
            assert check_inverse_spectrum(random_spd(r, 12), random_spd(r, 12)) <= 1e-8

    def test_singular(self):
        with pytest.raises(IndefiniteError):
            check_inverse_spectrum(np.diag([1.0, 0.0]), np.eye(2))


class TestJbFisherBound:
    def test_vanishing_between_scatter(self):
        S_w = random_spd(Rng(3), 4)
        x1, x2 = np.array([1.0, 0, 0, 1]), np.array([0, 2.0, 1, 0])
        chk = check_jb_fisher_bound(1e-9 * np.eye(4), S_w, x1, x2, 0.01)
        assert chk.holds and chk.context["ratio"] == pytest.approx(1.0, abs=1e-6)

    def test_premise_guard(self):
        S_b = np.diag([10.0, 1e-3])
        with pytest.raises(PremiseError):
            check_jb_fisher_bound(S_b, np.eye(2), np.array([1.0, 0.0]), np.array([0.0, 1.0]), 0.05)

    def test_adversarial_pair_breaks_the_band(self):
        # premise holds (ratio ~0.039 < 0.05) but the quadratic-form ratio is ~4.8
        S_b = np.diag([1e-4, 100.0])
        x1 = np.array([1.0, 2.0])
        chk = check_jb_fisher_bound(S_b, np.eye(2), x1, -x1, 0.05)
        assert max(chk.context["fisher_ratios"]) < 0.05
        assert chk.context["ratio"] > 4.0 and not chk.holds

    def test_forward_reading_admits_violations(self):
        outcomes = []
        for s in range(40):
            r = Rng(s)
            S_b, S_w = 0.3 * random_spd(r, 6), random_spd(r, 6)
            g, V = gen_sym_eig(S_b, S_w, regularizer=0.0)
            low = np.flatnonzero(g < 0.1)
            if low.size == 0:
                continue
            Tm = S_b + S_w
            x1 = np.linalg.solve(Tm, V[:, low] @ r.normal(low.size))
            x2 = -x1 + 0.1 * np.linalg.solve(Tm, V[:, low] @ r.normal(low.size))
            try:
                outcomes.append(check_jb_fisher_bound(S_b, S_w, x1, x2, 0.1, "forward").holds)
            except PremiseError:
                pass
        assert outcomes and not all(outcomes)

    def test_unknown_transform(self):
        with pytest.raises(DomainError):
            check_jb_fisher_bound(np.eye(2), np.eye(2), np.ones(2), np.ones(2), 0.1, "sideways")


class TestFisherSum:
    def _stats(self, seed=0):
        D, y = overlapping_instance(seed, c=6, d=8, n=96)
        return compute_scatter(D, y, 6)

    def test_single_top_vector(self):
        st = self._stats()
        fspec = fisher_spectrum(st)
        assert check_fisher_sum_bound([fspec.vectors[:, 0]], st, fspec.values[0]).holds

    @pytest.mark.parametrize("m", [1, 2, 3, 5])
    def test_eigenvector_sets(self, m):
        st = self._stats(m)
        fspec = fisher_spectrum(st)
        chk = check_fisher_sum_bound([fspec.vectors[:, r] for r in range(m)], st, fspec.values[m - 1])
        assert chk.holds and chk.lhs == pytest.approx(math.sqrt(m) * fspec.values[m - 1])

    def test_non_orthogonal_premise(self):
        st = self._stats()
        fspec = fisher_spectrum(st)
        f = fspec.vectors[:, 0]
        with pytest.raises(PremiseError, match="0 and 1"):
            check_fisher_sum_bound([f, f + fspec.vectors[:, 1]], st, 0.0)

    def test_theta_premise(self):
        st = self._stats()
        fspec = fisher_spectrum(st)
        with pytest.raises(PremiseError, match="classifier 1"):
            check_fisher_sum_bound([fspec.vectors[:, 0], fspec.vectors[:, 1]], st, fspec.values[0])


def test_run_all_small(tmp_path):
    rows = run_all(seed=3, count=10, repro_dir=tmp_path)
    assert all(r.result.holds for r in rows)
    assert not list(tmp_path.iterdir())
    names = {r.check for r in rows}
    assert {"shift_invariance", "rank1_difference", "pair_solution_bound", "m_solutions_bound",
            "padded_equality", "inverse_spectrum", "jb_fisher_bound", "fisher_sum_bound"} <= names
    text = rows_csv(rows)
    assert text.splitlines()[0] == "check_name,instance_seed,lhs,rhs,slack,holds"
    assert len(text.splitlines()) == len(rows) + 1


def test_failures_are_dumped(tmp_path, monkeypatch):
    import multiverse.theorems as th
    monkeypatch.setattr(th, "check_inverse_spectrum", lambda S_b, S_w: 1.0)
    rows = run_all(seed=0, count=2, repro_dir=tmp_path)
    bad = [r for r in rows if not r.result.holds]
    assert {r.check for r in bad} == {"inverse_spectrum"}
    dumped = sorted(p.name for p in tmp_path.iterdir())
    assert dumped == sorted(f"inverse_spectrum_{r.seed}.npz" for r in bad)
    with np.load(tmp_path / dumped[0]) as z:
        assert z["S_b"].shape == (12, 12)
