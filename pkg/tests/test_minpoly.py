import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsys import (
    HorizonExceeded, NonSquare, NumericalRankAmbiguous,
    closed_form_check, minimal_expansion, power_via_expansion,
)

from conftest import box_corpus


class TestSpecExamples:
    def test_identity(self):
        exp = minimal_expansion(np.eye(2))
        assert exp.mu == 1
        assert exp.base_row == pytest.approx([1.0])

    def test_nilpotent(self):
        exp = minimal_expansion(np.array([[0.0, 1.0], [0.0, 0.0]]))
        assert exp.mu == 2
        assert exp.base_row == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_repeated_diagonal(self):
        # Oracle: solve the 2-coefficient linear system for A^2 and A^3
        # directly from two distinct eigenvalues.
        A = np.diag([1.0, 2.0, 1.0])
        V = np.array([[1.0, 1.0], [1.0, 2.0]])       # rows: eigenvalue powers 0,1
        row2 = np.linalg.solve(V, np.array([1.0, 4.0]))
        row3 = np.linalg.solve(V, np.array([1.0, 8.0]))
        assert row2 == pytest.approx([-2.0, 3.0])
        assert row3 == pytest.approx([-6.0, 7.0])

        exp = minimal_expansion(A, horizon=6)
        assert exp.mu == 2
        assert exp.coefficients(2) == pytest.approx(row2, abs=1e-10)
        assert exp.coefficients(3) == pytest.approx(row3, abs=1e-10)

    def test_power_diag_cube(self):
        A = np.diag([1.0, 2.0])
        exp = minimal_expansion(A)
        assert power_via_expansion(exp, A, 3) == pytest.approx(np.diag([1.0, 8.0]))

    def test_power_nilpotent(self):
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        exp = minimal_expansion(A, horizon=5)
        assert power_via_expansion(exp, A, 5) == pytest.approx(np.zeros((2, 2)), abs=1e-12)

    def test_power_scalar(self):
        a = -1.37
        exp = minimal_expansion([[a]], horizon=9)
        for p in range(10):
            assert power_via_expansion(exp, np.array([[a]]), p)[0, 0] == pytest.approx(a ** p, rel=1e-12)

    def test_closed_form_base_case(self):
        exp = minimal_expansion(np.diag([3.0, -1.0]))
        assert closed_form_check(exp, exp.mu) == 0.0

    def test_closed_form_diag(self):
        exp = minimal_expansion(np.diag([1.0, 2.0]), horizon=4)
        assert closed_form_check(exp, 4) < 1e-12

    def test_closed_form_nilpotent(self):
        exp = minimal_expansion(np.array([[0.0, 1.0], [0.0, 0.0]]), horizon=6)
        for p in range(2, 7):
            assert closed_form_check(exp, p) == 0.0


class TestTableInvariants:
    def test_recursion_identity_holds_exactly(self):
        # a_k(p+1) = a_{k-1}(p) + a_{mu-1}(p) a_k(mu), as stored.
        for A in box_corpus(seed=101, count=30, n_max=5):
            exp = minimal_expansion(A)
            base = exp.base_row
            for p in range(exp.mu, exp.horizon):
                cur = exp.coefficients(p)
                nxt = exp.coefficients(p + 1)
                expect = np.empty_like(cur)
                expect[0] = cur[-1] * base[0]
                expect[1:] = cur[:-1] + cur[-1] * base[1:]
                assert nxt == pytest.approx(expect, rel=0, abs=0)

    def test_annihilation_residual(self):
        for A in box_corpus(seed=102, count=30, n_max=6):
            exp = minimal_expansion(A)
            n = A.shape[0]
            lhs = np.linalg.matrix_power(A, exp.mu)
            rhs = power_via_expansion(exp, A, exp.mu)
            scale = max(np.linalg.norm(lhs), 1.0)
            assert np.linalg.norm(lhs - rhs) <= 1e-8 * scale

    def test_char_row_matches_minimal_when_full_degree(self):
        for A in box_corpus(seed=103, count=20, n_max=5):
            exp = minimal_expansion(A)
            if exp.mu == exp.n:
                assert exp.a_char == pytest.approx(exp.base_row, rel=1e-8, abs=1e-8)

    def test_char_row_annihilates(self):
        # A^n = sum abar_k A^k with the characteristic row.
        for A in box_corpus(seed=104, count=20, n_max=5):
            exp = minimal_expansion(A)
            n = A.shape[0]
            acc = np.zeros_like(A)
            P = np.eye(n)
            for k in range(n):
                acc += exp.a_char[k] * P
                P = P @ A
            lhs = np.linalg.matrix_power(A, n)
            assert np.linalg.norm(acc - lhs) <= 1e-8 * max(np.linalg.norm(lhs), 1.0)

    def test_power_reconstruction_corpus(self):
        for A in box_corpus(seed=105, count=50, n_max=6):
            n = A.shape[0]
            exp = minimal_expansion(A, horizon=2 * n)
            for p in range(exp.mu, 2 * n + 1):
                direct = np.linalg.matrix_power(A, p)
                via = power_via_expansion(exp, A, p)
                scale = np.linalg.norm(direct)
                assert np.linalg.norm(direct - via) <= 1e-8 * max(scale, 1e-30)

    def test_mu_counts_distinct_eigenvalues(self, rng):
        # Diagonalizable with well-separated repeated eigenvalues.
        for _ in range(25):
            n = int(rng.integers(2, 6))
            distinct = int(rng.integers(1, n + 1))
            eigs = rng.choice(np.linspace(-2.0, 2.0, 9), size=distinct, replace=False)
            diag = np.concatenate([eigs, rng.choice(eigs, size=n - distinct)])
            Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
            A = Q @ np.diag(diag) @ Q.T
            exp = minimal_expansion(A)
            assert exp.mu == distinct


@given(st.lists(st.sampled_from([-2, -1, 0, 1, 2]), min_size=1, max_size=5))
@settings(max_examples=60, deadline=None)
def test_mu_of_integer_diagonal_counts_distinct(values):
    A = np.diag(np.array(values, dtype=float))
    exp = minimal_expansion(A)
    assert exp.mu == len(set(values))


class TestErrors:
    def test_non_square(self):
        with pytest.raises(NonSquare):
            minimal_expansion(np.ones((2, 3)))

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            minimal_expansion(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_horizon_exceeded(self):
        exp = minimal_expansion(np.diag([1.0, 2.0]), horizon=4)
        with pytest.raises(HorizonExceeded):
            exp.coefficients(5)
        A = np.diag([1.0, 2.0])
        with pytest.raises(HorizonExceeded):
            power_via_expansion(exp, A, 5)
        with pytest.raises(HorizonExceeded):
            closed_form_check(exp, 5)

    def test_ambiguous_rank_reported(self):
        # Eigenvalue gap sitting exactly at the dependence threshold.
        A = np.diag([1.0, 1.0 + 2e-9])
        with pytest.raises(NumericalRankAmbiguous):
            minimal_expansion(A, tol=1e-9)

    def test_bad_horizon(self):
        with pytest.raises(ValueError):
            minimal_expansion(np.eye(3), horizon=2)
