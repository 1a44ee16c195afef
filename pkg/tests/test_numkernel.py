import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpjensen import errors
from qpjensen.numkernel import (
    eig_small,
    logdet_arg_path,
    make_rng,
    path_winding,
    qr_positive,
    qr_positive_batch,
    solve_dense,
)


def random_matrix(n, seed):
    rng = make_rng(seed)
    return rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))


class TestQRPositive:
    def test_identity(self):
        q, r = qr_positive(np.eye(3))
        assert np.allclose(q, np.eye(3))
        assert np.allclose(r, np.eye(3))

    def test_already_triangular(self):
        q, r = qr_positive(np.diag([2.0, 1.0]))
        assert np.allclose(q, np.eye(2))
        assert np.allclose(r, np.diag([2.0, 1.0]))

    def test_reconstruction_random(self):
        w = random_matrix(4, 0x5EED)
        q, r = qr_positive(w)
        assert np.linalg.norm(w - q @ r) < 1e-12
        assert np.linalg.norm(q.conj().T @ q - np.eye(4)) < 1e-12
        diag = np.diagonal(r)
        assert np.all(diag.real > 0) and np.all(diag.imag == 0)
        assert np.allclose(np.triu(r), r)

    def test_idempotent_on_own_product(self):
        w = random_matrix(5, 7)
        q, r = qr_positive(w)
        q2, r2 = qr_positive(q @ r)
        assert np.linalg.norm(q - q2) < 1e-12
        assert np.linalg.norm(r - r2) < 1e-12

    def test_rank_deficient(self):
        w = np.ones((3, 3), dtype=complex)
        with pytest.raises(errors.DegenerateFrame):
            qr_positive(w)

    @given(st.integers(min_value=0, max_value=2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_batch_matches_single(self, seed):
        w = random_matrix(3, seed)
        try:
            q, r = qr_positive(w)
        except errors.DegenerateFrame:
            return
        qb, logdiag = qr_positive_batch(w[np.newaxis])
        assert np.linalg.norm(qb[0] - q) < 1e-10
        assert np.allclose(np.exp(logdiag[0]), np.diagonal(r).real, rtol=1e-10)


class TestEigSmall:
    def test_diagonal(self):
        vals = eig_small(np.diag([5.0, 2.0, -1.0]))
        assert np.allclose(vals, [5.0, 2.0, -1.0])

    def test_companion_quadratic(self):
        # z^2 - 3z + 2 = (z-1)(z-2)
        comp = np.array([[3.0, -2.0], [1.0, 0.0]])
        vals = eig_small(comp)
        assert np.allclose(vals, [2.0, 1.0])

    def test_hermitian_trace(self):
        w = random_matrix(8, 42)
        h = w + w.conj().T
        vals = eig_small(h)
        assert np.max(np.abs(vals.imag)) < 1e-10
        assert abs(np.sum(vals) - np.trace(h)) < 1e-10

    def test_similarity_invariance(self):
        m = random_matrix(6, 3)
        p = np.eye(6) + 0.3 * random_matrix(6, 4)
        vals1 = eig_small(m)
        vals2 = eig_small(np.linalg.solve(p, m @ p))
        assert np.max(np.abs(np.sort_complex(vals1) - np.sort_complex(vals2))) < 1e-8

    def test_ordering_convention(self):
        vals = eig_small(np.diag([1.0, -1.0, 1j, -1j]))
        # equal modulus: ascending argument in (-pi, pi]
        assert np.allclose(vals, [-1j, 1.0, 1j, -1.0])

    def test_dimension_cap(self):
        with pytest.raises(ValueError):
            eig_small(np.eye(5000))


class TestSolveDense:
    def test_identity(self):
        rhs = np.array([1.0, 2.0, 3.0])
        assert np.allclose(solve_dense(np.eye(3), rhs), rhs)

    def test_diagonal(self):
        x = solve_dense(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        assert np.allclose(x, [1.0, 1.0])

    def test_random_well_conditioned(self):
        m = np.eye(50) + 0.1 * random_matrix(50, 11)
        rhs = random_matrix(50, 12)[:, 0]
        x = solve_dense(m, rhs)
        assert np.linalg.norm(m @ x - rhs) < 1e-10 * np.linalg.norm(rhs)

    def test_singular(self):
        with pytest.raises(errors.SingularSystem):
            solve_dense(np.zeros((2, 2)), np.ones(2))

    def test_roundtrip_matrix_rhs(self):
        m = np.eye(6) + 0.2 * random_matrix(6, 5)
        b = random_matrix(6, 6)
        x = solve_dense(m, b)
        assert np.linalg.norm(m @ x - b) < 1e-10 * np.linalg.norm(b)


class TestLogdetArgPath:
    def test_constant(self):
        ms = [np.diag([1.0 + 1.0j, 2.0])] * 10
        assert abs(path_winding(ms)) < 1e-14

    def test_unit_circle(self):
        k = 64
        ms = [np.array([[np.exp(2j * np.pi * j / k)]]) for j in range(k + 1)]
        assert abs(path_winding(ms) - 1.0) < 1e-12

    def test_diag_with_spectator(self):
        # product-of-arguments oracle: winding of det = winding of the
        # moving factor; the constant factor 2 contributes nothing
        k = 64
        ms = [np.diag([np.exp(2j * np.pi * j / k), 2.0]) for j in range(k + 1)]
        args = logdet_arg_path(ms)
        expected = np.angle(np.exp(2j * np.pi * 0 / k) * 2.0) + np.linspace(
            0, 2 * np.pi, k + 1
        )
        assert np.max(np.abs(args - expected)) < 1e-12
        assert abs(path_winding(ms) - 1.0) < 1e-12

    def test_too_coarse(self):
        ms = [np.array([[1.0]]), np.array([[-1.0]])]
        with pytest.raises(errors.GridTooCoarse):
            logdet_arg_path(ms)

    def test_lazy_iterable(self):
        gen = (np.array([[np.exp(2j * np.pi * j / 32)]]) for j in range(33))
        assert abs(path_winding(gen) - 1.0) < 1e-12
