import numpy as np
import pytest

import qpjensen as qp
from qpjensen import errors
from qpjensen.cocycle import (
    CocycleSpec,
    LEParams,
    domination_check,
    exponent_sum_check,
    invariant_frames,
    iterate,
    lyapunov_spectrum,
    schrodinger_cocycle,
)

ALPHA = qp.GOLDEN_MEAN


def constant_cocycle(m):
    mat = np.asarray(m, dtype=complex)

    def gen(theta):
        theta = np.asarray(theta)
        return np.broadcast_to(mat, theta.shape + mat.shape).copy()

    return CocycleSpec(alpha=ALPHA, dim=mat.shape[0], generator=gen,
                       name="constant")


class TestIterate:
    def test_zero_steps_identity(self, free_potential, alpha):
        c = schrodinger_cocycle(free_potential, 3.0, 0.0, alpha)
        assert np.allclose(iterate(c, 0.3, 0).full(), np.eye(2))

    def test_constant_power(self):
        c = constant_cocycle(np.diag([2.0, 1.0]))
        got = iterate(c, 0.0, 10).full()
        assert np.allclose(got, np.diag([1024.0, 1.0]))

    def test_free_transfer_square(self, free_potential, alpha):
        c = schrodinger_cocycle(free_potential, 3.0, 0.0, alpha)
        got = iterate(c, 0.1, 2).full()
        assert np.allclose(got, [[8.0, -3.0], [3.0, -1.0]])

    def test_overflow_guard(self):
        c = constant_cocycle(np.diag([1e100, 1.0]))
        r = iterate(c, 0.0, 5)
        assert r.log_scale > 0
        assert np.isfinite(r.matrix).all()
        with pytest.raises(OverflowError):
            r.full()


class TestLyapunovSpectrum:
    def test_constant_diag(self):
        c = constant_cocycle(np.diag([2.0, 0.5]))
        spec = lyapunov_spectrum(c, LEParams(orbit_length=2000, phase_count=4))
        assert abs(spec.exponents[0] - np.log(2)) < 1e-10
        assert abs(spec.exponents[1] + np.log(2)) < 1e-10

    def test_free_schrodinger(self, free_potential, alpha):
        c = schrodinger_cocycle(free_potential, 3.0, 0.0, alpha)
        spec = lyapunov_spectrum(c, LEParams(orbit_length=20_000))
        want = np.log((3 + np.sqrt(5)) / 2)
        assert abs(spec.top - want) < 1e-6

    @pytest.mark.slow
    def test_amo_supercritical_log_lambda(self, amo2, amo2_energy, alpha):
        c = schrodinger_cocycle(amo2, amo2_energy, 0.0, alpha)
        spec = lyapunov_spectrum(c, LEParams())
        assert abs(spec.top - np.log(2)) < 1e-2

    def test_exponent_pair_symmetry(self, sem_std, alpha):
        c = schrodinger_cocycle(sem_std, 1.3, 0.0, alpha)
        spec = lyapunov_spectrum(c, LEParams(orbit_length=4000))
        assert abs(np.sum(spec.exponents)) < max(3 * np.sum(spec.stderr), 1e-9)

    def test_exponent_sum_is_logdet_rate(self, sem_std, alpha):
        c = schrodinger_cocycle(sem_std, 0.7 + 0.4j, 0.1, alpha)
        gap, spec = exponent_sum_check(
            c, LEParams(orbit_length=2000, phase_count=8)
        )
        assert abs(gap) < max(3 * np.sum(spec.stderr), 1e-9)

    def test_stderr_shrinks_with_phases(self, amo2, alpha):
        c = schrodinger_cocycle(amo2, 1.1, 0.0, alpha)
        s16 = lyapunov_spectrum(c, LEParams(orbit_length=4000, phase_count=16))
        s64 = lyapunov_spectrum(c, LEParams(orbit_length=4000, phase_count=64))
        assert s64.stderr[0] <= s16.stderr[0]

    def test_orbit_too_short_rejected(self, amo2, alpha):
        c = schrodinger_cocycle(amo2, 1.1, 0.0, alpha)
        with pytest.raises(ValueError):
            lyapunov_spectrum(c, LEParams(orbit_length=100))


class TestDomination:
    def test_constant_diag_gap(self):
        c = constant_cocycle(np.diag([2.0, 1.0]))
        res = domination_check(c, 1, n=2000)
        assert res.dominated
        assert abs(res.gap_estimate - np.log(2)) < 1e-6

    def test_amo_off_axis_uniformly_hyperbolic(self, amo2, alpha):
        c = schrodinger_cocycle(amo2, 0.5j, 0.0, alpha)
        res = domination_check(c, 1, n=4000)
        assert res.dominated and res.stable

    def test_dual_sem_complex_energy_both_indices(self, sem_std, alpha):
        dc = qp.build_dual(sem_std, 2 + 1j, 0.0, alpha)
        coc = dc.cocycle()
        for k in (1, 2):
            res = domination_check(coc, k, n=4000)
            assert res.dominated, f"k={k} not dominated"

    def test_bad_index(self):
        c = constant_cocycle(np.diag([2.0, 1.0]))
        with pytest.raises(ValueError):
            domination_check(c, 2)


class TestInvariantFrames:
    def test_constant_diag_axes(self):
        c = constant_cocycle(np.diag([2.0, 1.0]))
        fast, slow = invariant_frames(c, 1, 0.3)
        assert abs(abs(fast[0, 0]) - 1) < 1e-8 and abs(fast[1, 0]) < 1e-8
        assert abs(abs(slow[1, 0]) - 1) < 1e-8 and abs(slow[0, 0]) < 1e-8

    def test_rotated_constant_matches_eigenvectors(self):
        t = 0.4
        rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
        m = rot @ np.diag([2.0, 0.5]) @ rot.T
        c = constant_cocycle(m)
        fast, slow = invariant_frames(c, 1, 0.1)
        # fast/slow spans equal the eigenvector directions
        assert np.linalg.norm(fast[:, 0] - rot[:, 0] * (rot[:, 0] @ fast[:, 0])) < 1e-8
        assert np.linalg.norm(slow[:, 0] - rot[:, 1] * (rot[:, 1] @ slow[:, 0])) < 1e-8

    def test_invariance_residual(self, amo2, alpha):
        c = schrodinger_cocycle(amo2, 0.5j, 0.0, alpha)
        theta = 0.22
        fast, _ = invariant_frames(c, 1, theta)
        fast_next, _ = invariant_frames(c, 1, (theta + alpha) % 1.0)
        a = c.generator(np.asarray([theta]))[0]
        w = a @ fast
        coeff = fast_next.conj().T @ w
        assert np.linalg.norm(w - fast_next @ coeff) < 1e-6

    def test_not_converged(self):
        # rotation cocycle has equal exponents: no invariant splitting
        t = 2 * np.pi * qp.GOLDEN_MEAN
        rot = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])
        c = constant_cocycle(rot)
        with pytest.raises(errors.FrameNotConverged):
            invariant_frames(c, 1, 0.0, n0=16, max_doublings=3)
