import numpy as np
import pytest

import qpjensen as qp
from qpjensen import errors
from qpjensen.cocycle import LEParams
from qpjensen.jensen import (
    acceleration,
    approximate_spectrum,
    auto_energy,
    classify,
    haro_puig_many,
    predicted_profile,
    profile,
    scalar_jensen,
    tail_fit,
)
from qpjensen.numkernel import make_rng

ALPHA = qp.GOLDEN_MEAN
FAST = LEParams(orbit_length=4000, phase_count=16)


class TestScalarJensen:
    def test_free_roots_and_value(self):
        sj = scalar_jensen(qp.amo(1.0), 3.0, 0.0)
        roots = np.sort(np.abs(sj.roots))
        assert roots[1] == pytest.approx((3 + np.sqrt(5)) / 2, abs=1e-12)
        assert roots[0] == pytest.approx((3 - np.sqrt(5)) / 2, abs=1e-12)
        assert sj.closed_form == pytest.approx(np.log((3 + np.sqrt(5)) / 2),
                                               abs=1e-10)
        assert sj.difference < 1e-10

    def test_unit_modulus_roots(self):
        # roots land exactly on the integration circle, which is precisely
        # the configuration the quadrature-degradation warning flags
        with pytest.warns(errors.RootNearCircle):
            sj = scalar_jensen(qp.amo(1.0), 0.0, 0.0)
        assert np.allclose(np.abs(sj.roots), 1.0, atol=1e-12)
        assert abs(sj.closed_form) < 1e-12

    def test_large_eps_tail(self):
        # once every root lies outside the shrunken circle the integral is
        # exactly 2*pi*eps: the root product has unit modulus (|V_-d/V_d|=1)
        v = qp.amo(1.0)
        for eps in (0.8, 1.2):
            sj = scalar_jensen(v, 3.0, eps)
            assert sj.difference < 1e-8
            assert sj.closed_form == pytest.approx(2 * np.pi * eps, rel=1e-9)

    def test_random_agreement(self):
        rng = make_rng(0x5EED)
        v = qp.sem(0.6, 0.3)
        checked = 0
        while checked < 20:
            e = complex(4 * rng.uniform(-1, 1), 4 * rng.uniform(-1, 1))
            eps = rng.uniform(-0.3, 0.3)
            radius = np.exp(-2 * np.pi * eps)
            sj = scalar_jensen(v, e, eps)
            if np.min(np.abs(np.abs(sj.roots) - radius)) < 1e-4:
                continue
            assert sj.difference < 1e-8, (e, eps)
            assert sj.root_residual < 1e-8
            checked += 1

    def test_root_near_circle_warns(self):
        # E = V(x0) puts a root exactly on the unit circle
        v = qp.amo(1.0)
        with pytest.warns(errors.RootNearCircle):
            scalar_jensen(v, 2.0, 0.0)


class TestApproximateSpectrum:
    def test_free_band(self, free_potential):
        approx = approximate_spectrum(free_potential, ALPHA, truncation=1000)
        lo, hi = approx.intervals[0][0], approx.intervals[-1][1]
        assert abs(lo + 2) < 0.05 and abs(hi - 2) < 0.05

    def test_amo2_norm_bound(self, amo2):
        approx = approximate_spectrum(amo2, ALPHA, truncation=600)
        assert approx.intervals[0][0] > -6.0 - 1e-9
        assert approx.intervals[-1][1] < 6.0 + 1e-9

    def test_auto_energy_is_eigenvalue(self, amo2):
        e = auto_energy(amo2, ALPHA)
        approx = approximate_spectrum(amo2, ALPHA)
        assert np.min(np.abs(approx.eigenvalues - e)) < 1e-12

    def test_needs_real_potential(self):
        v = qp.from_pairs([(1, 0.5j), (-1, 0.5j)])
        with pytest.raises(ValueError):
            approximate_spectrum(v, ALPHA)


class TestProfile:
    @pytest.mark.slow
    def test_amo2_single_kink_slope_one(self, amo2, amo2_energy):
        prof = profile(amo2, amo2_energy, 0.02, 0.5, 24, ALPHA,
                       le=LEParams(orbit_length=20_000))
        assert len(prof.segments) == 1
        assert prof.segments[0].slope_integer == 1
        # affine piece L = ln2 + 2*pi*eps throughout
        want = np.log(2) + 2 * np.pi * prof.eps_grid
        assert np.max(np.abs(prof.values - want)) < 1e-2

    @pytest.mark.slow
    def test_amo_half_flat_then_slope_one(self, amo_half, amo_half_energy):
        prof = profile(amo_half, amo_half_energy, 0.0, 0.25, 32, ALPHA,
                       le=LEParams(orbit_length=20_000))
        slopes = [s.slope_integer for s in prof.segments]
        assert slopes == [0, 1]
        kink = np.log(2) / (2 * np.pi)
        assert abs(prof.turning_points[0] - kink) < 5e-3
        assert prof.slope_increments.tolist() == [1]

    def test_evenness_real_energy(self, amo_half, amo_half_energy):
        le = LEParams(orbit_length=4000, phase_count=16)
        prof = profile(amo_half, amo_half_energy, -0.3, 0.3, 31, ALPHA, le=le)
        vals = prof.values
        sym = vals[::-1]
        tol = 3 * (prof.stderr + prof.stderr[::-1]) + 1e-6
        assert np.all(np.abs(vals - sym) < tol)

    def test_prediction_helper_shapes(self, sem_std):
        dual = qp.dual_spectrum(sem_std, 1.3, ALPHA, le=FAST)
        eps = np.linspace(0, 0.5, 11)
        pred = predicted_profile(dual, 0.1, eps)
        assert pred.shape == eps.shape
        assert pred[0] == pytest.approx(0.1)
        # beyond all turning points the slope is 2*pi*d
        tail_slope = (pred[-1] - pred[-2]) / (eps[-1] - eps[-2])
        assert tail_slope == pytest.approx(2 * np.pi * 2, rel=1e-12)

    def test_grid_validation(self, sem_std):
        with pytest.raises(ValueError):
            profile(sem_std, 1.0, 0.5, 0.0, 32, ALPHA)
        with pytest.raises(ValueError):
            profile(sem_std, 1.0, 0.0, 0.5, 8, ALPHA)


class TestAcceleration:
    @pytest.mark.slow
    def test_amo2_is_one(self, amo2, amo2_energy):
        acc = acceleration(amo2, amo2_energy, ALPHA)
        assert acc.omega == 1

    @pytest.mark.slow
    def test_amo_half_is_zero(self, amo_half, amo_half_energy):
        acc = acceleration(amo_half, amo_half_energy, ALPHA)
        assert acc.omega == 0

    @pytest.mark.slow
    def test_sem_large_second_harmonic_iff(self):
        # omega = 2 exactly when L = log|lam2| (with |lam2| >= 1)
        pot = qp.sem(0.2, 2.0)
        e = auto_energy(pot, ALPHA)
        acc = acceleration(pot, e, ALPHA)
        reps = haro_puig_many(pot, [e], ALPHA)
        l_matches = abs(reps[0].lyapunov - np.log(2.0)) < 1e-2
        assert (acc.omega == 2) == l_matches
        assert acc.omega == 2  # this energy does sit in the doubled phase


class TestClassify:
    @pytest.mark.slow
    def test_amo2_far_energy_outside(self, amo2):
        c = classify(amo2, 10.0, ALPHA)
        assert c.regime == "OutsideSpectrum"
        assert c.uniform

    @pytest.mark.slow
    def test_amo2_supercritical(self, amo2, amo2_energy):
        c = classify(amo2, amo2_energy, ALPHA)
        assert c.regime == "Supercritical"
        assert c.omega == 1
        assert abs(c.lyapunov - np.log(2)) < 1e-2
        assert c.subcritical_radius is None

    @pytest.mark.slow
    def test_amo_half_subcritical(self, amo_half, amo_half_energy):
        c = classify(amo_half, amo_half_energy, ALPHA)
        assert c.regime == "Subcritical"
        assert c.omega == 0
        assert abs(c.subcritical_radius - np.log(2) / (2 * np.pi)) < 5e-3
        assert c.uniform


class TestHaroPuig:
    def test_amo_complex_energy(self, amo2):
        rep = haro_puig_many(amo2, [0.5j], ALPHA)[0]
        assert rep.residual < 1e-2

    def test_sem_complex_energy(self, sem_std):
        rep = haro_puig_many(sem_std, [2 + 1j], ALPHA)[0]
        assert rep.residual < 1e-2

    @pytest.mark.slow
    def test_amo_critical_coupling(self):
        pot = qp.amo(1.0)
        e = auto_energy(pot, ALPHA)
        rep = haro_puig_many(pot, [e], ALPHA)[0]
        assert rep.residual < 1e-2
        # critical point: both the exponent and the dual exponent vanish
        assert abs(rep.lyapunov) < 1e-2
        assert rep.dual_sum < 1e-2


class TestTailFit:
    @pytest.mark.slow
    def test_amo2_tail(self, amo2):
        fit = tail_fit(amo2, 1.0, ALPHA)
        assert fit.slope_deviation < 1e-3 * 2 * np.pi
        assert fit.intercept_deviation < 1e-2

    @pytest.mark.slow
    def test_sem_tail(self, sem_std):
        fit = tail_fit(sem_std, 0.7, ALPHA)
        assert fit.pinned_slope == pytest.approx(-4 * np.pi)
        assert fit.slope_deviation < 1e-3 * 2 * np.pi
        assert fit.intercept_deviation < 1e-2
