"""Piecewise-affine structure of the complexified exponent.

Samples eps -> L_eps(E) for the transfer cocycle with complexified
phase, fits the integer-slope segments, and compares the measured
profile against the prediction assembled from the dual exponents: the
turning points sit at the distinct dual values over 2*pi and the slope
increments equal their multiplicities.  Also houses the scalar (abelian)
version of the same circle of ideas, energy-regime classification, and a
truncation-based outer approximation of the spectrum.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .cocycle import LEParams, schrodinger_grid_matfn, spectrum_grid
from .dual import DualSpectrum, dual_spectra, dual_spectrum
from .errors import (
    AccelerationMismatch,
    BorderlineEnergy,
    NonConvexProfile,
    RootNearCircle,
    SnapFailure,
)
from .numkernel import eig_small, make_rng

TWO_PI = 2.0 * np.pi

SNAP_TOL = 0.15


def _top_exponents(potential, energies, epsilons, alpha, le):
    """Top Lyapunov exponent and stderr for a joint (E, eps) lane sweep."""
    matfn, lanes = schrodinger_grid_matfn(potential, energies, epsilons)
    exps, stderr, _ = spectrum_grid(matfn, alpha, 2, lanes, le)
    return exps[:, 0], stderr[:, 0]


@dataclass(frozen=True)
class Segment:
    """One affine piece of the fitted profile."""

    lo: float
    hi: float
    slope_integer: int
    intercept: float
    raw_slope: float
    point_count: int

    @property
    def slope(self):
        return TWO_PI * self.slope_integer


@dataclass(frozen=True)
class JensenProfile:
    """Measured exponent profile with its dual-side prediction."""

    energy: complex
    eps_grid: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    base_value: float                  # L at eps = 0
    segments: tuple
    turning_points: np.ndarray         # from affine-piece intersections
    slope_increments: np.ndarray
    prediction: np.ndarray             # predicted L on eps_grid
    predicted_turning_points: np.ndarray
    dual: DualSpectrum
    sup_deviation: float
    fit_tol: float
    snap_residual: float


def _affine_fit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return float(slope), float(intercept), resid


def _greedy_segments(eps, values, fit_tol):
    """Left-to-right affine pieces of at least three samples each.

    A segment opens only where three consecutive samples already fit one
    line to ``fit_tol`` and extends while the refit stays inside it.
    Samples that open no segment (the rounded corner points) are skipped;
    turning points are recovered later from the intersections of the
    surviving pieces, not from grid samples.
    """
    n = eps.size
    segments = []
    i = 0
    while i <= n - 3:
        sl, ic, resid = _affine_fit(eps[i : i + 3], values[i : i + 3])
        if resid > fit_tol:
            i += 1
            continue
        j = i + 2
        while j + 1 < n:
            sl2, ic2, r2 = _affine_fit(eps[i : j + 2], values[i : j + 2])
            if r2 > fit_tol:
                break
            j, sl, ic = j + 1, sl2, ic2
        segments.append((i, j, sl, ic))
        i = j
    if not segments:
        raise SnapFailure(
            "no three consecutive samples fit an affine piece; "
            "grid too coarse or fit tolerance too tight"
        )
    return segments


def _snap_and_merge(eps, values, raw_segments, fit_tol):
    snapped = []
    worst = 0.0
    for i0, i1, sl, _ in raw_segments:
        k = round(sl / TWO_PI)
        dev = abs(sl / TWO_PI - k)
        worst = max(worst, dev)
        if dev > SNAP_TOL:
            raise SnapFailure(
                f"segment slope {sl / TWO_PI:.3f} (x 2pi) is {dev:.3f} from integer"
            )
        snapped.append([i0, i1, int(k), sl])
    merged = [snapped[0]]
    for seg in snapped[1:]:
        if seg[2] == merged[-1][2]:
            merged[-1][1] = seg[1]
        else:
            merged.append(seg)
    out = []
    for i0, i1, k, sl in merged:
        pts = slice(i0, i1 + 1)
        intercept = float(np.mean(values[pts] - TWO_PI * k * eps[pts]))
        refit = float(
            np.max(np.abs(values[pts] - (TWO_PI * k * eps[pts] + intercept)))
        )
        # the shared corner samples belong to two lines at once; they are
        # entitled to sit fit_tol off either one
        if refit > 2.0 * fit_tol:
            raise SnapFailure(
                f"refit residual {refit:.2e} after snapping exceeds {2 * fit_tol:.2e}"
            )
        out.append(
            Segment(
                lo=float(eps[i0]),
                hi=float(eps[i1]),
                slope_integer=k,
                intercept=intercept,
                raw_slope=sl,
                point_count=i1 - i0 + 1,
            )
        )
    return out, worst


def _turning_points(segments):
    pts, increments = [], []
    for a, b in zip(segments[:-1], segments[1:]):
        de = b.slope_integer - a.slope_integer
        if de <= 0:
            raise NonConvexProfile(
                f"slope integers {a.slope_integer} -> {b.slope_integer} do not increase"
            )
        pts.append((a.intercept - b.intercept) / (b.slope - a.slope))
        increments.append(de)
    return np.asarray(pts), np.asarray(increments, dtype=int)


def predicted_profile(dual, base_value, eps):
    """L0 - sum of dual exponents below 2*pi*|eps| plus the linear term."""
    eps = np.abs(np.asarray(eps, dtype=float))
    lhat = dual.lhat
    below = lhat[np.newaxis, :] < TWO_PI * eps[:, np.newaxis]
    return (
        base_value
        - np.sum(np.where(below, lhat[np.newaxis, :], 0.0), axis=1)
        + TWO_PI * np.sum(below, axis=1) * eps
    )


def profile(
    potential,
    energy,
    eps_min,
    eps_max,
    steps,
    alpha,
    le=LEParams(),
    fit_tol=None,
    group_tol=None,
):
    """Measure eps -> L_eps(E) on a grid and fit its affine pieces.

    Slopes are snapped to integer multiples of 2*pi; turning points come
    from intersecting adjacent pieces (grid points are not turning
    points, the intersections are).  The prediction is assembled from
    the dual spectrum on the same grid and ``sup_deviation`` is the max
    pointwise gap between the two profiles.

    For complex energies the prediction is valid as stated for eps <= 0;
    positive-eps predictions use the dual spectrum at conj(E), through
    complex conjugation of the whole cocycle.
    """
    if not eps_min < eps_max:
        raise ValueError("need eps_min < eps_max")
    if steps < 16:
        raise ValueError("need at least 16 grid points")
    grid = np.linspace(eps_min, eps_max, steps)
    eps_lanes = np.concatenate([grid, [0.0]])
    values, stderr = _top_exponents(
        potential, complex(energy), eps_lanes, alpha, le
    )
    base_value = float(values[-1])
    values, stderr = values[:steps], stderr[:steps]

    # convexity guard: no sample below the chord of its neighbours beyond
    # noise.  The allowance carries the estimator's own O(1/n) corner
    # rounding on top of the phase-scatter term: finite orbits cut convex
    # corners from below, a bias the across-phase stderr cannot see.
    n_orbit = le.resolve_n(2)
    mid = 0.5 * (values[:-2] + values[2:])
    dips = values[1:-1] - mid - (3.0 * stderr[1:-1] + 20.0 / n_orbit)
    if np.any(dips > 0):
        worst = int(np.argmax(dips))
        raise NonConvexProfile(
            f"sample at eps={grid[worst + 1]:.4f} sits {dips[worst]:.2e} above convexity"
        )

    if fit_tol is None:
        fit_tol = 3.0 * float(np.median(stderr))
    raw = _greedy_segments(grid, values, fit_tol)
    segments, snap_resid = _snap_and_merge(grid, values, raw, fit_tol)
    turning, increments = _turning_points(segments)

    is_real_energy = complex(energy).imag == 0.0
    dual = dual_spectrum(potential, energy, alpha, group_tol=group_tol)
    prediction = np.empty(steps)
    neg = grid <= 0.0
    if is_real_energy:
        prediction[:] = predicted_profile(dual, base_value, grid)
    else:
        prediction[neg] = predicted_profile(dual, base_value, grid[neg])
        if np.any(~neg):
            dual_conj = dual_spectrum(
                potential, np.conj(complex(energy)), alpha,
                group_tol=group_tol,
            )
            prediction[~neg] = predicted_profile(
                dual_conj, base_value, grid[~neg]
            )
    pred_turning = np.asarray([g for g, _ in dual.groups])
    return JensenProfile(
        energy=complex(energy),
        eps_grid=grid,
        values=values,
        stderr=stderr,
        base_value=base_value,
        segments=tuple(segments),
        turning_points=turning,
        slope_increments=increments,
        prediction=prediction,
        predicted_turning_points=pred_turning,
        dual=dual,
        sup_deviation=float(np.max(np.abs(values - prediction))),
        fit_tol=fit_tol,
        snap_residual=snap_resid,
    )


@dataclass(frozen=True)
class AccelerationResult:
    omega: int
    residual: float
    slope: float
    dual_zero_count: int


def acceleration(
    potential,
    energy,
    alpha,
    le=LEParams(),
    delta=2e-3,
    zero_tol=1e-3,
    dual=None,
    stencil_values=None,
):
    """Right slope of eps -> L_eps(E)/2pi at 0+, snapped to an integer.

    A three-point stencil at delta, 2*delta, 3*delta feeds a least
    squares slope; the snapped value is cross-checked against the number
    of dual exponents below ``zero_tol`` and AccelerationMismatch is
    raised when the two routes disagree.  ``stencil_values`` injects
    exponents already measured on that stencil (batch callers).
    """
    eps_lanes = np.asarray([delta, 2 * delta, 3 * delta])
    if stencil_values is None:
        values, _ = _top_exponents(
            potential, complex(energy), eps_lanes, alpha, le
        )
    else:
        values = np.asarray(stencil_values, dtype=float)
    slope, _, _ = _affine_fit(eps_lanes, values)
    omega_raw = slope / TWO_PI
    omega = round(omega_raw)
    residual = abs(omega_raw - omega)
    if residual > SNAP_TOL:
        raise SnapFailure(
            f"acceleration estimate {omega_raw:.3f} is {residual:.3f} from integer"
        )
    if dual is None:
        dual = dual_spectrum(potential, energy, alpha)
    count = int(np.sum(dual.lhat < zero_tol))
    if count != omega:
        raise AccelerationMismatch(
            f"finite-difference slope gives {omega}, dual zero count gives {count}"
        )
    return AccelerationResult(
        omega=omega, residual=residual, slope=slope, dual_zero_count=count
    )


@dataclass(frozen=True)
class TailFit:
    """Affine fit of the exponent profile far below every turning point."""

    eps_grid: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float                # of the refit at the pinned slope
    pinned_slope: float             # -2*pi*degree
    slope_deviation: float
    intercept_deviation: float      # vs log|V_d|


def tail_fit(potential, energy, alpha, le=LEParams(), margin=0.08,
             span=0.2, steps=16, dual=None):
    """Fit the affine tail L_eps = -2*pi*d*eps + log|V_d| at eps << 0.

    The grid is placed ``margin`` below the lowest turning point
    -gamma_max, where the profile is exactly affine with slope -2*pi*d
    and intercept log of the top coefficient.
    """
    if dual is None:
        dual = dual_spectrum(potential, energy, alpha)
    d = potential.degree
    hi = -(float(np.max(dual.gamma)) + margin)
    grid = np.linspace(hi - span, hi, steps)
    values, _ = _top_exponents(potential, complex(energy), grid, alpha, le)
    slope, _, _ = _affine_fit(grid, values)
    pinned = -TWO_PI * d
    intercept = float(np.mean(values - pinned * grid))
    log_lead = float(np.log(np.abs(potential.leading)))
    return TailFit(
        eps_grid=grid,
        values=values,
        slope=slope,
        intercept=intercept,
        pinned_slope=pinned,
        slope_deviation=abs(slope - pinned),
        intercept_deviation=abs(intercept - log_lead),
    )


REGIMES = ("OutsideSpectrum", "Supercritical", "Critical", "Subcritical")


@dataclass(frozen=True)
class Classification:
    energy: complex
    lyapunov: float            # L(E), per-step natural log
    dual_smallest: float       # smallest nonnegative dual exponent
    regime: str
    omega: int
    subcritical_radius: Optional[float]
    uniform: bool


def classify(potential, energy, alpha, le=LEParams(), tau=1e-3, delta=2e-3):
    """Regime of E from the sign pattern of (L, smallest dual exponent).

    Values inside [tau/2, 2*tau] are undecidable at estimator noise and
    raise BorderlineEnergy rather than guessing.  The base exponent and
    the acceleration stencil share one batched cocycle run.
    """
    eps_lanes = np.asarray([0.0, delta, 2 * delta, 3 * delta])
    values, _ = _top_exponents(
        potential, complex(energy), eps_lanes, alpha, le
    )
    l0 = float(values[0])
    dual = dual_spectrum(potential, energy, alpha)
    lhat1 = float(dual.lhat[0])
    for name, val in (("L", abs(l0)), ("dual exponent", abs(lhat1))):
        if tau / 2 <= val <= 2 * tau:
            raise BorderlineEnergy(
                f"{name} = {val:.2e} lies in the undecidable band "
                f"[{tau / 2:.1e}, {2 * tau:.1e}]"
            )
    l_pos = l0 > 2 * tau
    d_pos = lhat1 > 2 * tau
    if l_pos and d_pos:
        regime = "OutsideSpectrum"
    elif l_pos:
        regime = "Supercritical"
    elif d_pos:
        regime = "Subcritical"
    else:
        regime = "Critical"
    acc = acceleration(
        potential, energy, alpha, le=le, delta=delta, zero_tol=tau,
        dual=dual, stencil_values=values[1:],
    )
    return Classification(
        energy=complex(energy),
        lyapunov=l0,
        dual_smallest=lhat1,
        regime=regime,
        omega=acc.omega,
        subcritical_radius=lhat1 / TWO_PI if regime == "Subcritical" else None,
        uniform=d_pos,
    )


@dataclass(frozen=True)
class HaroPuigReport:
    lyapunov: float
    dual_sum: float
    log_leading: float
    residual: float


def haro_puig_many(potential, energies, alpha, le=LEParams(), dual_le=None):
    """Exponent-sum identity residuals for many energies, batched.

    |L(E) - 2*pi*sum(gamma_i) - log|V_d|| with the left side directly
    estimated from the transfer cocycle and the right side entirely from
    the dual cocycle plus the top coefficient.
    """
    energies = np.atleast_1d(np.asarray(energies, dtype=complex))
    values, _ = _top_exponents(
        potential, energies, np.zeros(energies.size), alpha, le
    )
    duals = dual_spectra(potential, energies, alpha, le=dual_le)
    log_lead = float(np.log(np.abs(potential.leading)))
    out = []
    for l0, dual in zip(values, duals):
        dual_sum = float(np.sum(dual.lhat))
        out.append(
            HaroPuigReport(
                lyapunov=float(l0),
                dual_sum=dual_sum,
                log_leading=log_lead,
                residual=abs(float(l0) - dual_sum - log_lead),
            )
        )
    return out


def haro_puig_residual(potential, energy, alpha, le=LEParams()):
    """Single-energy form of the exponent-sum identity residual."""
    return haro_puig_many(potential, [energy], alpha, le=le)[0]


@dataclass(frozen=True)
class ScalarJensen:
    """Log-integral of E - V around the complexified circle, two ways."""

    energy: complex
    eps: float
    poly_coeffs: np.ndarray     # ascending powers of z for z^d (E - V(z))
    roots: np.ndarray
    quadrature: float
    closed_form: float
    difference: float
    richardson: float
    root_residual: float


def scalar_jensen(potential, energy, eps=0.0, nodes=4096):
    """Integral of log|E - V(x + i eps)| over a period, two independent ways.

    Quadrature: midpoint rule on ``nodes`` points, with the half-node
    value recorded as a Richardson consistency check.  Closed form: the
    roots z_j of z^d (E - V(z)) give
    log|V_d| + 2 pi d eps + sum_j log max(e^{-2 pi eps}, |z_j|).
    A RootNearCircle warning fires when a root modulus comes within 1e-6
    of the integration circle e^{-2 pi eps}, where quadrature degrades.
    """
    d = potential.degree
    for m in (nodes // 2, nodes):
        x = (np.arange(m) + 0.5) / m
        vals = np.log(np.abs(energy - potential.evaluate(x, eps)))
        if m == nodes:
            quad = float(np.mean(vals))
        else:
            half = float(np.mean(vals))
    richardson = abs(quad - half)

    coeffs = np.zeros(2 * d + 1, dtype=complex)   # ascending powers
    for k in range(-d, d + 1):
        coeffs[k + d] -= potential.coeff(k)
    coeffs[d] += energy
    monic = coeffs / coeffs[-1]
    comp = np.zeros((2 * d, 2 * d), dtype=complex)
    comp[0, :] = -monic[:-1][::-1]
    comp[np.arange(1, 2 * d), np.arange(0, 2 * d - 1)] = 1.0
    roots = eig_small(comp)
    powers = roots[:, np.newaxis] ** np.arange(2 * d + 1)
    pvals = powers @ coeffs
    scale = float(np.max(np.abs(coeffs))) * np.maximum(np.abs(roots), 1.0) ** (
        2 * d
    )
    root_residual = float(np.max(np.abs(pvals) / scale))

    radius = np.exp(-TWO_PI * eps)
    if np.min(np.abs(np.abs(roots) - radius)) < 1e-6:
        warnings.warn(
            "a root lies within 1e-6 of the integration circle",
            RootNearCircle,
            stacklevel=2,
        )
    closed = float(
        np.log(np.abs(potential.leading))
        + TWO_PI * d * eps
        + np.sum(np.log(np.maximum(radius, np.abs(roots))))
    )
    return ScalarJensen(
        energy=complex(energy),
        eps=float(eps),
        poly_coeffs=coeffs,
        roots=roots,
        quadrature=quad,
        closed_form=closed,
        difference=abs(quad - closed),
        richardson=richardson,
        root_residual=root_residual,
    )


@dataclass(frozen=True)
class SpectrumApprox:
    """Union of truncation eigenvalues merged into intervals."""

    intervals: tuple                 # (lo, hi) pairs, ascending
    eigenvalues: np.ndarray          # pooled, sorted
    truncation: int
    phase_count: int

    def largest_interval(self):
        widths = [hi - lo for lo, hi in self.intervals]
        return self.intervals[int(np.argmax(widths))]


def approximate_spectrum(
    potential, alpha, truncation=1000, phase_count=16, merge_tol=0.02,
    seed=None,
):
    """Outer approximation of the spectrum from Dirichlet truncations.

    Eigenvalues of ``truncation``-site Hermitian boxes are pooled over a
    phase grid and merged into intervals wherever consecutive gaps stay
    below ``merge_tol``.  This is a documented heuristic: it overshoots
    into small gaps and misses nothing by more than the truncation
    resolution; it exists to supply believable on-spectrum energies.
    """
    if not potential.is_real:
        raise ValueError("spectrum approximation needs a real-valued potential")
    rng = make_rng(seed if seed is not None else 0x5EED)
    off = rng.uniform(0.0, 1.0 / phase_count)
    pool = []
    sites = np.arange(truncation)
    for j in range(phase_count):
        x = j / phase_count + off
        diag = potential.evaluate((x + sites * alpha) % 1.0).real
        vals = eigh_tridiagonal(
            diag, np.ones(truncation - 1), eigvals_only=True
        )
        pool.append(vals)
    pool = np.sort(np.concatenate(pool))
    intervals = []
    lo = prev = pool[0]
    for v in pool[1:]:
        if v - prev > merge_tol:
            intervals.append((float(lo), float(prev)))
            lo = v
        prev = v
    intervals.append((float(lo), float(prev)))
    return SpectrumApprox(
        intervals=tuple(intervals),
        eigenvalues=pool,
        truncation=truncation,
        phase_count=phase_count,
    )


def auto_energy(potential, alpha, **kwargs):
    """An energy well inside the approximate spectrum.

    The midpoint of the largest merged interval, snapped to the nearest
    pooled truncation eigenvalue so it cannot land in a sub-resolution
    spectral gap.
    """
    approx = approximate_spectrum(potential, alpha, **kwargs)
    lo, hi = approx.largest_interval()
    mid = 0.5 * (lo + hi)
    idx = int(np.argmin(np.abs(approx.eigenvalues - mid)))
    return float(approx.eigenvalues[idx])
