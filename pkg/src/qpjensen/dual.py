"""Strip cocycle of the long-range dual operator.

The dual of u_{n+1} + u_{n-1} + V(x + n alpha) u_n = E u_n is the
finite-range operator

    sum_{k=-d}^{d} e^{-2 pi k eps} V_k u_{n+k} + 2 cos 2 pi(theta + n alpha) u_n,

whose eigenequation induces a 2d x 2d cocycle.  Two equivalent
presentations are kept side by side:

* ``companion(theta)`` - the single-step matrix over theta -> theta + alpha,
  whose Lyapunov exponents are the dual exponents directly;
* ``strip_step(theta)`` - the block matrix
  [[C^{-1}(E - B(theta)), -C^{-1} C_lower], [I, 0]] over theta -> theta + d*alpha,
  which equals the d-fold product of companion steps and carries the
  complex symplectic structure Omega = [[0, -C*], [C, 0]] at real energy.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cocycle import CocycleSpec, LEParams, lyapunov_spectrum
from .errors import PairingViolation, ZeroLeadingCoefficient
from .model import TRIM_THRESHOLD, TrigPotential
from .numkernel import DEFAULT_SEED, make_rng

TWO_PI = 2.0 * np.pi


#: dual strip runs converge at shorter orbits than the 2x2 transfer runs
DUAL_DEFAULT_LE = LEParams(orbit_length=20_000)


def _dual_le(le):
    return DUAL_DEFAULT_LE if le is None else le


def _weighted_coeffs(potential, eps):
    """Hopping amplitudes a_k = e^{-2 pi k eps} V_k for k = -d..d."""
    d = potential.degree
    k = np.arange(-d, d + 1)
    return potential.coeffs * np.exp(-TWO_PI * k * eps)


def _companion_matrices(theta, energy, a, d):
    """Single-step dual matrices; energy broadcasts against theta."""
    theta = np.asarray(theta, dtype=float)
    shape = np.broadcast(theta, energy).shape
    m = np.zeros(shape + (2 * d, 2 * d), dtype=complex)
    for col in range(2 * d):
        k = d - 1 - col
        if k == 0:
            m[..., 0, col] = (
                energy - 2.0 * np.cos(TWO_PI * theta) - a[d]
            ) / a[-1]
        else:
            m[..., 0, col] = -a[d + k] / a[-1]
    idx = np.arange(1, 2 * d)
    m[..., idx, idx - 1] = 1.0
    return m


@dataclass(frozen=True)
class DualCocycle:
    """The 2d x 2d cocycle of the dual finite-range eigenequation."""

    potential: TrigPotential
    energy: complex
    eps: float
    alpha: float
    degree: int
    C: np.ndarray          # upper triangular hopping block (eps-weighted)
    C_lower: np.ndarray    # lower hopping block; equals C* at eps = 0 for real V
    omega: np.ndarray      # symplectic form of the eps = 0 problem

    def _diag_phases(self, theta):
        # site phases theta + j*alpha for j = d-1 .. 0 (top-left to bottom-right)
        theta = np.asarray(theta, dtype=float)
        j = np.arange(self.degree - 1, -1, -1)
        return theta[..., np.newaxis] + j * self.alpha

    def bmap(self, theta):
        """On-block matrix B(theta): cosine diagonal plus inner hoppings.

        The k = 0 hopping coefficient rides on the diagonal alongside the
        cosine terms (it vanishes for the bundled presets).
        """
        theta = np.asarray(theta, dtype=float)
        d = self.degree
        a = _weighted_coeffs(self.potential, self.eps)
        b = np.zeros(theta.shape + (d, d), dtype=complex)
        i, j = np.indices((d, d))
        off = i != j
        b[..., i[off], j[off]] = a[d + (i - j)[off]]
        diag = 2.0 * np.cos(TWO_PI * self._diag_phases(theta)) + a[d]
        idx = np.arange(d)
        b[..., idx, idx] = diag
        return b

    def companion(self, theta):
        """Single-step matrix over theta -> theta + alpha.

        State (u_{n+d-1}, ..., u_{n-d}); the top row solves the dual
        eigenequation for u_{n+d} and the rest shifts.
        """
        a = _weighted_coeffs(self.potential, self.eps)
        return _companion_matrices(theta, self.energy, a, self.degree)

    def strip_step(self, theta):
        """Block matrix over theta -> theta + d*alpha.

        Equals the ordered product companion(theta+(d-1)a) ... companion(theta).
        """
        theta = np.asarray(theta, dtype=float)
        d = self.degree
        b = self.bmap(theta)
        cinv = np.linalg.inv(self.C)
        eye = np.eye(d)
        top_left = np.einsum(
            "ij,...jk->...ik", cinv, self.energy * eye - b
        )
        top_right = np.broadcast_to(
            -(cinv @ self.C_lower), theta.shape + (d, d)
        )
        bottom = np.broadcast_to(
            np.hstack([eye, np.zeros((d, d))]), theta.shape + (d, 2 * d)
        )
        return np.concatenate(
            [np.concatenate([top_left, top_right], axis=-1), bottom], axis=-2
        )

    def cocycle(self):
        """CocycleSpec of the single-step form over the rotation by alpha."""
        return CocycleSpec(
            alpha=self.alpha,
            dim=2 * self.degree,
            generator=self.companion,
            name=f"dual(E={self.energy}, eps={self.eps})",
        )

    def strip_cocycle(self):
        """CocycleSpec of the block form over the rotation by d*alpha."""
        return CocycleSpec(
            alpha=(self.degree * self.alpha) % 1.0,
            dim=2 * self.degree,
            generator=self.strip_step,
            name=f"dual-strip(E={self.energy}, eps={self.eps})",
        )


def _triangular_block(coeffs_pos, d, lower=False):
    # upper block: entry (i, j), j >= i, holds a_{d-(j-i)}; lower mirrors it
    block = np.zeros((d, d), dtype=complex)
    for i in range(d):
        for j in range(d):
            step = (i - j) if lower else (j - i)
            if step >= 0:
                block[i, j] = coeffs_pos[d - step - 1]
    return block


def build_dual(potential, energy, eps=0.0, alpha=None):
    """Assemble the dual strip cocycle for a trigonometric potential.

    For eps != 0 every hopping amplitude V_k carries the weight
    e^{-2 pi k eps}, matching the phase-complexified direct operator
    through the duality transform.
    """
    d = potential.degree
    if d < 1:
        raise ZeroLeadingCoefficient("potential must have degree >= 1")
    a = _weighted_coeffs(potential, eps)
    scale = np.max(np.abs(a))
    if abs(a[-1]) <= TRIM_THRESHOLD * scale:
        raise ZeroLeadingCoefficient(
            f"|top coefficient| = {abs(a[-1]):.3e} is below the trim threshold"
        )
    c_upper = _triangular_block(a[d + 1 :], d, lower=False)      # a_d .. a_1
    c_lower = _triangular_block(a[:d][::-1], d, lower=True)      # a_-d .. a_-1
    a0 = potential.coeffs  # eps = 0 coefficients define the symplectic form
    c0 = _triangular_block(a0[d + 1 :], d, lower=False)
    omega = np.block(
        [
            [np.zeros((d, d)), -c0.conj().T],
            [c0, np.zeros((d, d))],
        ]
    )
    return DualCocycle(
        potential=potential,
        energy=complex(energy),
        eps=float(eps),
        alpha=float(alpha),
        degree=d,
        C=c_upper,
        C_lower=c_lower,
        omega=omega,
    )


def symplectic_residual(dual, theta_samples=100, seed=DEFAULT_SEED):
    """max over random theta of || S(theta)* Omega S(theta) - Omega ||.

    S is the block step; the form is sesquilinear (conjugate transpose),
    which coincides with the plain transpose for real-coefficient
    potentials at real energy, where all entries are real.  Exact
    invariance requires real energy and eps = 0.
    """
    thetas = make_rng(seed).random(theta_samples)
    s = dual.strip_step(thetas)
    sh = np.conj(np.swapaxes(s, -1, -2))
    resid = sh @ dual.omega @ s - dual.omega
    return float(np.max(np.linalg.norm(resid, ord=2, axis=(-2, -1))))


@dataclass(frozen=True)
class DualSpectrum:
    """Nonnegative dual exponents with grouping by multiplicity.

    ``gamma`` is ascending in units of (log per step)/2pi; ``lhat`` is
    the same data in natural-log-per-step units (lhat = 2*pi*gamma).
    ``groups`` lists (gamma value, multiplicity) in ascending order.
    """

    gamma: np.ndarray
    lhat: np.ndarray
    stderr: np.ndarray
    groups: tuple
    exponents: np.ndarray       # all 2d per-step exponents, descending
    exponents_stderr: np.ndarray
    group_tol: float
    pairing_defect: Optional[float]

    @property
    def degree(self):
        return self.gamma.size


def _group(gamma, tol):
    groups = []
    start = 0
    for i in range(1, gamma.size + 1):
        if i == gamma.size or gamma[i] - gamma[i - 1] >= tol:
            groups.append((float(np.mean(gamma[start:i])), i - start))
            start = i
    return tuple(groups)


def dual_companion_grid(potential, energies, eps=0.0):
    """Lane-batched single-step dual matrices for a joint energy sweep.

    Returns (matfn, lane_count); matfn maps phases of shape (L, P) to
    matrices of shape (L, P, 2d, 2d).
    """
    energies = np.atleast_1d(np.asarray(energies, dtype=complex))
    a = _weighted_coeffs(potential, eps)
    d = potential.degree

    def matfn(theta):
        return _companion_matrices(theta, energies[:, np.newaxis], a, d)

    return matfn, energies.shape[0]


def _fold_spectrum(potential, energy, lam, se, group_tol):
    d = potential.degree
    pairing_defect = None
    if complex(energy).imag == 0.0 and potential.is_real:
        sums = np.abs(lam + lam[::-1])[:d]
        tols = np.maximum(5e-3 * TWO_PI, 3.0 * (se + se[::-1])[:d])
        pairing_defect = float(np.max(sums))
        if np.any(sums > tols):
            raise PairingViolation(
                f"pairing defect {pairing_defect:.3e} exceeds tolerance "
                f"{float(np.max(tols)):.3e} at real energy {energy}"
            )
        lhat_desc = (lam[:d] - lam[::-1][:d]) / 2.0
        se_desc = (se[:d] + se[::-1][:d]) / 2.0
    else:
        lhat_desc = lam[:d]
        se_desc = se[:d]
    gamma = lhat_desc[::-1] / TWO_PI
    gamma_se = se_desc[::-1] / TWO_PI
    tol = group_tol
    if tol is None:
        tol = max(1e-3, 3.0 * float(np.max(gamma_se)))
    return DualSpectrum(
        gamma=gamma,
        lhat=gamma * TWO_PI,
        stderr=gamma_se * TWO_PI,
        groups=_group(gamma, tol),
        exponents=lam,
        exponents_stderr=se,
        group_tol=tol,
        pairing_defect=pairing_defect,
    )


def dual_spectra(potential, energies, alpha, le=None, group_tol=None):
    """Dual spectra for many energies in one lane-batched cocycle run."""
    from .cocycle import spectrum_grid

    le = _dual_le(le)
    if abs(potential.leading) == 0:
        raise ZeroLeadingCoefficient("zero top coefficient")
    energies = np.atleast_1d(np.asarray(energies, dtype=complex))
    matfn, lanes = dual_companion_grid(potential, energies)
    exps, stderr, _ = spectrum_grid(
        matfn, float(alpha), 2 * potential.degree, lanes, le
    )
    return tuple(
        _fold_spectrum(potential, energies[i], exps[i], stderr[i], group_tol)
        for i in range(lanes)
    )


def dual_spectrum(potential, energy, alpha, le=None, group_tol=None):
    """Dual Lyapunov exponents of (alpha, companion) at the given energy.

    At real energy the 2d exponents are folded through the symplectic
    +/- pairing (PairingViolation if the pairing defect exceeds
    max(5e-3 * 2pi, 3 * stderr)); at complex energy the top d exponents
    are taken directly.
    """
    return dual_spectra(potential, [energy], alpha, le=le,
                        group_tol=group_tol)[0]


def rescaling_weights(d, eps):
    """Diagonal conjugation weights e^{2 pi eps j}, j = d, d-1, ..., -(d-1)."""
    return np.exp(TWO_PI * eps * np.arange(d, -d, -1))


def rescaling_residual(potential, energy, eps, alpha, theta_samples=100,
                       seed=DEFAULT_SEED):
    """Deviation of the phase-complexified companion from its conjugate.

    The weighted companion equals e^{2 pi eps} D A D^{-1} with
    D = diag(e^{2 pi eps d}, ..., e^{-2 pi eps (d-1)}) exactly; the max
    entrywise-norm residual over random theta is returned.
    """
    base = build_dual(potential, energy, 0.0, alpha)
    shifted = build_dual(potential, energy, eps, alpha)
    dvec = rescaling_weights(base.degree, eps)
    thetas = make_rng(seed).random(theta_samples)
    a0 = base.companion(thetas)
    ae = shifted.companion(thetas)
    conj = np.exp(TWO_PI * eps) * (
        dvec[:, np.newaxis] * a0 / dvec[np.newaxis, :]
    )
    return float(np.max(np.linalg.norm(ae - conj, ord=2, axis=(-2, -1))))


@dataclass(frozen=True)
class ShiftReport:
    """Direct spectrum of the eps-weighted dual vs the shifted base spectrum."""

    eps: float
    measured: np.ndarray     # 2d per-step exponents of the weighted cocycle
    predicted: np.ndarray    # base exponents + 2*pi*eps
    deviation: float


def shifted_spectrum_check(potential, energy, eps, alpha, le=None):
    """Verify that complexifying the dual phase shifts every exponent by 2*pi*eps."""
    le = _dual_le(le)
    base = build_dual(potential, energy, 0.0, alpha)
    shifted = build_dual(potential, energy, eps, alpha)
    s0 = lyapunov_spectrum(base.cocycle(), le)
    se = lyapunov_spectrum(shifted.cocycle(), le)
    predicted = s0.exponents + TWO_PI * eps
    deviation = float(np.max(np.abs(se.exponents - predicted)))
    return ShiftReport(
        eps=float(eps),
        measured=se.exponents,
        predicted=predicted,
        deviation=deviation,
    )


@dataclass(frozen=True)
class DualLimitTable:
    """Per-truncation dual exponents with Cauchy differences across degrees."""

    degrees: tuple
    spectra: tuple           # DualSpectrum per degree
    differences: tuple       # row i: |lhat_j^{d_i} - lhat_j^{d_{i-1}}|, shared j

    def rows(self):
        for d, spec in zip(self.degrees, self.spectra):
            yield d, spec.lhat


def dual_limit_table(analytic, energy, d_list, alpha, le=None,
                     group_tol=None):
    """Dual exponents across a truncation ladder of an analytic potential.

    The smallest exponents stabilize as the degree grows; the table
    reports |lhat_i^d - lhat_i^{d'}| between consecutive listed degrees
    on their shared index range as Cauchy evidence for the limit.
    """
    d_list = sorted(int(d) for d in d_list)
    spectra = []
    for d in d_list:
        trunc = analytic.truncation(d)
        spectra.append(
            dual_spectrum(trunc, energy, alpha, le=le, group_tol=group_tol)
        )
    diffs = []
    for prev, cur in zip(spectra[:-1], spectra[1:]):
        shared = min(prev.degree, cur.degree)
        diffs.append(np.abs(cur.lhat[:shared] - prev.lhat[:shared]))
    return DualLimitTable(
        degrees=tuple(d_list), spectra=tuple(spectra), differences=tuple(diffs)
    )
