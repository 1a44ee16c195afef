"""One-frequency cocycles over an irrational rotation.

Evaluation, iteration, Lyapunov spectrum estimation via QR
re-orthonormalization, and splitting/domination diagnostics.  The hot
loops are vectorized over a flat "lane" axis so that phase grids and
whole (E, eps) sweeps propagate in lock-step through single numpy calls;
results are reduced in fixed index order and are bit-stable for a given
configuration and seed.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import FrameNotConverged, InconclusiveDomination
from .model import check_frequency
from .numkernel import DEFAULT_SEED, make_rng, qr_positive_batch

OVERFLOW_GUARD = 1e280


@dataclass(frozen=True)
class LEParams:
    """Estimator knobs for Lyapunov spectrum runs.

    ``orbit_length=None`` picks 10^5 for 2x2 cocycles and 2*10^4 for
    larger fibers.  ``transient`` steps are used to align the frame
    before accumulation starts (they do not enter the averages).
    """

    phase_count: int = 32
    orbit_length: Optional[int] = None
    qr_stride: int = 1
    seed: int = DEFAULT_SEED
    transient: int = 128

    def resolve_n(self, dim):
        if self.orbit_length is not None:
            return int(self.orbit_length)
        return 100_000 if dim == 2 else 20_000


@dataclass(frozen=True)
class CocycleSpec:
    """A cocycle (alpha, A) over the rotation x -> x + alpha.

    ``generator`` must accept an ndarray of phases of any shape and
    return matrices of shape ``theta.shape + (dim, dim)`` (numpy
    broadcasting conventions).
    """

    alpha: float
    dim: int
    generator: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def __post_init__(self):
        check_frequency(self.alpha)
        probe = self.generator(np.zeros(1))
        if probe.shape != (1, self.dim, self.dim):
            raise ValueError(
                f"generator returned shape {probe.shape}, "
                f"expected (1, {self.dim}, {self.dim})"
            )
        if not np.all(np.isfinite(probe)):
            raise ValueError("generator produced non-finite entries")


def schrodinger_generator(potential, energy, eps=0.0):
    """Vectorized transfer-matrix map theta -> [[E - V(theta + i eps), -1], [1, 0]]."""

    def gen(theta):
        theta = np.asarray(theta, dtype=float)
        v = potential.evaluate(theta, eps)
        a = np.zeros(theta.shape + (2, 2), dtype=complex)
        a[..., 0, 0] = energy - v
        a[..., 0, 1] = -1.0
        a[..., 1, 0] = 1.0
        return a

    return gen


def schrodinger_cocycle(potential, energy, eps=0.0, alpha=None):
    """CocycleSpec for the transfer matrices of u_{n+1} + u_{n-1} + V u_n = E u_n."""
    if not hasattr(potential, "evaluate"):
        raise TypeError("potential must expose .evaluate(x, eps)")
    return CocycleSpec(
        alpha=float(alpha),
        dim=2,
        generator=schrodinger_generator(potential, energy, eps),
        name=f"schrodinger(E={energy}, eps={eps})",
    )


def schrodinger_grid_matfn(potential, energies, epsilons):
    """Lane-batched transfer-matrix map for joint (E, eps) sweeps.

    ``energies`` and ``epsilons`` are broadcast to a common lane axis of
    length L; the returned function maps phases of shape (L, P) to
    matrices of shape (L, P, 2, 2).
    """
    energies = np.atleast_1d(np.asarray(energies, dtype=complex))
    epsilons = np.atleast_1d(np.asarray(epsilons, dtype=float))
    energies, epsilons = np.broadcast_arrays(energies, epsilons)

    def matfn(theta):
        v = potential.evaluate(theta, epsilons[:, np.newaxis])
        a = np.zeros(theta.shape + (2, 2), dtype=complex)
        a[..., 0, 0] = energies[:, np.newaxis] - v
        a[..., 0, 1] = -1.0
        a[..., 1, 0] = 1.0
        return a

    return matfn, energies.shape[0]


@dataclass(frozen=True)
class LyapunovSpectrum:
    """Estimated exponents (descending, natural log per step)."""

    exponents: np.ndarray
    stderr: np.ndarray
    per_phase: np.ndarray
    orbit_length: int
    phase_count: int

    @property
    def top(self):
        return float(self.exponents[0])


@dataclass(frozen=True)
class ScaledProduct:
    """A matrix product in the form matrix * exp(log_scale)."""

    matrix: np.ndarray
    log_scale: float = 0.0

    def full(self):
        """Dense value; raises OverflowError if it cannot be represented."""
        if abs(self.log_scale) > 690.0:
            raise OverflowError(
                f"product magnitude exp({self.log_scale:.1f}) exceeds float range"
            )
        return self.matrix * np.exp(self.log_scale)


def iterate(cocycle, theta0, n):
    """Ordered product A(theta+(n-1)a) ... A(theta); n = 0 gives identity.

    Returned in scaled form: entries whose magnitude would pass 1e280 are
    renormalized into the log_scale field.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    m = cocycle.dim
    prod = np.eye(m, dtype=complex)
    log_scale = 0.0
    for i in range(n):
        a = cocycle.generator(np.asarray([(theta0 + i * cocycle.alpha) % 1.0]))[0]
        prod = a @ prod
        peak = np.max(np.abs(prod))
        if peak > OVERFLOW_GUARD:
            prod = prod / peak
            log_scale += np.log(peak)
    return ScaledProduct(prod, log_scale)


# -- QR accumulation core -----------------------------------------------------


def _phase_grid(phase_count, seed):
    # deterministic offset keeps the grid off lattice resonances with alpha
    off = make_rng(seed).uniform(0.0, 1.0 / phase_count)
    return np.arange(phase_count) / phase_count + off


def _qr_accumulate(matfn, alpha, dim, theta0, n, stride, transient, checkpoints=()):
    """Propagate orthonormal frames along orbits starting at theta0.

    theta0: float array of any shape S; matfn maps phases of shape S to
    matrices of shape S + (dim, dim).  Returns the per-orbit sums of
    log R diagonals, shape S + (dim,).  ``checkpoints`` are step counts
    at which snapshots of the running sums are also returned.
    """
    theta0 = np.asarray(theta0, dtype=float)
    q = np.broadcast_to(
        np.eye(dim, dtype=complex), theta0.shape + (dim, dim)
    ).copy()
    sums = np.zeros(theta0.shape + (dim,))
    snaps = {}
    # warm-up: align the frame upstream of theta0 so the accumulated
    # window is exactly [theta0, theta0 + n*alpha)
    for i in range(-transient, n):
        a = matfn(np.mod(theta0 + i * alpha, 1.0))
        q = a @ q
        if stride == 1 or (i - (-transient)) % stride == stride - 1 or i == n - 1:
            q, logdiag = qr_positive_batch(q)
            if i >= 0:
                sums += logdiag
        if (i + 1) in checkpoints:
            snaps[i + 1] = sums.copy()
    return sums, snaps


def spectrum_grid(matfn, alpha, dim, lanes, le=LEParams()):
    """Lyapunov spectra for a lane-batched cocycle family.

    matfn maps phases of shape (lanes, P) to (lanes, P, dim, dim).
    Returns (exponents, stderr, per_phase) with shapes (lanes, dim),
    (lanes, dim) and (lanes, P, dim).
    """
    n = le.resolve_n(dim)
    if n < 1_000:
        raise ValueError("orbit length must be at least 10^3")
    if le.phase_count < 1:
        raise ValueError("phase_count must be at least 1")
    phases = _phase_grid(le.phase_count, le.seed)
    theta0 = np.broadcast_to(phases, (lanes, le.phase_count)).copy()
    sums, _ = _qr_accumulate(
        matfn, alpha, dim, theta0, n, le.qr_stride, le.transient
    )
    per_phase = sums / n
    exps = per_phase.mean(axis=1)
    if le.phase_count > 1:
        stderr = per_phase.std(axis=1, ddof=1) / np.sqrt(le.phase_count)
    else:
        stderr = np.zeros_like(exps)
    # enforce descending order without breaking the exponent/stderr pairing
    order = np.argsort(-exps, axis=1, kind="stable")
    exps = np.take_along_axis(exps, order, axis=1)
    stderr = np.take_along_axis(stderr, order, axis=1)
    per_phase = np.take_along_axis(per_phase, order[:, np.newaxis, :], axis=2)
    return exps, stderr, per_phase


def lyapunov_spectrum(cocycle, le=LEParams()):
    """Estimate the full Lyapunov spectrum of a single cocycle.

    Frames are re-orthonormalized with positive-diagonal QR every
    ``le.qr_stride`` steps; exponents are per-step averages of the log R
    diagonal, averaged over an equidistributed phase grid, with the
    standard error taken across phases.
    """

    def matfn(theta):
        return cocycle.generator(theta)

    exps, stderr, per_phase = spectrum_grid(
        matfn, cocycle.alpha, cocycle.dim, 1, le
    )
    return LyapunovSpectrum(
        exponents=exps[0],
        stderr=stderr[0],
        per_phase=per_phase[0],
        orbit_length=le.resolve_n(cocycle.dim),
        phase_count=le.phase_count,
    )


# -- domination and invariant frames ------------------------------------------


@dataclass(frozen=True)
class SplittingResult:
    """Outcome of a finite-orbit domination test at index k."""

    index: int
    gap_estimate: float
    dominated: bool
    stable: bool
    orbit_length: int
    frames: Optional[list] = field(default=None, compare=False)


def _min_gap(sums, n, k):
    exps = sums / n
    gaps = exps[..., k - 1] - exps[..., k]
    return float(np.min(gaps))


def domination_check(
    cocycle,
    k,
    n=20_000,
    theta_samples=8,
    gap_tol=1e-2,
    seed=DEFAULT_SEED,
    with_frames=False,
):
    """Certify a k-dominated splitting on finitely many orbits.

    The per-step singular-value gap between positions k and k+1 is
    estimated from QR accumulation over orbits of length n and 2n at
    ``theta_samples`` random phases; the verdict requires the gap to
    clear ``gap_tol`` at both lengths and to move by less than 20% when
    n doubles.  Finite sampling makes this evidence, not proof.
    """
    m = cocycle.dim
    if not 1 <= k < m:
        raise ValueError(f"need 1 <= k < {m}")
    thetas = make_rng(seed).random(theta_samples)
    sums2n, snaps = _qr_accumulate(
        cocycle.generator, cocycle.alpha, m, thetas, 2 * n, 1, 128,
        checkpoints=(n,),
    )
    gap_n = _min_gap(snaps[n], n, k)
    gap_2n = _min_gap(sums2n, 2 * n, k)
    b_n, b_2n = gap_n > gap_tol, gap_2n > gap_tol
    if b_n != b_2n:
        raise InconclusiveDomination(
            f"gap {gap_n:.4f} at n={n} vs {gap_2n:.4f} at n={2*n} "
            f"straddles tolerance {gap_tol}"
        )
    stable = abs(gap_2n - gap_n) <= 0.2 * max(abs(gap_n), 1e-300)
    dominated = b_2n and stable
    frames = None
    if dominated and with_frames:
        frames = []
        for th in thetas:
            try:
                frames.append((float(th),) + invariant_frames(cocycle, k, th))
            except FrameNotConverged:
                frames = None
                break
    return SplittingResult(
        index=k,
        gap_estimate=gap_2n,
        dominated=dominated,
        stable=stable,
        orbit_length=2 * n,
        frames=frames,
    )


def _seed_frame(dim, shape, seed):
    # generic full frame: identity plus a small fixed perturbation, so exact
    # invariant alignments of the identity cannot trap the iteration
    rng = make_rng(seed)
    noise = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, _ = qr_positive_batch(np.eye(dim) + 0.05 * noise)
    return np.broadcast_to(q, shape + (dim, dim)).copy()


def _propagate_frame(matfn, alpha, dim, thetas, n, seed, reverse=False):
    """Orthonormal frame at thetas from n QR-normalized steps.

    Forward mode runs the cocycle from thetas - n*alpha up to thetas, so
    leading columns converge to the expanding directions at thetas.
    Reverse mode runs the inverse cocycle from thetas + n*alpha down, so
    leading columns converge to the contracting directions at thetas.
    """
    thetas = np.asarray(thetas, dtype=float)
    q = _seed_frame(dim, thetas.shape, seed)
    for i in range(n):
        if reverse:
            a = np.linalg.inv(matfn(np.mod(thetas + (n - 1 - i) * alpha, 1.0)))
        else:
            a = matfn(np.mod(thetas + (i - n) * alpha, 1.0))
        q = a @ q
        q, _ = qr_positive_batch(q)
    return q


def _subspace_distance(qa, qb):
    # spectral norm of the projector difference, batched
    pa = qa @ np.conj(np.swapaxes(qa, -1, -2))
    pb = qb @ np.conj(np.swapaxes(qb, -1, -2))
    return np.linalg.norm(pa - pb, ord=2, axis=(-2, -1))


def invariant_frames_batch(
    matfn, alpha, dim, k, thetas, n0=64, tol=1e-8, max_doublings=9,
    seed=DEFAULT_SEED,
):
    """Fast/slow invariant frames at many phases at once.

    Returns (fast, slow) with shapes (S, dim, k) and (S, dim, dim-k);
    convergence requires the frames at n and 2n steps to agree to
    ``tol`` in projector norm, doubling n until they do.
    """
    thetas = np.asarray(thetas, dtype=float)
    out = []
    for reverse, cols in ((False, k), (True, dim - k)):
        n = n0
        dist = np.inf
        prev = _propagate_frame(matfn, alpha, dim, thetas, n, seed, reverse)[
            ..., :cols
        ]
        for _ in range(max_doublings):
            cur = _propagate_frame(
                matfn, alpha, dim, thetas, 2 * n, seed, reverse
            )[..., :cols]
            dist = float(np.max(_subspace_distance(prev, cur)))
            if dist < tol:
                prev = cur
                break
            prev, n = cur, 2 * n
        else:
            raise FrameNotConverged(
                f"{'slow' if reverse else 'fast'} frame moved {dist:.2e} "
                f"between n={n} and n={2*n}"
            )
        out.append(prev)
    return out[0], out[1]


def invariant_frames(cocycle, k, theta, n0=64, tol=1e-8, max_doublings=9,
                     seed=DEFAULT_SEED):
    """Orthonormal bases of the fast and slow invariant subspaces at theta.

    Requires a k-dominated splitting (run domination_check first); the
    fast frame comes from forward accumulation ending at theta, the slow
    frame from the inverse cocycle run forward.
    """
    fast, slow = invariant_frames_batch(
        cocycle.generator, cocycle.alpha, cocycle.dim, k,
        np.asarray([theta]), n0=n0, tol=tol, max_doublings=max_doublings,
        seed=seed,
    )
    return fast[0], slow[0]


def exponent_sum_check(cocycle, le=LEParams()):
    """Phase-averaged (1/n) log|det A_n| minus the exponent sum.

    Exact log-determinant accumulation: both quantities are estimated on
    the same orbits, so for SL-type cocycles the return is noise-level.
    """
    spec = lyapunov_spectrum(cocycle, le)
    n = le.resolve_n(cocycle.dim)
    phases = _phase_grid(le.phase_count, le.seed)
    total = np.zeros(le.phase_count)
    for i in range(n):
        a = cocycle.generator(np.mod(phases + i * cocycle.alpha, 1.0))
        sign, logabs = np.linalg.slogdet(a)
        total += logabs
    det_rate = float(np.mean(total / n))
    return det_rate - float(np.sum(spec.exponents)), spec
