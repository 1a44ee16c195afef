"""Green's functions three ways, plus the identities that tie them together.

* cofactor formula from half-line decaying solutions of the finite-range
  eigenequation (works for non-self-adjoint operators);
* dynamical constructions through invariant frames: scalar m-functions
  for the transfer cocycle, d x d matrix M-functions for the strip;
* dense Dirichlet truncations as the independent oracle.

Residual checks live here too: matrix and scalar Ricatti equations, the
M-function representation of the Green's matrix, phase-averaged duality
of the resolvent diagonal, the derivative identity linking the exponent
to the averaged Green's function, and determinant winding numbers.
"""

from dataclasses import dataclass, field
import numpy as np
from scipy.linalg import solve_banded

from .cocycle import (
    LEParams,
    invariant_frames_batch,
    schrodinger_cocycle,
    schrodinger_generator,
    schrodinger_grid_matfn,
    spectrum_grid,
)
from .dual import build_dual, _weighted_coeffs
from .errors import (
    BlockNotInvertible,
    GridTooCoarse,
    InconclusiveDomination,
    NotUniformlyHyperbolic,
    SingularWronskian,
    TruncationUnstable,
    WindingSlopeMismatch,
    WrongDecayCount,
)
from .numkernel import DEFAULT_SEED, logdet_arg_path, make_rng

TWO_PI = 2.0 * np.pi


# -- dense truncation oracles -------------------------------------------------


def schrodinger_resolvent(potential, x, eps, energy, alpha, half_width,
                          sites=(0,)):
    """<delta_p, (H - E)^{-1} delta_p> on a Dirichlet box [-N, N].

    Tridiagonal banded solve; returns one value per requested site.
    """
    n = np.arange(-half_width, half_width + 1)
    m = n.size
    diag = potential.evaluate((x + n * alpha) % 1.0, eps) - energy
    ab = np.zeros((3, m), dtype=complex)
    ab[0, 1:] = 1.0
    ab[2, :-1] = 1.0
    ab[1, :] = diag
    rhs = np.zeros((m, len(sites)), dtype=complex)
    for col, p in enumerate(sites):
        rhs[half_width + p, col] = 1.0
    sol = solve_banded((1, 1), ab, rhs)
    return np.asarray(
        [sol[half_width + p, col] for col, p in enumerate(sites)]
    )


def dual_banded(potential, theta, eps, energy, alpha, half_width):
    """Banded form of the dual finite-range operator minus E on [-N, N]."""
    d = potential.degree
    if d < 1:
        from .errors import ZeroLeadingCoefficient

        raise ZeroLeadingCoefficient(
            "the zero potential has no dual finite-range operator"
        )
    a = _weighted_coeffs(potential, eps)
    n = np.arange(-half_width, half_width + 1)
    m = n.size
    ab = np.zeros((2 * d + 1, m), dtype=complex)
    for k in range(1, d + 1):
        ab[d - k, k:] = a[d + k]
        ab[d + k, :-k] = a[d - k]
    ab[d, :] = 2.0 * np.cos(TWO_PI * ((theta + n * alpha) % 1.0)) + a[d] - energy
    return ab


def dual_resolvent(potential, theta, eps, energy, alpha, half_width,
                   sites=(0,)):
    """<delta_p, (dual H - E)^{-1} delta_p> on a Dirichlet box, per site."""
    d = potential.degree
    ab = dual_banded(potential, theta, eps, energy, alpha, half_width)
    m = 2 * half_width + 1
    rhs = np.zeros((m, len(sites)), dtype=complex)
    for col, p in enumerate(sites):
        rhs[half_width + p, col] = 1.0
    sol = solve_banded((d, d), ab, rhs)
    return np.asarray(
        [sol[half_width + p, col] for col, p in enumerate(sites)]
    )


# -- cofactor kernel from half-line decaying solutions -------------------------


@dataclass(frozen=True)
class LatticeOperator:
    """(L u)(n) = sum_k a_k u(n+k) + V(n) u(n) on a finite window."""

    coeffs: np.ndarray          # a_k for k = -d..d
    diagonal: np.ndarray        # V(n) over the window
    n0: int                     # site index of diagonal[0]

    @property
    def order(self):
        return self.coeffs.size // 2

    @property
    def window(self):
        return self.n0, self.n0 + self.diagonal.size - 1

    def apply(self, values, n):
        """(L u)(n) for a solution array aligned with the window."""
        d = self.order
        i = n - self.n0
        seg = values[i - d : i + d + 1]
        return complex(np.dot(self.coeffs, seg) + self.diagonal[i] * values[i])


@dataclass(frozen=True)
class Solution:
    """One eigenequation solution over the window, tagged by decay side."""

    values: np.ndarray
    tag: str                    # '+' decays at +inf, '-' decays at -inf


def _check_decay(values, tag, center, d, block=4):
    """Decay visible on the span adjacent to the window center.

    Numerically transported solutions are exact solution mixtures
    everywhere but keep their pure decay only within the float transport
    budget, so the check runs next to the center rather than at the far
    window edge.
    """
    if tag == "+":
        seg = values[center + d + 1 : center + d + 1 + 3 * block]
    else:
        seg = values[center - d - 3 * block : center - d][::-1]
    norms = [np.linalg.norm(seg[i * block : (i + 1) * block]) for i in range(3)]
    return norms[0] > norms[1] > norms[2]


@dataclass(frozen=True)
class GreensKernel:
    """Resolvent entries of a finite-range operator, cofactor form."""

    operator: LatticeOperator
    energy: complex
    solutions: tuple
    plus_count: int
    eigen_residual: float
    _cof_cache: dict = field(default_factory=dict, compare=False, repr=False)

    def _solution_matrix(self, q):
        d = self.operator.order
        n0, n1 = self.operator.window
        if not (n0 + d - 1 <= q - d + 1 and q + d <= n1):
            raise ValueError(f"anchor q={q} leaves the window")
        rows = np.arange(q + d, q - d, -1)
        idx = rows - n0
        return np.stack([s.values[idx] for s in self.solutions], axis=1)

    def _cofactors(self, q):
        if q in self._cof_cache:
            return self._cof_cache[q]
        phi = self._solution_matrix(q)
        det = np.linalg.det(phi)
        scale = float(np.prod(np.linalg.norm(phi, axis=0)))
        if abs(det) <= 1e-12 * max(scale, 1e-300):
            raise SingularWronskian(
                f"|det Phi({q})| = {abs(det):.3e} below 1e-12 of scale {scale:.3e}"
            )
        m = phi.shape[0]
        cof = np.empty(m, dtype=complex)
        cols = np.arange(m)
        for i in range(m):
            minor = phi[1:, cols != i]
            cof[i] = (-1) ** i * np.linalg.det(minor)
        self._cof_cache[q] = (det, cof)
        return det, cof

    def green(self, p, q):
        """<delta_p, (L - E)^{-1} delta_q>."""
        det, cof = self._cofactors(q)
        d = self.operator.order
        m = self.plus_count
        n0, _ = self.operator.window
        lead = self.operator.coeffs[-1]
        vals = np.asarray([s.values[p - n0] for s in self.solutions])
        if p >= q + 1:
            return complex(np.dot(vals[:m], cof[:m]) / (lead * det))
        return complex(-np.dot(vals[m:], cof[m:]) / (lead * det))

    def delta_residual(self, q):
        """Worst defect of (L - E) G(., q) = delta_q over the window interior.

        Normalized by the local solution scale so the exponentially large
        tails far from q are judged relatively, the O(1) core absolutely.
        """
        d = self.operator.order
        n0, n1 = self.operator.window
        u = np.asarray([self.green(n, q) for n in range(n0, n1 + 1)])
        coeff_scale = float(np.sum(np.abs(self.operator.coeffs))) + abs(self.energy)
        worst = 0.0
        for n in range(n0 + d, n1 - d + 1):
            val = self.operator.apply(u, n) - self.energy * u[n - n0]
            if n == q:
                val -= 1.0
            i = n - n0
            local = float(np.max(np.abs(u[i - d : i + d + 1])))
            worst = max(worst, abs(val) / max(1.0, coeff_scale * local))
        return worst


def greens_kernel(operator, energy, solutions):
    """Assemble the cofactor-form resolvent from tagged solutions.

    Requires exactly 2d independent solutions, the '+' tagged ones
    listed first; each must satisfy the eigenequation on the window to
    1e-10 relative accuracy and visibly decay on its tagged side.
    """
    d = operator.order
    sols = tuple(solutions)
    if len(sols) != 2 * d:
        raise WrongDecayCount(
            f"need {2 * d} solutions for an order-{2 * d} equation, got {len(sols)}"
        )
    plus = [s for s in sols if s.tag == "+"]
    minus = [s for s in sols if s.tag == "-"]
    if len(plus) + len(minus) != 2 * d:
        raise WrongDecayCount("every solution must carry a '+' or '-' tag")
    ordered = tuple(plus) + tuple(minus)
    n0, n1 = operator.window
    center = -n0
    worst = 0.0
    coeff_scale = float(np.sum(np.abs(operator.coeffs))) + abs(energy)
    for s in ordered:
        if s.values.size != operator.diagonal.size:
            raise ValueError("solution window disagrees with operator window")
        if not _check_decay(s.values, s.tag, center, d):
            raise WrongDecayCount(
                f"solution tagged '{s.tag}' does not decay on that side"
            )
        for n in range(n0 + d, n1 - d + 1):
            i = n - n0
            local = float(np.max(np.abs(s.values[i - d : i + d + 1])))
            resid = abs(
                operator.apply(s.values, n) - energy * s.values[i]
            )
            worst = max(worst, resid / max(coeff_scale * local, 1e-300))
    if worst > 1e-10:
        raise ValueError(
            f"eigenequation residual {worst:.2e} exceeds 1e-10 on the window"
        )
    return GreensKernel(
        operator=operator,
        energy=complex(energy),
        solutions=ordered,
        plus_count=len(plus),
        eigen_residual=worst,
    )


def dual_lattice_operator(potential, theta, alpha, half_width, eps=0.0):
    """The dual finite-range operator restricted to a window around 0."""
    n = np.arange(-half_width, half_width + 1)
    diag = 2.0 * np.cos(TWO_PI * ((theta + n * alpha) % 1.0)) + 0j
    a = _weighted_coeffs(potential, eps)
    coeffs = a.copy()
    d = potential.degree
    diag = diag + coeffs[d]
    coeffs[d] = 0.0
    return LatticeOperator(coeffs=coeffs, diagonal=diag, n0=-half_width)


def kernel_window(gamma, d, cap=40):
    """Window half-width balancing decay coverage against float budget.

    Ten decay lengths of the slowest mode must fit, but unrolling a
    same-family batch across W sites loses ~2*pi*(gamma_max - gamma_min)*W
    / ln10 digits of independence, so W is capped where ~7 digits remain.
    """
    gamma = np.sort(np.asarray(gamma, dtype=float))
    w_decay = int(np.ceil(10.0 / (TWO_PI * gamma[0]))) + 2 * d + 4
    if gamma.size > 1 and gamma[-1] - gamma[0] > 1e-6:
        w_indep = int(7.0 * np.log(10.0) / (TWO_PI * (gamma[-1] - gamma[0])))
    else:
        w_indep = cap
    return int(np.clip(min(w_decay, w_indep), 16 + d, cap))


def dual_kernel_from_frames(potential, energy, theta, alpha, half_width=None,
                            frame_tol=1e-9, seed=DEFAULT_SEED):
    """Cofactor kernel of the dual operator, solutions from invariant frames.

    The d-dominated splitting of the 2d-dimensional eigenequation
    cocycle supplies d forward-decaying and d backward-decaying
    solutions.  Each family is anchored at the window edge it decays
    toward and unrolled in the opposite direction, which is the
    numerically stable one (unrolling a decaying solution toward its
    decay side would amplify frame error exponentially).  The cofactor
    formula is invariant under per-solution scaling, so every solution
    is normalized to unit size near the window center.
    """
    dc = build_dual(potential, energy, 0.0, alpha)
    d = dc.degree
    if half_width is None:
        from .dual import dual_spectrum

        quick = dual_spectrum(
            potential, energy, alpha,
            le=LEParams(orbit_length=4000, phase_count=8),
        )
        half_width = kernel_window(quick.gamma, d)
    # anchor both frames at companion time 1, so the solution matrix at
    # the central site is exactly the orthonormal frame pair and the
    # Wronskian stays perfectly conditioned there
    anchor = np.asarray([(theta + alpha) % 1.0])
    fast, slow = invariant_frames_batch(
        dc.companion, alpha, 2 * d, d, anchor, tol=frame_tol, seed=seed
    )
    sols = []
    for frame, tag in ((slow[0], "+"), (fast[0], "-")):
        for col in range(d):
            u = _unroll_span(dc, theta, 1, frame[:, col], -half_width,
                             half_width)
            sols.append(Solution(values=u, tag=tag))
    op = dual_lattice_operator(potential, theta, alpha, half_width)
    return greens_kernel(op, energy, sols)


def _unroll_span(dual_cocycle, theta, t0, state, n_lo, n_hi):
    """Solution values on [n_lo, n_hi] from one companion state at time t0.

    The state at time t covers sites t+d-1 .. t-d; forward steps append
    the new top entry, inverse steps prepend the new bottom entry.
    """
    d = dual_cocycle.degree
    u = {}
    for idx, n in enumerate(range(t0 + d - 1, t0 - d - 1, -1)):
        u[n] = state[idx]
    y = np.array(state, dtype=complex)
    t = t0
    while t + d <= n_hi:
        mat = dual_cocycle.companion(
            np.asarray((theta + t * dual_cocycle.alpha) % 1.0)
        )
        y = mat @ y
        t += 1
        u[t + d - 1] = y[0]
    y = np.array(state, dtype=complex)
    t = t0
    while t - d > n_lo:
        mat = dual_cocycle.companion(
            np.asarray((theta + (t - 1) * dual_cocycle.alpha) % 1.0)
        )
        y = np.linalg.solve(mat, y)
        t -= 1
        u[t - d] = y[-1]
    return np.asarray([u[n] for n in range(n_lo, n_hi + 1)])


# -- scalar m-functions --------------------------------------------------------


@dataclass(frozen=True)
class ScalarGreens:
    """Diagonal Green's value of the complexified operator at one phase."""

    x: float
    eps: float
    energy: complex
    m_plus: complex
    m_minus: complex
    g: complex
    ricatti_residual: float


def _require_uh(potential, energy, eps, alpha, seed=DEFAULT_SEED,
                gap_tol=1e-2, delta=2e-3):
    """Certify uniform hyperbolicity of the transfer cocycle at (E, eps).

    Two independent signals: a finite-orbit domination gap, and the
    regularity criterion, which separates uniform from nonuniform
    hyperbolicity (the exponent must be affine in eps across the point;
    a turning point has curvature at least pi*delta on this stencil).
    """
    from .cocycle import domination_check

    try:
        res = domination_check(
            schrodinger_cocycle(potential, energy, eps, alpha), 1,
            n=4000, theta_samples=6, gap_tol=gap_tol, seed=seed,
        )
    except InconclusiveDomination as exc:
        raise NotUniformlyHyperbolic(str(exc)) from exc
    if not res.dominated:
        raise NotUniformlyHyperbolic(
            f"per-step gap {res.gap_estimate:.4f} not certified above {gap_tol}"
        )
    matfn, lanes = schrodinger_grid_matfn(
        potential, np.asarray([energy] * 3),
        np.asarray([eps - delta, eps, eps + delta]),
    )
    exps, _, _ = spectrum_grid(
        matfn, alpha, 2, lanes,
        LEParams(orbit_length=12_000, seed=seed),
    )
    curvature = abs(float(exps[0, 0] + exps[2, 0] - 2 * exps[1, 0]))
    if curvature > np.pi * delta:
        raise NotUniformlyHyperbolic(
            f"exponent profile is not affine at eps={eps}: "
            f"stencil curvature {curvature:.2e} (turning point nearby)"
        )
    return res


def _m_functions(potential, energy, eps, alpha, thetas, frame_tol=1e-9,
                 seed=DEFAULT_SEED):
    """m_+ and m_- at many phases from one batched frame computation."""
    thetas = np.asarray(thetas, dtype=float)
    gen = schrodinger_generator(potential, energy, eps)
    both = np.concatenate([thetas, (thetas + alpha) % 1.0])
    fast, slow = invariant_frames_batch(
        gen, alpha, 2, 1, both, tol=frame_tol, seed=seed
    )
    v = potential.evaluate(both, eps)
    # state components are (u(0), u(-1)); the eigenequation at site 0
    # turns the stable direction into u_+(1) and m_+ = -u_+(1)
    m_plus = slow[:, 1, 0] / slow[:, 0, 0] - (energy - v)
    m_minus = -fast[:, 1, 0] / fast[:, 0, 0]
    k = thetas.size
    return (m_plus[:k], m_plus[k:]), (m_minus[:k], m_minus[k:]), v[:k], v[k:]


def _ricatti_residuals(m_plus, m_plus_next, m_minus, m_minus_next,
                       v_here, v_next, energy):
    r_plus = np.abs(m_plus_next + 1.0 / m_plus + (energy - v_next))
    r_minus = np.abs(m_minus + 1.0 / m_minus_next + (energy - v_here))
    return np.maximum(r_plus, r_minus)


def scalar_greens(potential, x, eps, energy, alpha, check_uh=True,
                  frame_tol=1e-9, seed=DEFAULT_SEED):
    """g(x + i eps, E) = -1 / (m_+ + m_- + E - V(x + i eps)).

    The m-functions come from the stable/unstable directions of the
    transfer cocycle (with a convergence certificate); the scalar
    Ricatti equations are evaluated as residuals, not used for the
    construction.
    """
    if check_uh:
        _require_uh(potential, energy, eps, alpha, seed=seed)
    (mp, mp1), (mm, mm1), v0, v1 = _m_functions(
        potential, energy, eps, alpha, np.asarray([x]),
        frame_tol=frame_tol, seed=seed,
    )
    ric = float(
        _ricatti_residuals(mp, mp1, mm, mm1, v0, v1, energy)[0]
    )
    g = -1.0 / (mp[0] + mm[0] + energy - v0[0])
    return ScalarGreens(
        x=float(x), eps=float(eps), energy=complex(energy),
        m_plus=complex(mp[0]), m_minus=complex(mm[0]), g=complex(g),
        ricatti_residual=ric,
    )


def averaged_scalar_greens(potential, eps, energy, alpha, phase_count=256,
                           check_uh=True, frame_tol=1e-9, seed=DEFAULT_SEED):
    """Phase average of g(x + i eps, E) over an equidistributed grid.

    Returns (mean, per-phase values, max Ricatti residual).
    """
    if check_uh:
        _require_uh(potential, energy, eps, alpha, seed=seed)
    off = make_rng(seed).uniform(0.0, 1.0 / phase_count)
    thetas = np.arange(phase_count) / phase_count + off
    (mp, mp1), (mm, mm1), v0, v1 = _m_functions(
        potential, energy, eps, alpha, thetas, frame_tol=frame_tol, seed=seed
    )
    ric = float(np.max(_ricatti_residuals(mp, mp1, mm, mm1, v0, v1, energy)))
    g = -1.0 / (mp + mm + energy - v0)
    return complex(np.mean(g)), g, ric


# -- strip M-functions ---------------------------------------------------------


@dataclass(frozen=True)
class StripGreens:
    """M-functions and Green's matrix of the strip at one phase."""

    theta: float
    energy: complex
    m_plus: np.ndarray
    m_minus: np.ndarray
    g: np.ndarray
    m_plus_next: np.ndarray
    m_minus_next: np.ndarray
    g_next: np.ndarray
    residuals: dict


def _normalize(block_top, block_bot, invert_bottom):
    target = block_bot if invert_bottom else block_top
    if np.linalg.cond(target) > 1e12:
        raise BlockNotInvertible(
            "frame normalization block is singular at this phase; resample theta"
        )
    inv = np.linalg.inv(target)
    return (block_top @ inv) if invert_bottom else (block_bot @ inv)


def strip_greens(potential, energy, theta, alpha, check_domination=None,
                 frame_tol=1e-9, seed=DEFAULT_SEED):
    """Strip Green's matrix via M-functions, with all identity residuals.

    Uniform hyperbolicity of the strip cocycle is assumed for Im E > 0;
    for real energy pass ``check_domination=True`` to certify it first.
    The residual dict records the two matrix Ricatti equations, the
    agreement between the two M-function representations of G, and the
    shift identity coupling G at theta and theta + d*alpha.
    """
    dc = build_dual(potential, energy, 0.0, alpha)
    d = dc.degree
    strip = dc.strip_cocycle()
    if check_domination is None:
        check_domination = complex(energy).imag <= 0.0
    if check_domination:
        from .cocycle import domination_check

        res = domination_check(strip, d, n=2000, theta_samples=4, seed=seed)
        if not res.dominated:
            raise NotUniformlyHyperbolic(
                "strip cocycle is not certified d-dominated at this energy"
            )
    step = dc.alpha * d
    pair = np.asarray([theta % 1.0, (theta + step) % 1.0])
    fast, slow = invariant_frames_batch(
        dc.strip_step, strip.alpha, 2 * d, d, pair, tol=frame_tol, seed=seed
    )

    def m_pair(i):
        th = pair[i]
        stable_adv = dc.strip_step(np.asarray(th)) @ slow[i]
        m_plus = -_normalize(stable_adv[:d, :], stable_adv[d:, :],
                             invert_bottom=True)
        m_minus = -_normalize(fast[i][:d, :], fast[i][d:, :],
                              invert_bottom=False)
        return m_plus, m_minus

    mp0, mm0 = m_pair(0)
    mp1, mm1 = m_pair(1)
    c, cl = dc.C, dc.C_lower
    eye = np.eye(d)
    b0 = dc.bmap(np.asarray(theta % 1.0))
    b1 = dc.bmap(np.asarray((theta + step) % 1.0))

    def gmat(mp, mm, b):
        return np.linalg.inv(-c @ mp - cl @ mm + b - energy * eye)

    g0 = gmat(mp0, mm0, b0)
    g1 = gmat(mp1, mm1, b1)
    residuals = {
        "ricatti_plus": float(np.linalg.norm(
            c @ mp1 + cl @ np.linalg.inv(mp0) + energy * eye - b1, 2
        )),
        "ricatti_minus": float(np.linalg.norm(
            cl @ mm0 + c @ np.linalg.inv(mm1) + energy * eye - b0, 2
        )),
        "green_matrix": float(np.linalg.norm(
            g0 - np.linalg.inv(-c @ mp0 + c @ np.linalg.inv(mm1)), 2
        )),
        "shift": float(np.linalg.norm(
            g0 @ c @ np.linalg.inv(mm1) - mm1 @ g1 @ cl - eye, 2
        )),
    }
    return StripGreens(
        theta=float(theta), energy=complex(energy),
        m_plus=mp0, m_minus=mm0, g=g0,
        m_plus_next=mp1, m_minus_next=mm1, g_next=g1,
        residuals=residuals,
    )


def strip_trace_vs_dense(potential, energy, alpha, phase_count=64,
                         half_width=600, seed=DEFAULT_SEED):
    """Aggregate check: phase-averaged tr G vs dense resolvent diagonal.

    The phase average of the strip trace must match the phase-averaged
    sum of the first d diagonal resolvent entries of the dense dual
    truncation.
    """
    d = potential.degree
    off = make_rng(seed).uniform(0.0, 1.0 / phase_count)
    thetas = np.arange(phase_count) / phase_count + off
    strip_vals = []
    for th in thetas:
        sg = strip_greens(potential, energy, th, alpha,
                          check_domination=False, seed=seed)
        strip_vals.append(np.trace(sg.g))
    dense_vals = []
    for th in thetas:
        entries = dual_resolvent(
            potential, th, 0.0, energy, alpha, half_width, sites=tuple(range(d))
        )
        dense_vals.append(np.sum(entries))
    strip_mean = complex(np.mean(strip_vals))
    dense_mean = complex(np.mean(dense_vals))
    return strip_mean, dense_mean, abs(strip_mean - dense_mean)


# -- duality of the averaged resolvent ------------------------------------------


@dataclass(frozen=True)
class DualityReport:
    lhs: complex
    rhs: complex
    difference: float
    lhs_doubled: complex
    rhs_doubled: complex
    difference_doubled: float
    half_width: int
    phase_count: int


def duality_residual(potential, energy, eps, alpha, half_width=1000,
                     phase_count=256, seed=DEFAULT_SEED):
    """Phase-averaged resolvent diagonal: direct operator vs its dual.

    Both sides are dense Dirichlet truncations of size 2N+1; the report
    carries the same comparison at 2N as a stability certificate.
    TruncationUnstable fires when doubling N moves either side by more
    than 10x the final difference (with a small absolute floor so the
    exactly self-dual case cannot trip it).
    """
    off = make_rng(seed).uniform(0.0, 1.0 / phase_count)
    phases = np.arange(phase_count) / phase_count + off

    def sides(n):
        lhs = np.mean([
            schrodinger_resolvent(potential, x, eps, energy, alpha, n)[0]
            for x in phases
        ])
        rhs = np.mean([
            dual_resolvent(potential, th, eps, energy, alpha, n)[0]
            for th in phases
        ])
        return complex(lhs), complex(rhs)

    lhs1, rhs1 = sides(half_width)
    lhs2, rhs2 = sides(2 * half_width)
    diff1 = abs(lhs1 - rhs1)
    diff2 = abs(lhs2 - rhs2)
    moved = max(abs(lhs2 - lhs1), abs(rhs2 - rhs1))
    if moved > max(10.0 * diff2, 1e-7):
        raise TruncationUnstable(
            f"doubling N moves a side by {moved:.2e} while the sides "
            f"differ by {diff2:.2e}"
        )
    return DualityReport(
        lhs=lhs1, rhs=rhs1, difference=diff1,
        lhs_doubled=lhs2, rhs_doubled=rhs2, difference_doubled=diff2,
        half_width=half_width, phase_count=phase_count,
    )


# -- derivative of the exponent vs averaged Green's function --------------------


@dataclass(frozen=True)
class DerivativeReport:
    derivative: float
    greens_integral: complex
    residual: float
    ricatti_residual: float


def johnson_moser_residual(potential, energy, eps, alpha, de=1e-3,
                           le=LEParams(), phase_count=256, seed=DEFAULT_SEED):
    """d L_eps / d Im E against -Im of the phase-averaged Green's value.

    The derivative is a central difference over E +/- i*de computed on
    identical orbits (so the estimator noise cancels in the difference);
    the right side averages the m-function Green's values over a phase
    grid.  Uniform hyperbolicity is certified at all three energies.

    Sign convention: with g the plain resolvent entry (as produced by
    scalar_greens and the dense oracle), the identity reads
    dL/dIm(E) = +Im of the phase average of g; a Herglotz-function check
    at eps = 0 fixes the sign unambiguously.
    """
    for e in (energy, energy + 1j * de, energy - 1j * de):
        _require_uh(potential, e, eps, alpha, seed=seed)
    energies = np.asarray([energy + 1j * de, energy - 1j * de])
    matfn, lanes = schrodinger_grid_matfn(potential, energies, np.asarray([eps, eps]))
    exps, _, _ = spectrum_grid(matfn, alpha, 2, lanes, le)
    derivative = float((exps[0, 0] - exps[1, 0]) / (2.0 * de))
    mean_g, _, ric = averaged_scalar_greens(
        potential, eps, energy, alpha, phase_count=phase_count,
        check_uh=False, seed=seed,
    )
    residual = abs(derivative - np.imag(mean_g))
    return DerivativeReport(
        derivative=derivative,
        greens_integral=mean_g,
        residual=float(residual),
        ricatti_residual=ric,
    )


# -- determinant winding --------------------------------------------------------


@dataclass(frozen=True)
class WindingResult:
    base_energy: complex
    eps: float
    eps_used: float
    sites: int
    theta_steps: int
    nu: float
    snapped: int
    profile_slope: float
    slope_integer: int


def _winding_matrices(potential, e_base, eps, alpha, sites, steps):
    n = np.arange(1, sites + 1)
    eye_off = np.eye(sites, k=1) + np.eye(sites, k=-1)
    for k in range(steps + 1):
        th = k / steps
        diag = potential.evaluate((th + n * alpha) % 1.0, eps) - e_base
        yield eye_off + np.diag(diag)


def winding_number(potential, e_base, eps, alpha, sites=128, theta_steps=None,
                   le=LEParams(), edge_offset=1e-4, slope_delta=2e-3,
                   check_slope=True, seed=DEFAULT_SEED):
    """Per-site winding of theta -> det(H_N(theta, eps) - E_B).

    The working eps is nudged by ``edge_offset`` so exact turning points
    (where the truncations lose invertibility) are never sampled.  The
    total argument change is up to 2*pi*sites*degree over one theta
    cycle, so the default step count scales with sites*degree to keep
    neighbouring determinant arguments well under pi apart.  The snapped
    integer is cross-checked against minus the profile slope of the
    exponent in eps at the base energy; disagreement raises
    WindingSlopeMismatch.
    """
    if theta_steps is None:
        need = 10 * sites * max(potential.degree, 1)
        theta_steps = max(512, 1 << int(np.ceil(np.log2(need))))
    if theta_steps < 512:
        raise ValueError("need at least 512 theta steps")
    eps_used = eps + edge_offset
    args = logdet_arg_path(
        _winding_matrices(potential, e_base, eps_used, alpha, sites, theta_steps)
    )
    nu = float((args[-1] - args[0]) / (TWO_PI * sites))
    snapped = round(nu)
    if abs(nu - snapped) >= 0.1:
        raise GridTooCoarse(
            f"winding per site {nu:.3f} is not within 0.1 of an integer; "
            "increase sites or theta_steps"
        )
    slope = np.nan
    slope_int = snapped
    if check_slope:
        eps_lanes = np.asarray([eps_used + slope_delta, eps_used - slope_delta])
        matfn, lanes = schrodinger_grid_matfn(
            potential, np.asarray([e_base, e_base]), eps_lanes
        )
        exps, _, _ = spectrum_grid(matfn, alpha, 2, lanes, le)
        slope = float((exps[0, 0] - exps[1, 0]) / (2.0 * slope_delta))
        slope_int = -round(slope / TWO_PI)
        if slope_int != snapped:
            raise WindingSlopeMismatch(
                f"winding {snapped} but -profile slope gives {slope_int}"
            )
    return WindingResult(
        base_energy=complex(e_base), eps=float(eps), eps_used=float(eps_used),
        sites=sites, theta_steps=theta_steps, nu=nu, snapped=int(snapped),
        profile_slope=slope, slope_integer=int(slope_int),
    )
