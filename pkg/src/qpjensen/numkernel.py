"""Dense complex linear algebra primitives.

Everything here is deterministic and sized for small dense matrices
(up to a few thousand rows for one-shot factorizations, up to ~64x64
inside iteration hot loops).  Factorizations follow fixed uniqueness
conventions so repeated runs are bit-stable.
"""

import numpy as np

from .errors import DegenerateFrame, EigFailure, GridTooCoarse, SingularSystem

DEFAULT_SEED = 0x5EED

EIG_MAX_DIM = 4096


def make_rng(seed=DEFAULT_SEED):
    """Deterministic generator from a 64-bit seed."""
    return np.random.default_rng(np.uint64(seed))


def as_cmatrix(entries):
    """Validate and return a 2-D complex array with finite entries."""
    m = np.asarray(entries, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    return m


def qr_positive(w):
    """QR factorization with strictly positive real diagonal of R.

    Returns (Q, R) with w = Q @ R, Q unitary, R upper triangular and
    diag(R) real positive.  This pins down the otherwise phase-ambiguous
    factorization to a unique representative.

    Raises
    ------
    DegenerateFrame
        if the smallest diagonal of R falls below 1e-14 * ||w||.
    """
    w = as_cmatrix(w)
    if w.shape[0] != w.shape[1]:
        raise ValueError("qr_positive expects a square matrix")
    q, r = np.linalg.qr(w)
    diag = np.diagonal(r)
    scale = np.linalg.norm(w)
    if np.min(np.abs(diag)) <= 1e-14 * max(scale, 1e-300):
        raise DegenerateFrame(
            f"rank deficient frame: min|R_ii| = {np.min(np.abs(diag)):.3e}"
        )
    phase = diag / np.abs(diag)
    q = q * phase[np.newaxis, :]
    r = r * np.conj(phase)[:, np.newaxis]
    # scrub roundoff imaginary parts on the now-real diagonal
    n = w.shape[0]
    r[np.arange(n), np.arange(n)] = np.abs(diag)
    return q, r


def qr_positive_batch(w, passes=2):
    """Positive-diagonal QR over a stack of small matrices.

    Modified Gram-Schmidt, vectorized over all leading axes of ``w``
    (shape ``(..., m, m)``).  Runs orders of magnitude faster than a
    per-matrix LAPACK call for the m <= 8 stacks used in cocycle
    iteration.  Returns (Q, logdiag) where logdiag holds log of the
    positive diagonal of R; the full R is not formed.
    """
    m = w.shape[-1]
    q = np.array(w, dtype=complex, copy=True)
    logdiag = np.empty(w.shape[:-2] + (m,), dtype=float)
    for j in range(m):
        v = q[..., :, j]
        for _ in range(passes):
            for i in range(j):
                qi = q[..., :, i]
                proj = np.einsum("...k,...k->...", np.conj(qi), v)
                v = v - proj[..., np.newaxis] * qi
        nrm2 = np.einsum("...k,...k->...", np.conj(v), v).real
        if np.any(nrm2 <= 0.0) or not np.all(np.isfinite(nrm2)):
            raise DegenerateFrame("frame collapsed during batched QR")
        nrm = np.sqrt(nrm2)
        logdiag[..., j] = np.log(nrm)
        q[..., :, j] = v / nrm[..., np.newaxis]
    return q, logdiag


def eig_small(m):
    """Eigenvalues with multiplicity, sorted by descending modulus.

    Ties in modulus are broken by ascending argument in (-pi, pi].
    Dimension is capped at EIG_MAX_DIM; LAPACK non-convergence is
    surfaced as EigFailure.
    """
    m = as_cmatrix(m)
    if m.shape[0] != m.shape[1]:
        raise ValueError("eig_small expects a square matrix")
    if m.shape[0] > EIG_MAX_DIM:
        raise ValueError(f"dimension {m.shape[0]} exceeds cap {EIG_MAX_DIM}")
    try:
        vals = np.linalg.eigvals(m)
    except np.linalg.LinAlgError as exc:
        raise EigFailure(str(exc)) from exc
    order = np.lexsort((np.angle(vals), -np.abs(vals)))
    return vals[order]


def solve_dense(m, rhs):
    """Solve m @ x = rhs for square invertible m with a residual guard.

    Raises SingularSystem if LAPACK reports singularity or the relative
    residual exceeds 1e-10.
    """
    m = as_cmatrix(m)
    rhs_arr = np.asarray(rhs, dtype=complex)
    vector_input = rhs_arr.ndim == 1
    b = rhs_arr[:, np.newaxis] if vector_input else rhs_arr
    try:
        x = np.linalg.solve(m, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    resid = np.linalg.norm(m @ x - b)
    scale = max(np.linalg.norm(b), 1e-300)
    if not np.isfinite(resid) or resid > 1e-10 * scale:
        raise SingularSystem(
            f"singular to working precision: relative residual {resid / scale:.3e}"
        )
    return x[:, 0] if vector_input else x


def _det_arg(m):
    sign, logabs = np.linalg.slogdet(m)
    if sign == 0 or not np.isfinite(logabs):
        raise SingularSystem("determinant vanished along the path")
    return float(np.angle(sign))


def logdet_arg_path(matrices):
    """Continuously unwrapped arguments of det along an ordered path.

    ``matrices`` may be any iterable of square complex matrices; they are
    consumed lazily so long paths of large truncations never need to be
    held in memory at once.  Neighbouring determinants must differ in
    argument by less than pi, otherwise the winding is ambiguous and
    GridTooCoarse is raised.

    Returns the unwrapped argument samples; total winding is
    (last - first) / (2*pi).
    """
    args = []
    for m in matrices:
        a = _det_arg(np.asarray(m, dtype=complex))
        if not args:
            args.append(a)
            continue
        prev = args[-1]
        jump = (a - prev + np.pi) % (2.0 * np.pi) - np.pi
        if abs(jump) >= np.pi * (1.0 - 1e-9):
            raise GridTooCoarse(
                f"determinant argument jumped by {jump:+.3f} rad between neighbours"
            )
        args.append(prev + jump)
    if not args:
        raise ValueError("empty matrix path")
    return np.asarray(args)


def path_winding(matrices):
    """Total winding number of det along the path, in turns."""
    args = logdet_arg_path(matrices)
    return (args[-1] - args[0]) / (2.0 * np.pi)
