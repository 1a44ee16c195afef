"""Potentials, frequencies and operator presets.

A trigonometric potential V(x) = sum_k V_k e^{2 pi i k x}, |k| <= d, is
the single source of truth for both the direct operator (V enters the
diagonal) and its long-range dual (the V_k become hopping amplitudes).
Coefficients are therefore trimmed aggressively: a spurious tiny leading
coefficient would poison every 1/V_d in the dual construction.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import CoefficientTrimmed, EmptyPotential, ParseError

#: golden mean, the default strongly irrational frequency
GOLDEN_MEAN = (np.sqrt(5.0) - 1.0) / 2.0

TRIM_THRESHOLD = 1e-14
REALITY_TOL = 1e-12


def check_frequency(alpha):
    """Validate a frequency in (0, 1), rejecting near-rationals.

    Any alpha within 1e-9 of a rational p/q with q <= 50 is refused:
    such inputs are effectively periodic at the orbit lengths used here
    and every equidistribution-based estimate silently breaks.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"frequency must lie in (0, 1), got {alpha}")
    for q in range(1, 51):
        p = round(alpha * q)
        if abs(alpha - p / q) <= 1e-9:
            raise ValueError(
                f"frequency {alpha} is within 1e-9 of {p}/{q}; "
                "grossly periodic inputs are rejected"
            )
    return alpha


@dataclass(frozen=True)
class Frequency:
    """An irrational rotation number in (0, 1)."""

    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", check_frequency(self.value))

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class TrigPotential:
    """Finite Fourier series with exact degree.

    ``coeffs[j]`` holds V_k for k = j - degree, i.e. the array runs over
    k = -d..d in order.  After construction |V_d| and |V_-d| are
    guaranteed positive (trailing coefficients below TRIM_THRESHOLD
    relative to max|V_k| are dropped, with a warning).
    """

    coeffs: np.ndarray
    is_real: bool = field(default=False)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size % 2 == 0:
            raise ValueError("coefficient array must have odd length 2d+1")
        scale = np.max(np.abs(c)) if c.size else 0.0
        if scale == 0.0:
            raise EmptyPotential("all Fourier coefficients vanish")
        d = c.size // 2
        keep = d
        while keep >= 1 and (
            abs(c[d + keep]) <= TRIM_THRESHOLD * scale
            and abs(c[d - keep]) <= TRIM_THRESHOLD * scale
        ):
            keep -= 1
        if keep == 0 and abs(c[d]) <= TRIM_THRESHOLD * scale:
            raise EmptyPotential("all Fourier coefficients trim to zero")
        if keep < d:
            warnings.warn(
                f"trimmed potential degree from {d} to {keep}",
                CoefficientTrimmed,
                stacklevel=2,
            )
            c = c[d - keep : d + keep + 1]
        c = c.copy()
        c.flags.writeable = False
        real = bool(
            np.all(np.abs(c[::-1].conj() - c) <= REALITY_TOL * scale)
        )
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "is_real", real)

    @property
    def degree(self):
        return self.coeffs.size // 2

    def coeff(self, k):
        """V_k, zero outside [-d, d]."""
        d = self.degree
        if -d <= k <= d:
            return complex(self.coeffs[d + k])
        return 0.0j

    @property
    def leading(self):
        """V_d, the top coefficient (nonzero by construction)."""
        return complex(self.coeffs[-1])

    def evaluate(self, x, eps=0.0):
        """V at the complexified phase x + i*eps.

        Accepts scalars or arrays (broadcast against each other);
        computes sum_k V_k e^{2 pi i k x} e^{-2 pi k eps}.
        """
        x = np.asarray(x, dtype=float)
        eps = np.asarray(eps, dtype=float)
        z = x + 1j * eps
        d = self.degree
        w = np.exp(2j * np.pi * z)
        out = np.full(np.broadcast(x, eps).shape, self.coeff(0), dtype=complex)
        wp = np.ones_like(w)
        for k in range(1, d + 1):
            wp = wp * w
            out = out + self.coeffs[d + k] * wp + self.coeffs[d - k] / wp
        if out.ndim == 0:
            return complex(out)
        return out

    def __call__(self, x, eps=0.0):
        return self.evaluate(x, eps)


class ZeroPotential:
    """The zero potential (free operator).

    Not a TrigPotential (those have degree >= 1 with a nonzero top
    coefficient); this sentinel exists for the free transfer cocycle,
    where no dual construction is ever attempted.
    """

    degree = 0
    is_real = True

    def evaluate(self, x, eps=0.0):
        x = np.asarray(x, dtype=float)
        eps = np.asarray(eps, dtype=float)
        shape = np.broadcast(x, eps).shape
        if shape == ():
            return 0j
        return np.zeros(shape, dtype=complex)

    def __call__(self, x, eps=0.0):
        return self.evaluate(x, eps)

    @property
    def leading(self):
        raise EmptyPotential("the zero potential has no leading coefficient")


def amo(lam):
    """Cosine potential 2*lam*cos(2 pi x):  d = 1, V_{+-1} = lam."""
    lam = complex(lam)
    if lam == 0:
        raise EmptyPotential("amo coupling must be nonzero")
    return TrigPotential(np.array([lam, 0.0, lam]))


def sem(lam1, lam2):
    """Two-harmonic potential 2*lam1*cos(2 pi x) + 2*lam2*cos(4 pi x)."""
    lam1, lam2 = complex(lam1), complex(lam2)
    if lam2 == 0:
        raise EmptyPotential("second harmonic must be nonzero for degree 2")
    return TrigPotential(np.array([lam2, lam1, 0.0, lam1, lam2]))


def from_pairs(pairs):
    """Build a potential from (k, V_k) pairs; unspecified k are zero."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyPotential("no coefficients given")
    d = max(abs(int(k)) for k, _ in pairs)
    c = np.zeros(2 * d + 1, dtype=complex)
    seen = set()
    for k, v in pairs:
        k = int(k)
        if k in seen:
            raise ParseError(f"duplicate coefficient index k={k}")
        seen.add(k)
        c[d + k] = complex(v)
    return TrigPotential(c)


@dataclass(frozen=True)
class AnalyticPotential:
    """A potential known through a ladder of trigonometric truncations.

    ``band`` is the half-width of the strip on which the full series is
    controlled; truncations at increasing degree agree coefficientwise on
    their common range.
    """

    truncations: tuple
    band: float

    def __post_init__(self):
        if self.band <= 0:
            raise ValueError("band half-width must be positive")
        ts = tuple(self.truncations)
        if not ts:
            raise EmptyPotential("no truncations supplied")
        degs = [t.degree for t in ts]
        if degs != sorted(degs) or len(set(degs)) != len(degs):
            raise ValueError("truncations must have strictly increasing degree")
        for lo, hi in zip(ts[:-1], ts[1:]):
            d = lo.degree
            if not np.allclose(
                hi.coeffs[hi.degree - d : hi.degree + d + 1],
                lo.coeffs,
                atol=1e-13,
                rtol=0,
            ):
                raise ValueError("truncations disagree on shared coefficients")
        object.__setattr__(self, "truncations", ts)

    @property
    def max_degree(self):
        return self.truncations[-1].degree

    def truncation(self, d):
        """The stored truncation of degree exactly d."""
        for t in self.truncations:
            if t.degree == d:
                return t
        raise KeyError(f"no truncation of degree {d}")

    @classmethod
    def geometric(cls, ratio, degrees, band=None, k0_coeff=0.0):
        """Real ladder with V_k = ratio^{|k|} (a convenient test family)."""
        ratio = float(ratio)
        if not 0 < abs(ratio) < 1:
            raise ValueError("ratio must satisfy 0 < |ratio| < 1")
        if band is None:
            band = -np.log(abs(ratio)) / (2 * np.pi)
        ts = []
        for d in degrees:
            c = np.array(
                [ratio ** abs(k) for k in range(-d, d + 1)], dtype=complex
            )
            c[d] = k0_coeff
            ts.append(TrigPotential(c))
        return cls(tuple(ts), band)


# -- file format: one "k re im" triple per line, '#' comments ----------------

def load_potential(path, allow_zero=False):
    """Read a potential from the plain-text coefficient format.

    All-zero files raise EmptyPotential unless ``allow_zero`` is set, in
    which case the free operator sentinel is returned (only meaningful
    for direct transfer-cocycle work).
    """
    pairs = []
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(
                    f"expected 'k re im', got {raw.strip()!r}", line=lineno
                )
            try:
                k = int(parts[0])
                re, im = float(parts[1]), float(parts[2])
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
            if k in seen:
                raise ParseError(f"duplicate coefficient k={k}", line=lineno)
            seen.add(k)
            pairs.append((k, complex(re, im)))
    if not pairs:
        raise EmptyPotential(f"no coefficients in {path}")
    if allow_zero and all(v == 0 for _, v in pairs):
        return ZeroPotential()
    return from_pairs(pairs)


def save_potential(potential, path):
    """Write a potential in the plain-text coefficient format."""
    d = potential.degree
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# k  re  im\n")
        for k in range(-d, d + 1):
            v = potential.coeff(k)
            if v != 0:
                fh.write(f"{k} {v.real!r} {v.imag!r}\n")


def format_complex(z):
    """Render a complex scalar as the CLI's re,im form."""
    z = complex(z)
    return f"{z.real!r},{z.imag!r}"


def parse_complex(text):
    """Parse 're,im' (or a bare real) into a complex scalar."""
    text = text.strip()
    try:
        if "," in text:
            re, im = text.split(",", 1)
            return complex(float(re), float(im))
        return complex(float(text), 0.0)
    except ValueError as exc:
        raise ParseError(f"bad complex scalar {text!r}") from exc
