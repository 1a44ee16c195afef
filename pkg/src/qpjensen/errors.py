"""Exception and warning types shared by all qpjensen modules."""


class QpjError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(QpjError):
    """Bad user input: files, grids, command-line values."""


class NumericalError(QpjError):
    """A numerical operation failed or a certified check did not hold."""


# -- numkernel ---------------------------------------------------------------

class DegenerateFrame(NumericalError):
    """QR input is rank deficient to working precision."""


class EigFailure(NumericalError):
    """Eigenvalue iteration did not converge."""


class SingularSystem(NumericalError):
    """Linear system is singular to working precision."""


class GridTooCoarse(NumericalError):
    """Consecutive determinant arguments jump by pi or more."""


# -- model -------------------------------------------------------------------

class ParseError(ConfigError):
    """Malformed potential file; carries the offending line number."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class EmptyPotential(ConfigError):
    """All Fourier coefficients vanish (or trim to zero)."""


# -- cocycle -----------------------------------------------------------------

class InconclusiveDomination(NumericalError):
    """Doubling the orbit length flips the domination verdict."""


class FrameNotConverged(NumericalError):
    """Invariant subspace frames did not stabilize within the iteration cap."""


# -- dual --------------------------------------------------------------------

class ZeroLeadingCoefficient(ConfigError):
    """Top Fourier coefficient below the trim threshold; dual step undefined."""


class PairingViolation(NumericalError):
    """Symplectic +/- pairing of dual exponents fails at real energy."""


# -- jensen ------------------------------------------------------------------

class SnapFailure(NumericalError):
    """A fitted slope is too far from an integer multiple of 2*pi."""


class NonConvexProfile(NumericalError):
    """Sampled exponent profile dips below its chords beyond noise."""


class AccelerationMismatch(NumericalError):
    """Finite-difference slope and dual zero count disagree."""


class BorderlineEnergy(NumericalError):
    """An exponent sits inside the undecidable band around the zero threshold."""


# -- greens ------------------------------------------------------------------

class SingularWronskian(NumericalError):
    """Solution matrix determinant below tolerance; kernel formula undefined."""


class WrongDecayCount(NumericalError):
    """Number of decaying solutions inconsistent with the operator order."""


class NotUniformlyHyperbolic(NumericalError):
    """Required uniform hyperbolicity could not be certified."""


class TruncationUnstable(NumericalError):
    """Doubling the truncation moves a value by more than the reported gap."""


class BlockNotInvertible(NumericalError):
    """Frame normalization block is singular at the sampled phase."""


class WindingSlopeMismatch(NumericalError):
    """Winding number disagrees with minus the profile slope."""


# -- warnings ----------------------------------------------------------------

class RootNearCircle(UserWarning):
    """A polynomial root lies close to the integration circle; quadrature degrades."""


class CoefficientTrimmed(UserWarning):
    """Trailing Fourier coefficients below threshold were dropped."""
