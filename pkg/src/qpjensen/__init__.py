"""Numerical toolkit for complexified exponents of quasiperiodic cocycles."""

__version__ = "0.1.0"

from .model import (
    GOLDEN_MEAN,
    AnalyticPotential,
    Frequency,
    TrigPotential,
    ZeroPotential,
    amo,
    from_pairs,
    load_potential,
    save_potential,
    sem,
)
from .cocycle import (
    CocycleSpec,
    LEParams,
    LyapunovSpectrum,
    domination_check,
    invariant_frames,
    iterate,
    lyapunov_spectrum,
    schrodinger_cocycle,
)
from .dual import (
    DualCocycle,
    DualSpectrum,
    build_dual,
    dual_limit_table,
    dual_spectra,
    dual_spectrum,
    rescaling_residual,
    shifted_spectrum_check,
    symplectic_residual,
)
from .jensen import (
    Classification,
    JensenProfile,
    TailFit,
    acceleration,
    approximate_spectrum,
    auto_energy,
    classify,
    haro_puig_many,
    haro_puig_residual,
    profile,
    scalar_jensen,
    tail_fit,
)
from .greens import (
    GreensKernel,
    LatticeOperator,
    Solution,
    duality_residual,
    dual_kernel_from_frames,
    greens_kernel,
    johnson_moser_residual,
    scalar_greens,
    strip_greens,
    winding_number,
)

__all__ = [
    "GOLDEN_MEAN",
    "AnalyticPotential",
    "Frequency",
    "TrigPotential",
    "amo",
    "from_pairs",
    "load_potential",
    "save_potential",
    "sem",
    "ZeroPotential",
    "CocycleSpec",
    "LEParams",
    "LyapunovSpectrum",
    "domination_check",
    "invariant_frames",
    "iterate",
    "lyapunov_spectrum",
    "schrodinger_cocycle",
    "DualCocycle",
    "DualSpectrum",
    "build_dual",
    "dual_limit_table",
    "dual_spectra",
    "dual_spectrum",
    "rescaling_residual",
    "shifted_spectrum_check",
    "symplectic_residual",
    "Classification",
    "JensenProfile",
    "acceleration",
    "approximate_spectrum",
    "auto_energy",
    "classify",
    "haro_puig_many",
    "haro_puig_residual",
    "tail_fit",
    "TailFit",
    "profile",
    "scalar_jensen",
    "GreensKernel",
    "LatticeOperator",
    "Solution",
    "duality_residual",
    "dual_kernel_from_frames",
    "greens_kernel",
    "johnson_moser_residual",
    "scalar_greens",
    "strip_greens",
    "winding_number",
]
