"""digit-spectra - Möbius orthogonality experiments along the squares.

Example:
    >>> import digit_spectra as ds
    >>> tm = ds.BMultFunction.thue_morse()
    >>> series = ds.mobius_square_sum(tm, 10**5, [10**3, 10**4, 10**5])
    >>> [round(p.abs_over_N, 4) for p in series.points]
"""

from digit_spectra.correlation import (
    BlockHistogram,
    CarryReport,
    SumSeries,
    block_histogram,
    count_carry_violations,
    dk_correlation,
    entropy_estimate,
    mobius_square_sum,
    twisted_square_sum,
)
from digit_spectra.digitcore import (
    Angle,
    BMultFunction,
    PairProduct,
    ScaledFunction,
    TruncatedFunction,
    digit_sum,
    digits,
    eval_angle,
    eval_complex,
    is_periodic,
    truncate,
)
from digit_spectra.pairgraph import ComponentC, build_component, find_i0, path_counts
from digit_spectra.sieve import MobiusTable, check_coprime_triple, primes_upto, sieve_mobius
from digit_spectra.transfer import (
    ContractionCertificate,
    DecayProfile,
    FourierConfig,
    NoCertificateError,
    decay_profile,
    find_contraction,
)
from digit_spectra.utils import InconsistencyError

__version__ = "0.1.0"
__all__ = [
    "Angle",
    "BMultFunction",
    "ScaledFunction",
    "PairProduct",
    "TruncatedFunction",
    "digits",
    "digit_sum",
    "eval_angle",
    "eval_complex",
    "is_periodic",
    "truncate",
    "MobiusTable",
    "sieve_mobius",
    "primes_upto",
    "check_coprime_triple",
    "ComponentC",
    "build_component",
    "find_i0",
    "path_counts",
    "FourierConfig",
    "ContractionCertificate",
    "DecayProfile",
    "NoCertificateError",
    "find_contraction",
    "decay_profile",
    "SumSeries",
    "CarryReport",
    "BlockHistogram",
    "mobius_square_sum",
    "dk_correlation",
    "twisted_square_sum",
    "count_carry_violations",
    "block_histogram",
    "entropy_estimate",
    "InconsistencyError",
]
