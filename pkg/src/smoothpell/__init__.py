"""smoothpell: find every integer x >= 2 whose x^2 - 1 factors completely
over the primes up to a bound K, by solving Pell equations over all squarefree
smooth moduli and filtering their solution towers."""

from .primes import SmoothBasis, gen_basis, is_smooth, smooth_split, valuation
from .quadfield import (
    CFExpansion,
    PellSolution,
    QuadInt,
    cf_expand,
    convergents_below,
    fundamental_solution,
    log_unit,
    pell_power_exact,
    pell_power_mod,
)

__version__ = "0.1.0"

__all__ = [
    "SmoothBasis",
    "gen_basis",
    "is_smooth",
    "smooth_split",
    "valuation",
    "CFExpansion",
    "PellSolution",
    "QuadInt",
    "cf_expand",
    "convergents_below",
    "fundamental_solution",
    "log_unit",
    "pell_power_exact",
    "pell_power_mod",
    "__version__",
]
