"""Exception types shared across the package."""


class SmoothpellError(Exception):
    """Base class for all package-specific errors."""


class InvalidBoundError(SmoothpellError, ValueError):
    """Prime bound K out of range."""


class UndefinedValuationError(SmoothpellError, ValueError):
    """p-adic valuation requested for n = 0."""


class InvalidModulusError(SmoothpellError, ValueError):
    """d is a perfect square (or otherwise unusable as a Pell modulus)."""


class SizeGuardExceeded(SmoothpellError, OverflowError):
    """Exact expansion would exceed the configured digit limit."""


class RegulatorBudgetExceeded(SmoothpellError, RuntimeError):
    """Baby-step/giant-step operation budget exhausted; caller must audit the skip."""


class CompactRepError(SmoothpellError, RuntimeError):
    """Compact representation failed construction-time verification."""


class CorruptRepresentationError(SmoothpellError, RuntimeError):
    """Exact division failed while evaluating a compact representation."""


class InternalLimitError(SmoothpellError, RuntimeError):
    """A safety cap (e.g. the valuation modulus doubling cap) was hit."""


class ForbiddenBandError(SmoothpellError, RuntimeError):
    """A logarithmic smoothness test landed between the two legal clusters.

    The test statistic is, up to a tiny approximation gap, either ~0 (the
    scanned y_n is fully smooth) or >= log of the smallest prime outside the
    basis.  Anything strictly between indicates numerical drift or an
    implementation bug, and is raised loudly instead of being treated as a
    rejection.
    """


class InconsistentSearchError(SmoothpellError, RuntimeError):
    """A convergent below z solved the Pell equation: the computed fundamental
    solution was not minimal.  Must never happen with the unconditional
    regulator; treated as a whole-pipeline failure."""


class CheckpointError(SmoothpellError, RuntimeError):
    """Checkpoint unusable (corrupt, or parameters do not match the request)."""


class IncompleteSetError(SmoothpellError, ValueError):
    """A corollary was requested over a solution set whose generating search
    skipped moduli; "largest" claims would be meaningless."""


class ResultParseError(SmoothpellError, ValueError):
    """A result file failed to parse; carries the offending line number."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message if line_no is None else f"line {line_no}: {message}")
        self.line_no = line_no
