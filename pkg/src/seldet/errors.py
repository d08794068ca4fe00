"""Exception types shared across the toolkit."""

from __future__ import annotations


class SeldetError(Exception):
    """Base class for all errors raised by this package."""


class IndexOutOfRangeError(SeldetError, IndexError):
    """A row or column index falls outside the matrix dimension."""


class AsymmetricInputError(SeldetError, ValueError):
    """Explicit (i, j) and (j, i) entries disagree beyond tolerance."""


class ParseError(SeldetError, ValueError):
    """A Matrix Market stream is malformed."""


class UnsupportedFormatError(SeldetError, ValueError):
    """A Matrix Market stream is well-formed but not symmetric real/pattern."""


class SizeMismatchError(SeldetError, ValueError):
    """Operands have incompatible dimensions."""


class NotAPermutationError(SeldetError, ValueError):
    """An index sequence is not a bijection on 0..n-1."""


class CycleDetectedError(SeldetError, ValueError):
    """A parent array contains a cycle and is not a forest."""


class PatternMismatchError(SeldetError, ValueError):
    """Numeric input does not match the symbolic pattern it claims to follow."""


class NonPositivePivotError(SeldetError, ArithmeticError):
    """A pivot d_i fell below the rejection threshold (matrix not SPD)."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"non-positive pivot d[{index}] = {value!r}")


class NearSingularWarning(UserWarning):
    """A pivot is positive but below the near-singular threshold."""


class SingularMatrixError(SeldetError, ArithmeticError):
    """Dense elimination hit an exactly singular matrix."""


class TooLargeError(SeldetError, ValueError):
    """Input exceeds the size guard of a dense oracle path."""


class TooLargeForDenseFormError(TooLargeError):
    """The dense H-form likelihood was requested for an oversized problem."""


class RankDeficientDesignError(SeldetError, ValueError):
    """The fixed-effect design matrix does not have full column rank."""


class EmptyFactorError(SeldetError, ValueError):
    """A grouping factor has no levels or an empty level."""


class PatternNotCoveredError(SeldetError, ValueError):
    """A matrix has a structural entry outside the selected-inverse pattern."""


class InvalidConfigError(SeldetError, ValueError):
    """A benchmark-generator configuration violates its constraints."""
