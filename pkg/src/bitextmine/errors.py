"""Exception hierarchy.

``DataError`` covers everything caused by bad inputs (malformed files,
mismatched shapes, out-of-range values); the CLI maps it to exit code 2.
"""


class BitextMineError(Exception):
    """Base class for all toolkit errors."""


class DataError(BitextMineError):
    """Invalid input data or configuration."""


class BadMagic(DataError):
    pass


class TruncatedFile(DataError):
    pass


class ZeroDim(DataError):
    pass


class SizeNotDivisible(DataError):
    pass


class ZeroRow(DataError):
    def __init__(self, row: int):
        super().__init__(f"row {row} has zero L2 norm")
        self.row = row


class DimMismatch(DataError):
    pass


class ZeroNorm(DataError):
    pass


class KTooLarge(DataError):
    pass


class CountMismatch(DataError):
    pass


class RatioZeroDenominator(DataError):
    pass


class ArityMismatch(DataError):
    pass


class IndexOutOfRange(DataError):
    pass


class IOFailure(BitextMineError):
    pass


class TokenOutOfRange(DataError):
    pass


class TooLong(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class SizeTooSmall(DataError):
    pass


class NoMaskedPositions(DataError):
    pass


class NonFiniteLoss(BitextMineError):
    pass
