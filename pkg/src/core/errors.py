# Exception hierarchy for shnolkit
# Every failure raised by the numerical modules derives from ShnolError

from typing import Optional


class ShnolError(Exception):
    """Base class for all shnolkit errors"""
    pass


class CoefficientError(ShnolError):
    """Invalid or unevaluable coefficient sequence"""
    pass


class IndexOutOfRange(CoefficientError, IndexError):
    """Index outside the lattice or the coefficient table"""
    pass


class NonPositiveCoefficient(CoefficientError):
    """An off-diagonal coefficient evaluated to a non-positive or non-finite value"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class NonPositiveWeight(CoefficientError):
    """A weight c_n of a weighted recurrence is not positive"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class UnknownFamily(CoefficientError):
    """Coefficient family name not in the registry"""
    pass


class InvalidParams(CoefficientError, ValueError):
    """Malformed family parameters"""
    pass


class Breakdown(ShnolError):
    """Forward recurrence cannot continue (zero off-diagonal)"""
    pass


class DegenerateWindow(ShnolError):
    """Fit window has too few nonzero samples"""
    pass


class SupportOutOfRange(ShnolError):
    """Sparse vector support leaves the operator's lattice"""
    pass


class EmptySpectrum(ShnolError):
    """Spectral query on an empty eigenvalue list"""
    pass


class BadGeometry(ShnolError):
    """Cutoff window parameters are inconsistent"""
    pass


class ZeroVector(ShnolError):
    """Windowed solution vanishes identically"""
    pass


class MarginTooSmall(ShnolError):
    """Window does not leave enough solution samples past its right edge"""
    pass


class HypothesisViolated(ShnolError):
    """A standing hypothesis fails at a reported index"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class PositivityViolated(ShnolError):
    """Perturbed off-diagonal a + eta is not positive"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class ConfigError(ShnolError, ValueError):
    """Malformed experiment configuration"""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key
