# Base coefficient model interface
# Abstract base class for the sequences a_n > 0 and b_n of the three-term recurrence

from abc import ABC, abstractmethod
from typing import Any, Dict, Sequence

import numpy as np

from core.errors import CoefficientError, IndexOutOfRange, InvalidParams, NonPositiveCoefficient


class CoefficientModel(ABC):
    """Abstract base class for coefficient families

    A model describes a_n > 0 for n >= start_index and real b_n for
    n >= start_index. The value a_{start_index - 1} only enters the diagonal
    b_n + a_n + a_{n-1} at the first site; it is zero unless the family
    formula gives a finite positive number there.

    Subclasses evaluate their formulas on integer numpy arrays so long
    lattices are never tabulated up front. Instances are immutable.
    """

    kind: str = ""

    def __init__(self, params: Sequence[float] = (), start_index: int = 0):
        if int(start_index) != start_index or start_index < 0:
            raise InvalidParams(f"start_index must be a nonnegative integer, got {start_index!r}")
        self.params = tuple(float(p) for p in params)
        self.start_index = int(start_index)

    @abstractmethod
    def _raw_a(self, n: np.ndarray) -> np.ndarray:
        """Family formula for a_n, no validation"""
        pass

    @abstractmethod
    def _raw_b(self, n: np.ndarray) -> np.ndarray:
        """Family formula for b_n, no validation"""
        pass

    def _raw_log_a(self, n: np.ndarray) -> np.ndarray:
        """log a_n; families with fast growth override this analytically"""
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            return np.log(self._raw_a(n))

    def eval_a(self, n: int) -> float:
        """Return a_n for n >= start_index - 1"""
        n = int(n)
        if n < self.start_index - 1:
            raise IndexOutOfRange(f"a_{n} requested below the lattice start {self.start_index}")
        with np.errstate(over='ignore', invalid='ignore'):
            value = float(self._raw_a(np.array([n]))[0])
        if not (np.isfinite(value) and value > 0):
            raise NonPositiveCoefficient(f"a_{n} = {value!r} is not a positive finite number", index=n)
        return value

    def eval_b(self, n: int) -> float:
        """Return b_n for n >= start_index"""
        n = int(n)
        if n < self.start_index:
            raise IndexOutOfRange(f"b_{n} requested below the lattice start {self.start_index}")
        value = float(self._raw_b(np.array([n]))[0])
        if not np.isfinite(value):
            raise CoefficientError(f"b_{n} = {value!r} is not finite")
        return value

    def edge_a(self) -> float:
        """a_{start-1}, or 0 when the family formula degenerates there"""
        with np.errstate(over='ignore', invalid='ignore', divide='ignore'):
            value = float(self._raw_a(np.array([self.start_index - 1]))[0])
        if np.isfinite(value) and value > 0:
            return value
        return 0.0

    def _index_range(self, lo: int, hi: int) -> np.ndarray:
        if lo < self.start_index:
            raise IndexOutOfRange(f"range [{lo}, {hi}) starts below the lattice start {self.start_index}")
        return np.arange(int(lo), int(hi), dtype=np.int64)

    def a_values(self, lo: int, hi: int) -> np.ndarray:
        """a_n for n in [lo, hi), validated positive and finite"""
        n = self._index_range(lo, hi)
        with np.errstate(over='ignore', invalid='ignore'):
            values = np.asarray(self._raw_a(n), dtype=float)
        bad = ~(np.isfinite(values) & (values > 0))
        if bad.any():
            k = int(n[np.argmax(bad)])
            raise NonPositiveCoefficient(f"a_{k} = {values[k - lo]!r} is not a positive finite number", index=k)
        return values

    def b_values(self, lo: int, hi: int) -> np.ndarray:
        """b_n for n in [lo, hi)"""
        n = self._index_range(lo, hi)
        values = np.asarray(self._raw_b(n), dtype=float)
        if not np.all(np.isfinite(values)):
            k = int(n[np.argmax(~np.isfinite(values))])
            raise CoefficientError(f"b_{k} is not finite")
        return values

    def log_a_values(self, lo: int, hi: int) -> np.ndarray:
        """log a_n for n in [lo, hi); stays finite where a_n itself overflows"""
        n = self._index_range(lo, hi)
        values = np.asarray(self._raw_log_a(n), dtype=float)
        if np.any(np.isnan(values)) or np.any(values == -np.inf):
            k = int(n[np.argmax(np.isnan(values) | (values == -np.inf))])
            raise NonPositiveCoefficient(f"a_{k} is not positive", index=k)
        return values

    def diagonal(self, lo: int, hi: int) -> np.ndarray:
        """b_n + a_n + a_{n-1} for n in [lo, hi)"""
        a = self.a_values(lo, hi)
        if lo == self.start_index:
            a_prev = np.concatenate(([self.edge_a()], a[:-1]))
        else:
            a_prev = np.concatenate((self.a_values(lo - 1, lo), a[:-1]))
        return self.b_values(lo, hi) + a + a_prev

    def validate(self, N: int) -> None:
        """Check positivity of a_n on [start_index, start_index + N]"""
        self.a_values(self.start_index, self.start_index + int(N) + 1)
        self.b_values(self.start_index, self.start_index + int(N) + 1)

    def describe(self) -> Dict[str, Any]:
        """Self-description echoed into run metadata"""
        return {
            'family': self.kind,
            'params': list(self.params),
            'start_index': self.start_index,
        }

    def __repr__(self) -> str:
        return f"{type(self).__name__}(params={list(self.params)}, start_index={self.start_index})"
