# Tabulated coefficient model
# Finite tables a_table[k] = a_{start+k}, b_table[k] = b_{start+k}

from typing import Any, Dict, Optional, Sequence

import numpy as np

from core.errors import CoefficientError, IndexOutOfRange, InvalidParams, NonPositiveCoefficient

from .base import CoefficientModel


def _frozen(values: Sequence[float], name: str) -> np.ndarray:
    array = np.array(values, dtype=float).reshape(-1)
    if array.size == 0:
        raise InvalidParams(f"{name} table is empty")
    array.setflags(write=False)
    return array


class TabulatedModel(CoefficientModel):
    """Coefficients read from finite tables, validated on construction"""

    kind = 'tabulated'

    def __init__(self, a: Sequence[float], b: Optional[Sequence[float]] = None, a_edge: float = 0.0,
                 start_index: int = 0, diagonal: Optional[Sequence[float]] = None):
        super().__init__((), start_index)
        self.a_table = _frozen(a, 'a')
        self.a_edge = float(a_edge)
        if not (np.isfinite(self.a_edge) and self.a_edge >= 0):
            raise InvalidParams(f"a_edge must be finite and nonnegative, got {a_edge!r}")

        bad = ~(np.isfinite(self.a_table) & (self.a_table > 0))
        if bad.any():
            k = int(np.argmax(bad))
            raise NonPositiveCoefficient(
                f"a_{self.start_index + k} = {self.a_table[k]!r} is not a positive finite number",
                index=self.start_index + k,
            )

        if diagonal is None:
            if b is None:
                raise InvalidParams("either b or diagonal must be tabulated")
            self.b_table = _frozen(b, 'b')
            self.diagonal_table = None
        else:
            # exact diagonal supplied; b is what makes b + a_n + a_{n-1} reproduce it
            self.diagonal_table = _frozen(diagonal, 'diagonal')
            size = self.diagonal_table.size
            if self.a_table.size < size:
                raise InvalidParams("a table must cover every diagonal entry")
            a_prev = np.concatenate(([self.a_edge], self.a_table[:size - 1]))
            self.b_table = _frozen(self.diagonal_table - self.a_table[:size] - a_prev, 'b')

        if not np.all(np.isfinite(self.b_table)):
            raise CoefficientError("b table has non-finite entries")

    def _offsets(self, n: np.ndarray, size: int, name: str) -> np.ndarray:
        k = n - self.start_index
        if k.size and (k.min() < 0 or k.max() >= size):
            worst = int(n[np.argmax((k < 0) | (k >= size))])
            raise IndexOutOfRange(
                f"{name}_{worst} outside table range [{self.start_index}, {self.start_index + size})"
            )
        return k

    def _raw_a(self, n: np.ndarray) -> np.ndarray:
        edge = n == self.start_index - 1
        if edge.any():
            out = np.empty(n.shape)
            out[edge] = self.a_edge
            rest = ~edge
            out[rest] = self.a_table[self._offsets(n[rest], self.a_table.size, 'a')]
            return out
        return self.a_table[self._offsets(n, self.a_table.size, 'a')]

    def _raw_b(self, n: np.ndarray) -> np.ndarray:
        return self.b_table[self._offsets(n, self.b_table.size, 'b')]

    def diagonal(self, lo: int, hi: int) -> np.ndarray:
        if self.diagonal_table is None:
            return super().diagonal(lo, hi)
        n = self._index_range(lo, hi)
        return self.diagonal_table[self._offsets(n, self.diagonal_table.size, 'diagonal')].copy()

    @property
    def size(self) -> int:
        """Number of lattice sites with both a_n and b_n tabulated"""
        return int(min(self.a_table.size, self.b_table.size))

    def describe(self) -> Dict[str, Any]:
        return {
            'a': self.a_table.tolist(),
            'b': self.b_table.tolist(),
            'a_edge': self.a_edge,
            'start_index': self.start_index,
        }

    def __repr__(self) -> str:
        return f"TabulatedModel(size={self.size}, start_index={self.start_index})"
