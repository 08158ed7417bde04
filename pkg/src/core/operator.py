# Jacobi operator actions and finite sections
# Exact (B - lambda) on finitely supported vectors, Dirichlet truncations,
# the (-1)^n conjugation and the weighted-pencil substitution

import logging
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence, Tuple, Union

import numpy as np

from coeffs.base import CoefficientModel
from coeffs.tabulated import TabulatedModel
from core.errors import IndexOutOfRange, NonPositiveWeight, SupportOutOfRange
from core.recurrence import EQ1, EQ2, check_form, toggle_form

logger = logging.getLogger(__name__)

SequenceLike = Union[Sequence[float], np.ndarray, Callable]


@dataclass(frozen=True)
class SparseVector:
    """Vector with values on the sites start .. start + len(values) - 1, zero elsewhere"""
    start: int
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size == 0:
            raise SupportOutOfRange("sparse vector needs at least one site")
        if not np.all(np.isfinite(values)):
            raise SupportOutOfRange("sparse vector values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'start', int(self.start))

    @property
    def end(self) -> int:
        """Last site of the support"""
        return self.start + self.values.size - 1

    @property
    def support(self) -> Tuple[int, int]:
        return self.start, self.end

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_dense(self, lo: int, size: int) -> np.ndarray:
        """Dense copy on the sites lo .. lo + size - 1"""
        out = np.zeros(size)
        first = max(self.start, lo)
        last = min(self.end, lo + size - 1)
        if first <= last:
            out[first - lo:last - lo + 1] = self.values[first - self.start:last - self.start + 1]
        return out


@dataclass(frozen=True)
class FiniteSection:
    """Symmetric tridiagonal Dirichlet truncation on sites start .. start + N - 1"""
    start_index: int
    diag: np.ndarray
    offdiag: np.ndarray
    form: str

    def __post_init__(self):
        check_form(self.form)
        diag = np.array(self.diag, dtype=float)
        offdiag = np.array(self.offdiag, dtype=float)
        if offdiag.size != max(diag.size - 1, 0):
            raise ValueError("offdiag must have N - 1 entries")
        diag.setflags(write=False)
        offdiag.setflags(write=False)
        object.__setattr__(self, 'diag', diag)
        object.__setattr__(self, 'offdiag', offdiag)

    @property
    def N(self) -> int:
        return int(self.diag.size)

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)

    def gershgorin(self) -> Tuple[float, float]:
        """Interval containing every eigenvalue"""
        radius = np.zeros(self.N)
        radius[:-1] += np.abs(self.offdiag)
        radius[1:] += np.abs(self.offdiag)
        return float(np.min(self.diag - radius)), float(np.max(self.diag + radius))

    def rows(self) -> Iterator[Tuple[int, float, float]]:
        """CSV rows (n, diag, offdiag); the last offdiag is nan"""
        for k in range(self.N):
            off = float(self.offdiag[k]) if k < self.N - 1 else float('nan')
            yield self.start_index + k, float(self.diag[k]), off


def lagged_a(model: CoefficientModel, lo: int, hi: int) -> np.ndarray:
    """a_{n-1} for n in [lo, hi), with the Dirichlet edge at the lattice start"""
    if lo == model.start_index:
        return np.concatenate(([model.edge_a()], model.a_values(lo, hi - 1)))
    return model.a_values(lo - 1, hi - 1)


def apply(model: CoefficientModel, w: SparseVector, lam: float, form: str = EQ1) -> SparseVector:
    """Exact (B - lam) w; the support grows by one site on each side"""
    check_form(form)
    if w.start < model.start_index:
        raise SupportOutOfRange(f"support starts at {w.start}, below lattice start {model.start_index}")

    lo = max(w.start - 1, model.start_index)
    hi = w.end + 1
    # padded[k] holds w at site lo - 1 + k
    padded = np.zeros(hi - lo + 3)
    offset = w.start - lo + 1
    padded[offset:offset + w.values.size] = w.values

    try:
        a = model.a_values(lo, hi + 1)
        a_prev = lagged_a(model, lo, hi + 1)
        d = model.diagonal(lo, hi + 1)
    except IndexOutOfRange as e:
        raise SupportOutOfRange(f"support [{w.start}, {w.end}] leaves the model range: {e}") from e

    off = -1.0 if form == EQ1 else 1.0
    result = off * (a * padded[2:] + a_prev * padded[:-2]) + (d - lam) * padded[1:-1]
    return SparseVector(lo, result)


def finite_section(model: CoefficientModel, N: int, form: str = EQ1) -> FiniteSection:
    """N x N Dirichlet truncation (y_{start-1} = y_{start+N} = 0)"""
    check_form(form)
    N = int(N)
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    start = model.start_index
    diag = model.diagonal(start, start + N)
    off = model.a_values(start, start + N - 1) if N > 1 else np.zeros(0)
    if form == EQ1:
        off = -off
    return FiniteSection(start, diag, off, form)


def gauge_conjugate(sec: FiniteSection) -> FiniteSection:
    """Conjugate by diag((-1)^n): off-diagonal signs flip, spectrum unchanged"""
    return FiniteSection(sec.start_index, sec.diag.copy(), -sec.offdiag, toggle_form(sec.form))


def _sample(seq: SequenceLike, n: np.ndarray, start: int, name: str) -> np.ndarray:
    if callable(seq):
        return np.asarray(seq(n), dtype=float).reshape(-1)
    values = np.asarray(seq, dtype=float).reshape(-1)
    k = n - start
    if k.min() < 0 or k.max() >= values.size:
        raise IndexOutOfRange(f"{name} table does not cover sites [{n.min()}, {n.max()}]")
    return values[k]


def hinton_lewis(p: SequenceLike, q: SequenceLike, c: SequenceLike, N: int,
                 start_index: int = 1) -> TabulatedModel:
    """Standard-form model of -p_n y_{n+1} + q_n y_n - p_{n-1} y_{n-1} = lambda c_n y_n

    a_n = p_n / sqrt(c_n c_{n+1}) and diagonal q_n / c_n on N sites from
    start_index. Tables are indexed from start_index; callables receive n.
    The edge a_{start-1} is taken from callables when it is positive.
    """
    N = int(N)
    n = np.arange(start_index, start_index + N + 1)
    c_values = _sample(c, n, start_index, 'c')
    bad = ~(np.isfinite(c_values) & (c_values > 0))
    if bad.any():
        k = int(n[np.argmax(bad)])
        raise NonPositiveWeight(f"c_{k} = {c_values[k - start_index]!r} is not positive", index=k)

    p_values = _sample(p, n[:N], start_index, 'p')
    q_values = _sample(q, n[:N], start_index, 'q')
    a_tilde = p_values / np.sqrt(c_values[:-1] * c_values[1:])
    diagonal = q_values / c_values[:-1]

    edge = 0.0
    if callable(p) and callable(c):
        below = np.array([start_index - 1])
        with np.errstate(invalid='ignore', divide='ignore'):
            c_edge = float(np.asarray(c(below), dtype=float).reshape(-1)[0])
            p_edge = float(np.asarray(p(below), dtype=float).reshape(-1)[0])
            if c_edge > 0 and p_edge > 0:
                edge = p_edge / np.sqrt(c_edge * c_values[0])
    logger.debug(f"hinton_lewis: N={N}, start={start_index}, edge={edge}")
    return TabulatedModel(a_tilde, a_edge=float(edge), start_index=start_index, diagonal=diagonal)


def standard_to_weighted(values: np.ndarray, c: SequenceLike, start_index: int = 1) -> np.ndarray:
    """y_n = y~_n / sqrt(c_n) for values indexed from start_index"""
    values = np.asarray(values, dtype=float)
    n = np.arange(start_index, start_index + values.size)
    return values / np.sqrt(_sample(c, n, start_index, 'c'))


def weighted_to_standard(values: np.ndarray, c: SequenceLike, start_index: int = 1) -> np.ndarray:
    """y~_n = sqrt(c_n) y_n for values indexed from start_index"""
    values = np.asarray(values, dtype=float)
    n = np.arange(start_index, start_index + values.size)
    return values * np.sqrt(_sample(c, n, start_index, 'c'))
