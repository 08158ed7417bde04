# Sturm-sequence bisection for symmetric tridiagonal sections
# Eigenvalue brackets, spectral distance and gap diagnostics

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from core.errors import EmptySpectrum
from core.operator import FiniteSection
from utils.pool import map_ordered

logger = logging.getLogger(__name__)

DEFAULT_RELATIVE_TOL = 1e-10
# brackets are narrowed to tol / BRACKET_REFINEMENT
BRACKET_REFINEMENT = 16.0
SAFE_MIN = float(np.finfo(float).tiny)


@dataclass(frozen=True)
class SpectrumApproximation:
    """Sorted eigenvalues of a finite section

    eigenvalues[i] is the (first_index + i)-th smallest eigenvalue; a full
    spectrum has first_index = 0 and N entries.
    """
    N: int
    eigenvalues: np.ndarray
    tol: float
    first_index: int = 0

    def __post_init__(self):
        values = np.array(self.eigenvalues, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, 'eigenvalues', values)

    def __len__(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def complete(self) -> bool:
        return self.first_index == 0 and len(self) == self.N

    def rows(self) -> Iterator[Tuple[int, float]]:
        """CSV rows (k, lambda_k) with k counted from 1"""
        for i, value in enumerate(self.eigenvalues):
            yield self.first_index + i + 1, float(value)


def _pivmin(sec: FiniteSection) -> float:
    scale = max(1.0, float(np.max(np.abs(sec.offdiag)))) if sec.N > 1 else 1.0
    # scale**2 itself may overflow
    return SAFE_MIN * scale * scale


def count_below(sec: FiniteSection, x: float) -> int:
    """Number of eigenvalues strictly below x

    Uses the pivots q_i = d_i - x - e_{i-1} * (e_{i-1} / q_{i-1}), i.e. ratios
    of consecutive leading minors of sec - x. e_{i-1}^2 is never formed, so
    off-diagonals up to the float range are handled. A zero pivot is
    replaced by +pivmin; an infinite pivot is kept.
    """
    diag = np.asarray(sec.diag, dtype=float)
    off = np.asarray(sec.offdiag, dtype=float)
    return int(sturm_counts(diag, off, np.array([float(x)]), _pivmin(sec))[0])


def sturm_counts(diag: np.ndarray, off: np.ndarray, xs: np.ndarray, pivmin: float) -> np.ndarray:
    """count_below evaluated at every shift in xs at once"""
    xs = np.asarray(xs, dtype=float)
    counts = np.zeros(xs.shape, dtype=np.int64)
    q = diag[0] - xs
    with np.errstate(over='ignore', divide='ignore'):
        for i in range(diag.size):
            if i > 0:
                q = diag[i] - xs - off[i - 1] * (off[i - 1] / q)
            small = np.abs(q) < pivmin
            if small.any():
                q = np.where(small, np.where(q < 0, -pivmin, pivmin), q)
            counts += q < 0
    return counts


def _bisect(diag: np.ndarray, off: np.ndarray, pivmin: float, lower: float, upper: float,
            iterations: int, indices: np.ndarray) -> np.ndarray:
    """Fixed-schedule bisection of the eigenvalues with the given 0-based indices"""
    lo = np.full(indices.size, lower)
    hi = np.full(indices.size, upper)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        above = sturm_counts(diag, off, mid, pivmin) > indices
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return 0.5 * (lo + hi)


def _bisect_task(args) -> np.ndarray:
    return _bisect(*args)


def default_tol(sec: FiniteSection) -> float:
    """1e-10 * max(1, Gershgorin spectral radius)"""
    lower, upper = sec.gershgorin()
    return DEFAULT_RELATIVE_TOL * max(1.0, abs(lower), abs(upper))


def eigenvalues(sec: FiniteSection, tol: Optional[float] = None,
                window: Optional[Tuple[float, float]] = None,
                workers: int = 1) -> SpectrumApproximation:
    """All eigenvalues (or those in [lo, hi)) by bisection on count_below

    Every eigenvalue is bracketed independently from the Gershgorin interval
    with the same number of halvings, so results do not depend on how the
    index range is split between workers.
    """
    if tol is None:
        tol = default_tol(sec)
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")

    lower, upper = sec.gershgorin()
    pad = tol + 4.0 * np.finfo(float).eps * max(1.0, abs(lower), abs(upper))
    lower, upper = lower - pad, upper + pad

    if window is None:
        first, last = 0, sec.N
    else:
        first, last = count_below(sec, window[0]), count_below(sec, window[1])
    indices = np.arange(first, last)
    if indices.size == 0:
        return SpectrumApproximation(sec.N, np.zeros(0), float(tol), first)

    width = upper - lower
    iterations = max(1, int(math.ceil(math.log2(width * BRACKET_REFINEMENT / tol))))
    diag = np.asarray(sec.diag, dtype=float)
    off = np.asarray(sec.offdiag, dtype=float)
    pivmin = _pivmin(sec)

    chunks = [chunk for chunk in np.array_split(indices, max(1, int(workers))) if chunk.size]
    tasks = [(diag, off, pivmin, lower, upper, iterations, chunk) for chunk in chunks]
    parts = map_ordered(_bisect_task, tasks, workers)
    values = np.sort(np.concatenate(parts))

    logger.debug(f"eigenvalues: N={sec.N}, indices=[{first}, {last}), iterations={iterations}")
    return SpectrumApproximation(sec.N, values, float(tol), first)


def spectral_distance(spec: SpectrumApproximation, lam: float) -> float:
    """min_k |lam - lambda_k|"""
    if len(spec) == 0:
        raise EmptySpectrum("spectral distance of an empty spectrum")
    values = spec.eigenvalues
    k = int(np.searchsorted(values, lam))
    candidates = values[max(k - 1, 0):k + 1]
    return float(np.min(np.abs(candidates - lam)))


def spectrum_gaps(spec: SpectrumApproximation, window: Tuple[float, float]) -> float:
    """Largest gap between consecutive eigenvalues in [lo, hi], window edges included"""
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError(f"window must satisfy lo < hi, got {window}")
    values = spec.eigenvalues
    inside = values[(values >= lo) & (values <= hi)]
    points = np.concatenate(([lo], inside, [hi]))
    return float(np.max(np.diff(points)))


def counting_function(spec: SpectrumApproximation, x: float) -> int:
    """Number of approximate eigenvalues <= x"""
    return spec.first_index + int(np.searchsorted(spec.eigenvalues, x, side='right'))
