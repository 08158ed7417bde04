# Coefficient perturbations and essential-spectrum experiments
# a' = a + eta, b' = b + psi in self-adjoint form, the hypothesis checks for
# invariance of the essential spectrum, and window-clipped spectral comparisons

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from coeffs.base import CoefficientModel
from core.eigen import SpectrumApproximation, eigenvalues
from core.errors import PositivityViolated
from core.operator import FiniteSection, finite_section
from core.recurrence import EQ2
from utils.pool import map_ordered

logger = logging.getLogger(__name__)

PerturbationSequence = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PowerSequence:
    """n -> amplitude * (n + shift)^exponent; identically zero when amplitude is 0"""
    amplitude: float = 0.0
    exponent: float = 0.0
    shift: float = 0.0

    def __call__(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if self.amplitude == 0.0:
            return np.zeros(n.shape)
        with np.errstate(divide='ignore', invalid='ignore'):
            return self.amplitude * np.power(n + self.shift, self.exponent)

    @classmethod
    def from_dict(cls, spec) -> 'PowerSequence':
        if isinstance(spec, (int, float)):
            return cls(float(spec), 0.0, 0.0)
        return cls(float(spec.get('amplitude', 0.0)), float(spec.get('exponent', 0.0)),
                   float(spec.get('shift', 0.0)))

    def to_dict(self):
        return {'amplitude': self.amplitude, 'exponent': self.exponent, 'shift': self.shift}


ZERO = PowerSequence()


def power_sequence(amplitude: float, exponent: float = 0.0, shift: float = 0.0) -> PowerSequence:
    return PowerSequence(float(amplitude), float(exponent), float(shift))


@dataclass(frozen=True)
class PerturbationPair:
    """Base model with eta_n added to a_n and psi_n added to b_n"""
    base: CoefficientModel
    eta: PerturbationSequence = ZERO
    psi: PerturbationSequence = ZERO
    alpha: float = 1.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


class PerturbedModel(CoefficientModel):
    """Coefficients of the perturbed equation

    eta acts on a_n for n >= start_index; the Dirichlet edge a_{start-1}
    is the base model's.
    """

    kind = 'perturbed'

    def __init__(self, pair: PerturbationPair):
        super().__init__(pair.base.params, pair.base.start_index)
        self.pair = pair

    def _raw_a(self, n: np.ndarray) -> np.ndarray:
        return self.pair.base._raw_a(n) + self.pair.eta(n)

    def _raw_b(self, n: np.ndarray) -> np.ndarray:
        return self.pair.base._raw_b(n) + self.pair.psi(n)

    def edge_a(self) -> float:
        return self.pair.base.edge_a()

    def describe(self):
        description = {'family': self.kind, 'base': self.pair.base.describe()}
        for name in ('eta', 'psi'):
            sequence = getattr(self.pair, name)
            if isinstance(sequence, PowerSequence):
                description[name] = sequence.to_dict()
        return description


def _check_positive(pair: PerturbationPair, lo: int, hi: int) -> np.ndarray:
    n = np.arange(lo, hi)
    shifted = pair.base.a_values(lo, hi) + pair.eta(n)
    bad = ~(np.isfinite(shifted) & (shifted > 0))
    if bad.any():
        k = int(n[np.argmax(bad)])
        raise PositivityViolated(f"a_{k} + eta_{k} = {shifted[k - lo]!r} is not positive", index=k)
    return shifted


def perturbed_model(pair: PerturbationPair) -> PerturbedModel:
    return PerturbedModel(pair)


def _decreasing_to_zero(maxima: List[float]) -> bool:
    """Dyadic block maxima that vanish or shrink from the first block to the last"""
    values = np.asarray(maxima, dtype=float)
    if values.size == 0 or np.all(values == 0):
        return True
    if not np.all(np.isfinite(values)):
        return False
    tail = values[-4:]
    return bool(values[-1] < values[0] and np.all(np.diff(tail) <= 0))


def _block_maxima(values: np.ndarray) -> List[float]:
    offsets = np.arange(1, values.size + 1)
    blocks = np.floor(np.log2(offsets)).astype(np.int64)
    return [float(np.max(values[blocks == j])) for j in range(int(blocks.max()) + 1)]


@dataclass(frozen=True)
class PerturbationVerdict:
    alpha_index: Optional[int]
    eta_block_maxima: List[float]
    psi_block_maxima: List[float]
    eta_decreasing: bool
    psi_decreasing: bool
    tested_range: Tuple[int, int]
    eta_ratio: np.ndarray = field(repr=False, compare=False, default=None)
    psi_ratio: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def alpha_ok(self) -> bool:
        return self.alpha_index is not None

    @property
    def satisfied(self) -> bool:
        return self.alpha_ok and self.eta_decreasing and self.psi_decreasing

    def to_text(self) -> str:
        pairs = [
            ('tested_range', f"{self.tested_range[0]}..{self.tested_range[1]}"),
            ('alpha_index', 'none' if self.alpha_index is None else self.alpha_index),
            ('eta_decreasing', str(self.eta_decreasing).lower()),
            ('psi_decreasing', str(self.psi_decreasing).lower()),
            ('eta_last_block_max', repr(self.eta_block_maxima[-1])),
            ('psi_last_block_max', repr(self.psi_block_maxima[-1])),
            ('satisfied', str(self.satisfied).lower()),
        ]
        return ''.join(f"{key}={value}\n" for key, value in pairs)


def check_theorem5_hypotheses(pair: PerturbationPair, N: int) -> PerturbationVerdict:
    """Check b_n >= alpha eventually, eta/a -> 0, psi/b -> 0 and a + eta > 0 on N sites

    alpha_index is the first site past which b_n >= alpha holds to the end
    of the tested range, None when it fails at the last site. Ratio maxima
    are taken over dyadic blocks of sites counted from the lattice start.
    """
    N = int(N)
    if N < 16:
        raise ValueError(f"N must be at least 16, got {N}")
    lo = pair.base.start_index
    hi = lo + N
    n = np.arange(lo, hi)
    _check_positive(pair, lo, hi)

    a = pair.base.a_values(lo, hi)
    b = pair.base.b_values(lo, hi)
    below = b < pair.alpha
    if below[-1]:
        alpha_index = None
    elif below.any():
        alpha_index = int(n[np.nonzero(below)[0][-1]] + 1)
    else:
        alpha_index = lo

    with np.errstate(divide='ignore', invalid='ignore'):
        eta_ratio = np.abs(pair.eta(n) / a)
        psi = np.abs(pair.psi(n))
        psi_ratio = np.where(psi == 0, 0.0, psi / np.abs(b))
    eta_max = _block_maxima(eta_ratio)
    psi_max = _block_maxima(psi_ratio)

    verdict = PerturbationVerdict(
        alpha_index=alpha_index,
        eta_block_maxima=eta_max,
        psi_block_maxima=psi_max,
        eta_decreasing=_decreasing_to_zero(eta_max),
        psi_decreasing=_decreasing_to_zero(psi_max),
        tested_range=(lo, hi - 1),
        eta_ratio=eta_ratio,
        psi_ratio=psi_ratio,
    )
    logger.debug(f"check_theorem5_hypotheses: N={N}, satisfied={verdict.satisfied}")
    return verdict


def window_hausdorff(first: np.ndarray, second: np.ndarray, window: Tuple[float, float]) -> float:
    """Hausdorff distance of two eigenvalue sets clipped to window

    Each clipped point is measured against the other set in full; two empty
    clipped sets are at distance 0, and a clipped point facing an empty set is at inf.
    """
    lo, hi = window
    first = np.sort(np.asarray(first, dtype=float))
    second = np.sort(np.asarray(second, dtype=float))
    clipped_first = first[(first >= lo) & (first <= hi)]
    clipped_second = second[(second >= lo) & (second <= hi)]
    if clipped_first.size == 0 and clipped_second.size == 0:
        return 0.0

    def one_sided(points: np.ndarray, other: np.ndarray) -> float:
        if points.size == 0:
            return 0.0
        if other.size == 0:
            return float('inf')
        k = np.searchsorted(other, points)
        left = other[np.clip(k - 1, 0, other.size - 1)]
        right = other[np.clip(k, 0, other.size - 1)]
        return float(np.max(np.minimum(np.abs(points - left), np.abs(points - right))))

    return max(one_sided(clipped_first, second), one_sided(clipped_second, first))


def counting_discrepancy(first: np.ndarray, second: np.ndarray, window: Tuple[float, float]) -> int:
    """max over x in window of |#{first <= x} - #{second <= x}|"""
    lo, hi = window
    first = np.sort(np.asarray(first, dtype=float))
    second = np.sort(np.asarray(second, dtype=float))
    points = np.concatenate(([lo], first[(first >= lo) & (first <= hi)], second[(second >= lo) & (second <= hi)]))
    count_first = np.searchsorted(first, points, side='right')
    count_second = np.searchsorted(second, points, side='right')
    return int(np.max(np.abs(count_first - count_second)))


def _sections(pair: PerturbationPair, N: int) -> Tuple[FiniteSection, FiniteSection]:
    _check_positive(pair, pair.base.start_index, pair.base.start_index + int(N))
    return finite_section(pair.base, N, EQ2), finite_section(perturbed_model(pair), N, EQ2)


def weyl_bound(pair: PerturbationPair, N: int) -> float:
    """Max row sum of |T' - T| for the N x N sections; bounds every eigenvalue shift"""
    base, perturbed = _sections(pair, N)
    diag = np.abs(perturbed.diag - base.diag)
    off = np.abs(perturbed.offdiag - base.offdiag)
    rows = diag.copy()
    rows[:-1] += off
    rows[1:] += off
    return float(np.max(rows))


@dataclass(frozen=True)
class ComparisonRow:
    N: int
    hausdorff: float
    counting_discrepancy: int
    base: SpectrumApproximation = field(repr=False, compare=False)
    perturbed: SpectrumApproximation = field(repr=False, compare=False)

    def row(self) -> Tuple:
        return self.N, self.hausdorff, self.counting_discrepancy


COMPARISON_HEADER = ('N', 'hausdorff', 'counting_discrepancy')


def _compare_task(args) -> ComparisonRow:
    pair, N, window, tol = args
    base_sec, perturbed_sec = _sections(pair, N)
    base = eigenvalues(base_sec, tol)
    perturbed = eigenvalues(perturbed_sec, tol)
    return ComparisonRow(
        N=int(N),
        hausdorff=window_hausdorff(base.eigenvalues, perturbed.eigenvalues, window),
        counting_discrepancy=counting_discrepancy(base.eigenvalues, perturbed.eigenvalues, window),
        base=base,
        perturbed=perturbed,
    )


def essential_spectrum_compare(pair: PerturbationPair, N_list: Sequence[int], window: Tuple[float, float],
                               tol: Optional[float] = None, workers: int = 1) -> List[ComparisonRow]:
    """Window-clipped comparison of base and perturbed section spectra per N

    A trend, not a verdict: shrinking distances along N are evidence that the
    essential spectra agree inside the window.
    """
    N_list = [int(N) for N in N_list]
    if not N_list:
        raise ValueError("N_list must be nonempty")
    if any(later <= earlier for earlier, later in zip(N_list, N_list[1:])):
        raise ValueError(f"N_list must be increasing, got {N_list}")
    lo, hi = float(window[0]), float(window[1])
    if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
        raise ValueError(f"window must be bounded with lo < hi, got {window}")

    rows = map_ordered(_compare_task, [(pair, N, (lo, hi), tol) for N in N_list], workers)
    for row in rows:
        logger.debug(f"essential_spectrum_compare: N={row.N}, hausdorff={row.hausdorff:.6g}, "
                     f"counting={row.counting_discrepancy}")
    return rows
