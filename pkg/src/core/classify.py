# Standing-hypothesis checks for coefficient models
# Ratio bound on Delta a, exponential growth of sum a^2, and a Carleman-type
# limit-point test

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from coeffs.base import CoefficientModel

logger = logging.getLogger(__name__)

DEFAULT_C1_CAP = 10.0
DEFAULT_MIN_SUM = 10.0
DEFAULT_MIN_DECADE_INCREASE = 1.0
# tail slope of log prefix sums may exceed gamma_hat by this much (relative, absolute)
GROWTH_SLACK = (0.05, 1e-3)

YES_BY_CARLEMAN = 'yes_by_carleman'
INCONCLUSIVE = 'inconclusive'


def _check_range(n0: int, N: int) -> None:
    if not N > n0 + 1:
        raise ValueError(f"need N > n0 + 1, got n0={n0}, N={N}")


def _dyadic_maxima(offsets: np.ndarray, values: np.ndarray) -> List[float]:
    """max of values over offsets in [2^j, 2^{j+1}) for consecutive j"""
    blocks = np.floor(np.log2(offsets)).astype(np.int64)
    maxima = []
    for j in range(int(blocks.min()), int(blocks.max()) + 1):
        inside = values[blocks == j]
        if inside.size:
            maxima.append(float(np.max(inside)))
    return maxima


@dataclass(frozen=True)
class DeltaACheck:
    """max over (n0, N] of |Delta a_{n-1}| / a_{n-1}"""
    C1_hat: float
    first_violation: Optional[int]
    growing_tail: bool
    block_maxima: List[float] = field(default_factory=list)
    c1_cap: float = DEFAULT_C1_CAP

    @property
    def ok(self) -> bool:
        return self.first_violation is None


def check_delta_a(model: CoefficientModel, n0: int, N: int, c1_cap: float = DEFAULT_C1_CAP) -> DeltaACheck:
    """Measure C1 with |a_n - a_{n-1}| <= C1 a_{n-1} for n0 < n <= N

    Ratios are formed as expm1(log a_n - log a_{n-1}) so families whose
    values overflow still give finite (or infinite, never nan) ratios.
    first_violation is the first n whose ratio exceeds c1_cap; growing_tail
    flags dyadic block maxima that keep increasing to the end of the range.
    """
    n0, N = int(n0), int(N)
    _check_range(n0, N)
    log_a = model.log_a_values(n0, N + 1)
    with np.errstate(over='ignore'):
        ratio = np.abs(np.expm1(np.diff(log_a)))
    n = np.arange(n0 + 1, N + 1)

    C1_hat = float(np.max(ratio))
    over = ratio > c1_cap
    first_violation = int(n[np.argmax(over)]) if over.any() else None

    # trend on the log increments, which stay finite when the ratios overflow
    maxima = _dyadic_maxima((n - n0).astype(float), np.abs(np.diff(log_a)))
    growing = len(maxima) >= 2 and bool(np.all(np.diff(maxima[-3:]) > 0))

    logger.debug(f"check_delta_a: C1_hat={C1_hat:.6g}, first_violation={first_violation}, growing={growing}")
    return DeltaACheck(C1_hat, first_violation, growing, maxima, float(c1_cap))


@dataclass(frozen=True)
class GammaFit:
    """sum_{k=n0+1}^{n} a_{k-1}^2 <= L e^{gamma n} on n0 < n <= N"""
    gamma_hat: float
    log_L_hat: float
    tail_slope: float
    growth_ok: bool

    @property
    def L_hat(self) -> float:
        return math.exp(self.log_L_hat) if self.log_L_hat < 709 else math.inf


def fit_gamma(model: CoefficientModel, n0: int, N: int) -> GammaFit:
    """Least-squares slope of log prefix sums of a^2, lifted to a majorant

    growth_ok requires the slope over the last quarter of the range to stay
    within GROWTH_SLACK of gamma_hat, so super-exponential prefix sums, whose
    slope keeps rising, are rejected.
    """
    n0, N = int(n0), int(N)
    _check_range(n0, N)
    log_S = np.logaddexp.accumulate(2.0 * model.log_a_values(n0, N))
    n = np.arange(n0 + 1, N + 1, dtype=float)

    gamma_hat = max(0.0, float(np.polyfit(n, log_S, 1)[0]))
    log_L = float(np.max(log_S - gamma_hat * n))

    tail = slice(max(0, (3 * n.size) // 4 - 1), n.size)
    tail_slope = float(np.polyfit(n[tail], log_S[tail], 1)[0]) if n[tail].size >= 2 else gamma_hat
    rel, absolute = GROWTH_SLACK
    growth_ok = bool(np.isfinite(gamma_hat) and tail_slope <= gamma_hat * (1.0 + rel) + absolute)

    logger.debug(f"fit_gamma: gamma_hat={gamma_hat:.6g}, log_L={log_L:.6g}, tail_slope={tail_slope:.6g}")
    return GammaFit(gamma_hat, log_L, tail_slope, growth_ok)


@dataclass(frozen=True)
class CarlemanVerdict:
    verdict: str
    partial_sum: float
    decade_increase: float
    N: int


def carleman(model: CoefficientModel, N: int, min_sum: float = DEFAULT_MIN_SUM,
             min_decade_increase: float = DEFAULT_MIN_DECADE_INCREASE) -> CarlemanVerdict:
    """Sum of 1/a_n over the first N sites as a divergence heuristic

    yes_by_carleman when the partial sum exceeds min_sum and grew by more
    than min_decade_increase over the last decade of indices. Never reports
    limit-circle.
    """
    N = int(N)
    if N < 2:
        raise ValueError(f"N must be at least 2, got {N}")
    start = model.start_index
    with np.errstate(under='ignore'):
        inverse = np.exp(-model.log_a_values(start, start + N))
    sums = np.cumsum(inverse)
    total = float(sums[-1])
    decade = N // 10
    increase = total - (float(sums[decade - 1]) if decade >= 1 else 0.0)

    verdict = YES_BY_CARLEMAN if total > min_sum and increase > min_decade_increase else INCONCLUSIVE
    logger.debug(f"carleman: sum={total:.6g}, decade_increase={increase:.6g}, verdict={verdict}")
    return CarlemanVerdict(verdict, total, increase, N)


REPORT_HEADER = ('n0', 'N', 'C1_hat', 'C1_ok', 'first_violation', 'gamma_hat', 'log_L_hat',
                 'growth_ok', 'carleman_sum', 'limit_point', 'eligible')


@dataclass(frozen=True)
class HypothesisReport:
    n0: int
    C1_hat: float
    C1_ok: bool
    first_violation: Optional[int]
    gamma_hat: float
    log_L_hat: float
    growth_ok: bool
    limit_point: str
    tested_range: Tuple[int, int]
    carleman_sum: float = 0.0
    growing_tail: bool = False
    model: Dict = field(default_factory=dict)

    @property
    def L_hat(self) -> float:
        return math.exp(self.log_L_hat) if self.log_L_hat < 709 else math.inf

    @property
    def eligible(self) -> bool:
        """All hypotheses of the bounded-solution theorems hold on the tested range"""
        return self.C1_ok and self.growth_ok and self.limit_point == YES_BY_CARLEMAN

    def row(self) -> Tuple:
        return (self.n0, self.tested_range[1], self.C1_hat, int(self.C1_ok),
                '' if self.first_violation is None else self.first_violation,
                self.gamma_hat, self.log_L_hat, int(self.growth_ok), self.carleman_sum,
                self.limit_point, int(self.eligible))

    def to_text(self) -> str:
        """Flat key=value block"""
        pairs = [
            ('family', self.model.get('family', '')),
            ('n0', self.n0),
            ('tested_range', f"{self.tested_range[0]}..{self.tested_range[1]}"),
            ('C1_hat', repr(self.C1_hat)),
            ('C1_ok', str(self.C1_ok).lower()),
            ('first_violation', 'none' if self.first_violation is None else self.first_violation),
            ('growing_tail', str(self.growing_tail).lower()),
            ('gamma_hat', repr(self.gamma_hat)),
            ('log_L_hat', repr(self.log_L_hat)),
            ('growth_ok', str(self.growth_ok).lower()),
            ('carleman_sum', repr(self.carleman_sum)),
            ('limit_point', self.limit_point),
            ('eligible', str(self.eligible).lower()),
        ]
        return ''.join(f"{key}={value}\n" for key, value in pairs)


def hypothesis_report(model: CoefficientModel, n0: Optional[int] = None, N: int = 10000,
                      c1_cap: float = DEFAULT_C1_CAP, min_sum: float = DEFAULT_MIN_SUM,
                      min_decade_increase: float = DEFAULT_MIN_DECADE_INCREASE) -> HypothesisReport:
    """Run check_delta_a, fit_gamma and carleman; n0 defaults to start_index + 1"""
    n0 = model.start_index + 1 if n0 is None else int(n0)
    N = int(N)
    delta = check_delta_a(model, n0, N, c1_cap)
    growth = fit_gamma(model, n0, N)
    limit = carleman(model, N, min_sum, min_decade_increase)

    report = HypothesisReport(
        n0=n0,
        C1_hat=delta.C1_hat,
        C1_ok=delta.ok,
        first_violation=delta.first_violation,
        gamma_hat=growth.gamma_hat,
        log_L_hat=growth.log_L_hat,
        growth_ok=growth.growth_ok,
        limit_point=limit.verdict,
        tested_range=(n0 + 1, N),
        carleman_sum=limit.partial_sum,
        growing_tail=delta.growing_tail,
        model={'family': model.kind, 'params': list(model.params), 'start_index': model.start_index},
    )
    logger.info(f"Hypothesis report for {model!r}: eligible={report.eligible}")
    return report
