# Weyl certificates from windowed solutions
# Cutoff windows, exact commutator residuals, the tail weight F(r), pigeonhole
# indices and the a-priori difference inequality

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from coeffs.base import CoefficientModel
from core.errors import BadGeometry, HypothesisViolated, MarginTooSmall, ZeroVector
from core.operator import SparseVector, apply, lagged_a
from core.recurrence import RecurrenceSolution

logger = logging.getLogger(__name__)

SHARP = 'sharp'
LINEAR_TAPER = 'linear_taper'
COSINE_TAPER = 'cosine_taper'
# also the tie-break order of optimize_certificate
WINDOW_KINDS = (SHARP, LINEAR_TAPER, COSINE_TAPER)

DEFAULT_THRESHOLD = 1e-9
CERTIFICATE_MARGIN = 4


@dataclass(frozen=True)
class CutoffWindow:
    """v = 1 on [n0, r - W], tapering to 0 at r, and 0 outside [n0, r]"""
    kind: str
    n0: int
    r: int
    W: int = 0

    def values(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        inside = (n >= self.n0) & (n <= self.r)
        if self.kind == SHARP:
            return np.where(inside, 1.0, 0.0)
        t = np.clip((n - (self.r - self.W)) / self.W, 0.0, 1.0)
        if self.kind == LINEAR_TAPER:
            profile = 1.0 - t
        else:
            profile = 0.5 * (1.0 + np.cos(np.pi * t))
        return np.where(inside, profile, 0.0)


def make_window(kind: str, n0: int, r: int, W: int = 0) -> CutoffWindow:
    """Validated cutoff window; sharp windows have W = 0, tapers W >= 1"""
    if kind not in WINDOW_KINDS:
        raise BadGeometry(f"Unknown window kind: {kind}")
    n0, r, W = int(n0), int(r), int(W)
    if W < 0:
        raise BadGeometry(f"taper width must be nonnegative, got {W}")
    if (W == 0) != (kind == SHARP):
        raise BadGeometry(f"{kind} window cannot have W = {W}")
    if not r - max(W, 1) > n0:
        raise BadGeometry(f"need r - max(W, 1) > n0, got n0={n0}, r={r}, W={W}")
    return CutoffWindow(kind, n0, r, W)


@dataclass(frozen=True)
class WeylCertificate:
    """Finite-support w = v y with its exact residual

    w is normalised by the largest |y_n| on the window, so w_norm and
    residual_norm are relative to exp(log_reference); bound is scale free.
    """
    lam: float
    window: CutoffWindow
    w_norm: float
    residual_norm: float
    bound: float
    threshold: float
    dropped_norm: float
    log_reference: float
    residual: SparseVector = field(repr=False, compare=False)

    def row(self) -> Tuple:
        """CSV row (lambda, kind, n0, r, W, w_norm, residual_norm, bound, threshold)"""
        return (self.lam, self.window.kind, self.window.n0, self.window.r, self.window.W,
                self.w_norm, self.residual_norm, self.bound, self.threshold)


CERTIFICATE_HEADER = ('lambda', 'kind', 'n0', 'r', 'W', 'w_norm', 'residual_norm', 'bound', 'threshold')


def weyl_certificate(model: CoefficientModel, lam: float, sol: RecurrenceSolution,
                     window: CutoffWindow, threshold: float = DEFAULT_THRESHOLD) -> WeylCertificate:
    """Bound d(lam, sigma(B)) <= ||(B - lam) w|| / ||w|| for w = v y

    Sites where v is constant on n-1, n, n+1 carry only the floating-point
    cancellation of the recurrence there; entries below threshold times the
    local scale are zeroed at those sites only.
    """
    if window.n0 < sol.start_index:
        raise BadGeometry(f"window starts at {window.n0}, below solution start {sol.start_index}")
    if window.r + CERTIFICATE_MARGIN > sol.end_index:
        raise MarginTooSmall(
            f"window right edge {window.r} needs solution up to {window.r + CERTIFICATE_MARGIN}, "
            f"have {sol.end_index}"
        )

    i0 = window.n0 - sol.start_index
    i1 = window.r - sol.start_index + 1
    log_y = sol.log_abs()[i0:i1]
    finite = np.isfinite(log_y)
    if not finite.any():
        raise ZeroVector(f"solution vanishes on [{window.n0}, {window.r}]")
    reference = float(np.max(log_y[finite]))

    n = np.arange(window.n0, window.r + 1)
    w = window.values(n) * sol.values(reference)[i0:i1]
    w_norm = float(np.linalg.norm(w))
    if w_norm == 0.0:
        raise ZeroVector(f"windowed solution vanishes on [{window.n0}, {window.r}]")

    residual = apply(model, SparseVector(window.n0, w), lam, sol.form)
    res = np.array(residual.values)
    sites = np.arange(residual.start, residual.end + 1)

    # local scale |a_n w_{n+1}| + |a_{n-1} w_{n-1}| + |d_n w_n| + |lam w_n|
    padded = np.zeros(sites.size + 2)
    offset = window.n0 - residual.start + 1
    padded[offset:offset + w.size] = w
    a = model.a_values(residual.start, residual.end + 1)
    a_prev = lagged_a(model, residual.start, residual.end + 1)
    d = model.diagonal(residual.start, residual.end + 1)
    local = (np.abs(a * padded[2:]) + np.abs(a_prev * padded[:-2])
             + np.abs((np.abs(d) + abs(lam)) * padded[1:-1]))

    v_here = window.values(sites)
    v_next = window.values(sites + 1)
    v_prev = np.where(sites - 1 >= model.start_index, window.values(sites - 1), v_here)
    flat = (v_prev == v_here) & (v_here == v_next)
    drop = flat & (np.abs(res) <= threshold * local)
    dropped_norm = float(np.linalg.norm(res[drop]))
    res[drop] = 0.0

    residual_norm = float(np.linalg.norm(res))
    return WeylCertificate(
        lam=float(lam),
        window=window,
        w_norm=w_norm,
        residual_norm=residual_norm,
        bound=residual_norm / w_norm,
        threshold=float(threshold),
        dropped_norm=dropped_norm,
        log_reference=reference,
        residual=SparseVector(residual.start, res),
    )


def candidate_windows(n0: int, r_grid: Sequence[int], kinds: Sequence[str],
                      widths: Sequence[float] = (0.25, 0.5)) -> Iterator[CutoffWindow]:
    """Windows in tie-break order: r ascending, then sharp < linear < cosine, then W ascending"""
    ordered_kinds = [kind for kind in WINDOW_KINDS if kind in set(kinds)]
    unknown = set(kinds) - set(WINDOW_KINDS)
    if unknown:
        raise BadGeometry(f"Unknown window kinds: {sorted(unknown)}")
    for r in sorted(set(int(r) for r in r_grid)):
        for kind in ordered_kinds:
            if kind == SHARP:
                candidates = [0]
            else:
                candidates = sorted(set(int(r * fraction) for fraction in widths))
            for W in candidates:
                try:
                    yield make_window(kind, n0, r, W)
                except BadGeometry:
                    continue


def optimize_certificate(model: CoefficientModel, lam: float, sol: RecurrenceSolution,
                         r_grid: Sequence[int], kinds: Sequence[str],
                         n0: Optional[int] = None, widths: Sequence[float] = (0.25, 0.5),
                         threshold: float = DEFAULT_THRESHOLD) -> WeylCertificate:
    """Certificate with the smallest bound over r x kind x W"""
    if not r_grid or not kinds:
        raise BadGeometry("r_grid and kinds must be nonempty")
    n0 = sol.start_index if n0 is None else int(n0)

    best = None
    tried = 0
    for window in candidate_windows(n0, r_grid, kinds, widths):
        cert = weyl_certificate(model, lam, sol, window, threshold)
        tried += 1
        if best is None or cert.bound < best.bound:
            best = cert
    if best is None:
        raise BadGeometry(f"no valid window for n0={n0} in r_grid={list(r_grid)}")

    logger.debug(f"optimize_certificate: lam={lam}, tried={tried}, best={best.window}, bound={best.bound:.3e}")
    return best


@dataclass(frozen=True)
class TailWeight:
    """F(r) = sum_{n=n0+1}^{r} a_{n-1}^2 y_n^2 stored as log F for r = n0 .. n0 + len - 1"""
    n0: int
    log_values: np.ndarray

    def __post_init__(self):
        values = np.array(self.log_values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, 'log_values', values)

    @classmethod
    def from_values(cls, n0: int, values: Sequence[float]) -> 'TailWeight':
        with np.errstate(divide='ignore'):
            return cls(int(n0), np.log(np.asarray(values, dtype=float)))

    @property
    def r_max(self) -> int:
        return self.n0 + self.log_values.size - 1

    @property
    def F_values(self) -> np.ndarray:
        with np.errstate(over='ignore'):
            return np.exp(self.log_values)

    def log_F(self, r: int) -> float:
        if not self.n0 <= r <= self.r_max:
            raise BadGeometry(f"F({r}) outside computed range [{self.n0}, {self.r_max}]")
        return float(self.log_values[r - self.n0])


def tail_weight(model: CoefficientModel, sol: RecurrenceSolution, n0: int, r_max: int) -> TailWeight:
    """Prefix sums of a_{n-1}^2 y_n^2 in log space (log-sum-exp accumulation)"""
    n0, r_max = int(n0), int(r_max)
    if n0 < sol.start_index or r_max > sol.end_index or r_max < n0:
        raise BadGeometry(f"tail range [{n0}, {r_max}] outside solution [{sol.start_index}, {sol.end_index}]")

    log_y = sol.log_abs()[n0 + 1 - sol.start_index:r_max + 1 - sol.start_index]
    log_a = model.log_a_values(n0, r_max)
    terms = 2.0 * log_a + 2.0 * log_y
    log_F = np.concatenate(([-np.inf], np.logaddexp.accumulate(terms) if terms.size else []))
    return TailWeight(n0, log_F)


def pigeonhole_sequence(F: TailWeight, beta: float, delta1: float, r_min: int) -> List[int]:
    """Every r >= r_min with F(r + 4) < e^{2 beta + delta1} F(r - 2), strictly

    Only a finite prefix up to F's horizon can be searched.
    """
    if delta1 <= 0:
        raise ValueError(f"delta1 must be positive, got {delta1}")
    lo = max(int(r_min), F.n0 + 2)
    hi = F.r_max - 4
    if hi < lo:
        return []
    r = np.arange(lo, hi + 1)
    ahead = F.log_values[r + 4 - F.n0]
    behind = F.log_values[r - 2 - F.n0]
    ok = ahead < 2.0 * beta + delta1 + behind
    return [int(x) for x in r[ok]]


@dataclass(frozen=True)
class PigeonholeCertificate:
    """Sharp-window certificate at a pigeonhole index r_p"""
    r: int
    certificate: WeylCertificate
    budget: float


def pigeonhole_certificates(model: CoefficientModel, lam: float, sol: RecurrenceSolution,
                            beta: float, delta1: float, r_min: int, limit: int = 8,
                            n0: Optional[int] = None) -> List[PigeonholeCertificate]:
    """Sharp certificates at the first `limit` pigeonhole indices

    budget = e^{2 beta + delta1} - 1 is the shape the squared residual is
    compared against in the construction.
    """
    n0 = sol.start_index if n0 is None else int(n0)
    F = tail_weight(model, sol, n0, sol.end_index)
    indices = [r for r in pigeonhole_sequence(F, beta, delta1, r_min)
               if r + CERTIFICATE_MARGIN <= sol.end_index and r - 1 > n0]
    budget = math.expm1(2.0 * beta + delta1)
    return [
        PigeonholeCertificate(r, weyl_certificate(model, lam, sol, make_window(SHARP, n0, r)), budget)
        for r in indices[:int(limit)]
    ]


@dataclass(frozen=True)
class DifferenceBound:
    """Both sides of the a-priori bound on sum a_{k-1}^2 (Delta y_{k-1})^2"""
    lhs: float
    rhs: float
    holds: bool


def theorem4_check(a: Sequence[float], y: Sequence[float], C1: float, m: int, r: int, s: int,
                   n: int, rtol: float = 1e-12) -> DifferenceBound:
    """sum_{k=r}^{s} a_{k-1}^2 (Delta y_{k-1})^2 <= 2 (1 + (C1+1)^2) sum_{k=m-1}^{n} a_{k-1}^2 y_k^2

    Arrays are indexed by site: a[k] holds a_{k-1} and y[k] holds y_k.
    The ratio hypothesis |a_k - a_{k-1}| <= C1 a_{k-1} is checked for
    k = m-1 .. n-1.
    """
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    if not 1 <= m <= r <= s <= n:
        raise BadGeometry(f"need 1 <= m <= r <= s <= n, got m={m}, r={r}, s={s}, n={n}")
    if a.size < n + 1 or y.size < n + 1:
        raise BadGeometry(f"sequences must cover sites 0 .. {n}")
    if C1 < 0:
        raise ValueError(f"C1 must be nonnegative, got {C1}")

    weights = a[m - 1:n + 1]
    if np.any(weights <= 0):
        k = m - 1 + int(np.argmax(weights <= 0))
        raise HypothesisViolated(f"a_{k - 1} is not positive", index=k)
    step = np.abs(np.diff(weights))
    violated = step > C1 * weights[:-1]
    if violated.any():
        k = m - 1 + int(np.argmax(violated))
        raise HypothesisViolated(f"|Delta a_{k - 1}| > C1 a_{k - 1} at k = {k}", index=k)

    k = np.arange(r, s + 1)
    lhs = float(np.sum(a[k] ** 2 * (y[k] - y[k - 1]) ** 2))
    rhs = 2.0 * (1.0 + (C1 + 1.0) ** 2) * float(np.sum(a[m - 1:n + 1] ** 2 * y[m - 1:n + 1] ** 2))
    return DifferenceBound(lhs, rhs, lhs <= rhs * (1.0 + rtol))


CAMPAIGN_LENGTH = 64
# relative and absolute slack on C1 for windows rescaled in floating point
CAMPAIGN_SLACK = 1e-9


@dataclass(frozen=True)
class CampaignResult:
    """Randomized difference-bound checks on windows of one coefficient sequence"""
    seed: int
    trials: int
    violations: int
    worst_ratio: float

    @property
    def holds(self) -> bool:
        return self.violations == 0

    def to_text(self) -> str:
        pairs = [
            ('campaign_seed', self.seed),
            ('campaign_trials', self.trials),
            ('campaign_violations', self.violations),
            ('campaign_worst_ratio', repr(self.worst_ratio)),
        ]
        return ''.join(f"{key}={value}\n" for key, value in pairs)


def difference_bound_campaign(model: CoefficientModel, C1: float, lo: int, hi: int, trials: int,
                              seed: int = 0, length: int = CAMPAIGN_LENGTH) -> CampaignResult:
    """theorem4_check on random vectors over windows of a_lo .. a_hi

    Each trial draws length + 1 consecutive coefficients inside the range,
    rescaled so the largest is 1 (both sides of the bound scale alike), a
    standard normal y and a random geometry 1 <= m <= r <= s <= n <= length.
    The same seed replays the same trials.
    """
    lo, hi = int(lo), int(hi)
    length = min(int(length), hi - lo)
    if length < 1:
        raise BadGeometry(f"campaign range [{lo}, {hi}] is too short")
    if C1 < 0:
        raise ValueError(f"C1 must be nonnegative, got {C1}")

    rng = np.random.default_rng(seed)
    bound = C1 * (1.0 + CAMPAIGN_SLACK) + CAMPAIGN_SLACK
    log_a = model.log_a_values(lo, hi + 1)
    violations = 0
    worst = 0.0
    for _ in range(int(trials)):
        offset = int(rng.integers(0, log_a.size - length))
        window = log_a[offset:offset + length + 1]
        a = np.exp(window - np.max(window))
        y = rng.standard_normal(length + 1)
        m, r, s, n = (int(v) for v in np.sort(rng.integers(1, length + 1, size=4)))
        result = theorem4_check(a, y, bound, m, r, s, n)
        if not result.holds:
            violations += 1
        if result.rhs > 0:
            worst = max(worst, result.lhs / result.rhs)

    logger.debug(f"difference-bound campaign: seed={seed}, trials={trials}, violations={violations}")
    return CampaignResult(int(seed), int(trials), violations, worst)


def shnol_bound_curve(beta_grid: Sequence[float]) -> List[float]:
    """(e^{2 beta} - 1)^{1/2} per grid point"""
    betas = np.asarray(beta_grid, dtype=float)
    if np.any(betas < 0):
        raise ValueError("beta must be nonnegative")
    return np.sqrt(np.expm1(2.0 * betas)).tolist()


def shnol_ratio(distance: float, beta: float) -> float:
    """distance / (e^{2 beta} - 1)^{1/2}"""
    shape = math.sqrt(math.expm1(2.0 * beta))
    if shape == 0.0:
        return 0.0 if distance == 0.0 else math.inf
    return distance / shape
