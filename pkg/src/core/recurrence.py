# Forward solution of the three-term recurrence
# Overflow-safe mantissa/log-scale storage, the (-1)^n gauge, and growth-rate fits

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from coeffs.base import CoefficientModel
from core.errors import Breakdown, DegenerateWindow

logger = logging.getLogger(__name__)

RESCALE_CAP = 1e100
LN2 = math.log(2.0)

EQ1 = 'eq1'
EQ2 = 'eq2'
FORMS = (EQ1, EQ2)


def check_form(form: str) -> str:
    if form not in FORMS:
        raise ValueError(f"Unknown recurrence form: {form}")
    return form


def toggle_form(form: str) -> str:
    return EQ2 if check_form(form) == EQ1 else EQ1


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.asarray(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class RecurrenceSolution:
    """Solution y_n = mantissas[k] * exp(log_scales[k]) at n = start_index + k

    y_{start_index - 1} = 0 by convention.
    """
    lam: float
    form: str
    mantissas: np.ndarray
    log_scales: np.ndarray
    start_index: int

    def __post_init__(self):
        check_form(self.form)
        object.__setattr__(self, 'mantissas', _frozen(self.mantissas))
        object.__setattr__(self, 'log_scales', _frozen(self.log_scales))
        if self.mantissas.shape != self.log_scales.shape:
            raise ValueError("mantissas and log_scales must have equal length")

    @classmethod
    def from_log_values(cls, log_abs: Sequence[float], signs: Optional[Sequence[float]] = None,
                        lam: float = 0.0, form: str = EQ1, start_index: int = 0) -> 'RecurrenceSolution':
        """Build a solution object from log|y_n| (and optional signs)"""
        log_abs = np.asarray(log_abs, dtype=float)
        signs = np.ones_like(log_abs) if signs is None else np.sign(np.asarray(signs, dtype=float))
        mantissas = np.where(np.isfinite(log_abs), signs, 0.0)
        log_scales = np.where(np.isfinite(log_abs), log_abs, 0.0)
        return cls(float(lam), form, mantissas, log_scales, int(start_index))

    def __len__(self) -> int:
        return int(self.mantissas.size)

    @property
    def end_index(self) -> int:
        """Last lattice index carried by the solution"""
        return self.start_index + len(self) - 1

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start_index, self.start_index + len(self))

    def log_abs(self) -> np.ndarray:
        """log|y_n|, -inf where y_n = 0"""
        with np.errstate(divide='ignore'):
            return np.log(np.abs(self.mantissas)) + self.log_scales

    def values(self, reference: float = 0.0) -> np.ndarray:
        """y_n * exp(-reference); entries far below the reference underflow to 0"""
        with np.errstate(over='ignore', under='ignore'):
            return self.mantissas * np.exp(self.log_scales - reference)

    def rows(self) -> Iterator[Tuple[int, float, float, float]]:
        """CSV rows (n, mantissa, log_scale, log_abs_y)"""
        for n, m, s, log_y in zip(self.indices, self.mantissas, self.log_scales, self.log_abs()):
            yield int(n), float(m), float(s), float(log_y)


@dataclass(frozen=True)
class GrowthEstimate:
    """Fitted growth of a solution on an index window

    |y_n| <= C2 e^{beta n} and |y_n| <= C4 (n+1)^theta hold on the window;
    C3 is the prefactor for the fixed probe rate beta_probe.
    Prefactors are kept as logs since they overflow for fast-growing solutions.
    """
    beta_hat: float
    theta_hat: float
    log_C2_hat: float
    log_C3_hat: float
    log_C4_hat: float
    beta_probe: float
    fit_window: Tuple[int, int]
    residual_rms: float
    beta_rms: float
    theta_rms: float
    preferred: str

    @property
    def C2_hat(self) -> float:
        return float(np.exp(self.log_C2_hat)) if self.log_C2_hat < 709 else math.inf

    @property
    def C3_hat(self) -> float:
        return float(np.exp(self.log_C3_hat)) if self.log_C3_hat < 709 else math.inf

    @property
    def C4_hat(self) -> float:
        return float(np.exp(self.log_C4_hat)) if self.log_C4_hat < 709 else math.inf


def solve(model: CoefficientModel, lam: float, form: str = EQ1, N: int = 1000,
          rescale_period: int = 64) -> RecurrenceSolution:
    """Forward recurrence from y_{start-1} = 0, y_start = 1 up to n = start + N

    eq1: -a_n y_{n+1} - a_{n-1} y_{n-1} + (b_n + a_n + a_{n-1}) y_n = lam y_n
    eq2: the same with + on the off-diagonal terms
    """
    check_form(form)
    N = int(N)
    if N < 2:
        raise ValueError(f"N must be at least 2, got {N}")
    if rescale_period < 1:
        raise ValueError(f"rescale_period must be positive, got {rescale_period}")

    start = model.start_index
    a = model.a_values(start, start + N).tolist()
    d = model.diagonal(start, start + N).tolist()
    lam = float(lam)
    sign = 1.0 if form == EQ1 else -1.0

    mantissas = np.empty(N + 1)
    exponents = np.zeros(N + 1, dtype=np.int64)
    mantissas[0] = 1.0

    y_prev, y_cur = 0.0, 1.0
    a_prev = model.edge_a()
    exponent = 0
    rescales = 0
    for i in range(N):
        a_i = a[i]
        if a_i == 0.0:
            raise Breakdown(f"a_{start + i} = 0, recurrence cannot continue")
        y_next = (sign * (d[i] - lam) * y_cur - a_prev * y_prev) / a_i
        if not math.isfinite(y_next):
            raise Breakdown(f"non-finite value at n = {start + i + 1}")
        y_prev, y_cur = y_cur, y_next
        if y_cur != 0.0 and (abs(y_cur) > RESCALE_CAP or (i + 1) % rescale_period == 0):
            # power-of-two rescale is exact
            y_cur, e = math.frexp(y_cur)
            y_prev = math.ldexp(y_prev, -e)
            exponent += e
            rescales += 1
        mantissas[i + 1] = y_cur
        exponents[i + 1] = exponent
        a_prev = a_i

    logger.debug(f"solve: lam={lam}, form={form}, N={N}, rescales={rescales}")
    return RecurrenceSolution(lam, form, mantissas, exponents * LN2, start)


def orthonormal_polynomials(model: CoefficientModel, lam: float, N: int,
                            rescale_period: int = 64) -> RecurrenceSolution:
    """p(n; lam) for start <= n <= start + N, with p(start-1) = 0 and p(start) = 1"""
    return solve(model, lam, EQ2, N, rescale_period)


def gauge_map(sol: RecurrenceSolution) -> RecurrenceSolution:
    """y_n -> (-1)^(n - start) y_n, toggling eq1 and eq2"""
    signs = np.where(np.arange(len(sol)) % 2 == 0, 1.0, -1.0)
    return RecurrenceSolution(sol.lam, toggle_form(sol.form), sol.mantissas * signs,
                              sol.log_scales.copy(), sol.start_index)


def residuals(sol: RecurrenceSolution, model: CoefficientModel) -> np.ndarray:
    """Relative residual of the defining recurrence at n = start .. end - 1

    |LHS - lam y_n| / (|a_n y_{n+1}| + |a_{n-1} y_{n-1}| + |diag_n y_n|),
    evaluated in the local scale of y_n.
    """
    start = sol.start_index
    count = len(sol) - 1
    a = model.a_values(start, start + count)
    a_prev = np.concatenate(([model.edge_a()], a[:-1]))
    d = model.diagonal(start, start + count)

    m = sol.mantissas
    s = sol.log_scales
    y = m[:count]
    with np.errstate(over='ignore', under='ignore'):
        y_next = m[1:] * np.exp(s[1:] - s[:count])
        y_prev = np.concatenate(([0.0], m[:count - 1] * np.exp(s[:count - 1] - s[1:count])))

    off = 1.0 if sol.form == EQ2 else -1.0
    lhs = off * (a * y_next + a_prev * y_prev) + d * y - sol.lam * y
    scale = np.abs(a * y_next) + np.abs(a_prev * y_prev) + np.abs(d * y)
    with np.errstate(invalid='ignore', divide='ignore'):
        return np.where(scale > 0, np.abs(lhs) / scale, 0.0)


def _window_slice(sol: RecurrenceSolution, window: Tuple[int, int]) -> Tuple[int, int]:
    lo, hi = int(window[0]), int(window[1])
    if lo < sol.start_index or hi > sol.end_index or hi < lo:
        raise DegenerateWindow(
            f"window [{lo}, {hi}] outside solution range [{sol.start_index}, {sol.end_index}]"
        )
    if hi - lo + 1 < 16:
        raise DegenerateWindow(f"window [{lo}, {hi}] shorter than 16 samples")
    return lo - sol.start_index, hi - sol.start_index + 1


def energy_profile(sol: RecurrenceSolution) -> np.ndarray:
    """1/2 log of sum_{k <= n} y_k^2, accumulated in log space"""
    with np.errstate(invalid='ignore'):
        return 0.5 * np.logaddexp.accumulate(2.0 * sol.log_abs())


def estimate_growth(sol: RecurrenceSolution, window: Tuple[int, int],
                    beta_probe: float = 1e-3) -> GrowthEstimate:
    """Fit exponential and polynomial growth of |y_n| on window = [lo, hi]

    Slopes come from least squares on the cumulative energy profile, which
    matches log|y_n| for pure exponentials and powers and ignores the zeros
    of oscillating solutions. Prefactors are lifted to majorize |y_n| itself.
    """
    i0, i1 = _window_slice(sol, window)
    log_y = sol.log_abs()[i0:i1]
    zeros = ~np.isfinite(log_y)
    if zeros.mean() > 0.5:
        raise DegenerateWindow(f"{int(zeros.sum())} of {zeros.size} samples vanish on {tuple(window)}")

    n = sol.indices[i0:i1].astype(float)
    profile = energy_profile(sol)[i0:i1]

    beta_coef = np.polyfit(n, profile, 1)
    beta_rms = float(np.sqrt(np.mean((profile - np.polyval(beta_coef, n)) ** 2)))
    beta_hat = max(0.0, float(beta_coef[0]))

    log_n = np.log(n + 1.0)
    theta_coef = np.polyfit(log_n, profile, 1)
    theta_rms = float(np.sqrt(np.mean((profile - np.polyval(theta_coef, log_n)) ** 2)))
    theta_hat = float(theta_coef[0]) - 0.5

    finite = ~zeros
    log_C2 = float(np.max(log_y[finite] - beta_hat * n[finite]))
    log_C3 = float(np.max(log_y[finite] - beta_probe * n[finite]))
    log_C4 = float(np.max(log_y[finite] - theta_hat * log_n[finite]))

    preferred = 'exponential' if beta_rms < theta_rms else 'polynomial'
    return GrowthEstimate(
        beta_hat=beta_hat,
        theta_hat=theta_hat,
        log_C2_hat=log_C2,
        log_C3_hat=log_C3,
        log_C4_hat=log_C4,
        beta_probe=float(beta_probe),
        fit_window=(int(window[0]), int(window[1])),
        residual_rms=min(beta_rms, theta_rms),
        beta_rms=beta_rms,
        theta_rms=theta_rms,
        preferred=preferred,
    )


def subexponential_profile(sol: RecurrenceSolution, window: Tuple[int, int],
                           beta_grid: Sequence[float]) -> np.ndarray:
    """log C3(beta) = max over the window of log|y_n| - beta n, per beta"""
    i0, i1 = _window_slice(sol, window)
    log_y = sol.log_abs()[i0:i1]
    finite = np.isfinite(log_y)
    if not finite.any():
        raise DegenerateWindow(f"solution vanishes on {tuple(window)}")
    n = sol.indices[i0:i1][finite].astype(float)
    log_y = log_y[finite]
    betas = np.asarray(beta_grid, dtype=float)
    return np.max(log_y[None, :] - betas[:, None] * n[None, :], axis=1)
