# Closed-form coefficient families
# Constant, power-law, exponential and super-exponential sequences evaluated lazily

from typing import List, Sequence

import numpy as np

from core.errors import CoefficientError, InvalidParams

from .base import CoefficientModel


def _unpack(kind: str, params: Sequence[float], required: int, defaults: Sequence[float]) -> List[float]:
    """Fill optional trailing params from defaults"""
    params = list(params)
    if len(params) < required or len(params) > required + len(defaults):
        raise InvalidParams(
            f"{kind} expects {required} to {required + len(defaults)} params, got {len(params)}"
        )
    values = params + list(defaults[len(params) - required:])
    if not all(np.isfinite(v) for v in values):
        raise InvalidParams(f"{kind} params must be finite: {params}")
    return [float(v) for v in values]


class ClosedFormModel(CoefficientModel):
    """Closed-form family checked at its first lattice site on construction"""

    def __init__(self, params: Sequence[float] = (), start_index: int = 0):
        super().__init__(params, start_index)
        try:
            self.eval_a(self.start_index)
            self.eval_b(self.start_index)
        except CoefficientError as e:
            raise InvalidParams(f"{self.kind}{list(params)}: {e}") from e


class ConstantModel(ClosedFormModel):
    """a_n = a, b_n = b"""

    kind = 'constant'

    def __init__(self, params: Sequence[float] = (1.0, 0.0), start_index: int = 0):
        self.a, self.b = _unpack(self.kind, params, 1, [0.0])
        super().__init__([self.a, self.b], start_index)

    def _raw_a(self, n: np.ndarray) -> np.ndarray:
        return np.full(n.shape, self.a)

    def _raw_b(self, n: np.ndarray) -> np.ndarray:
        return np.full(n.shape, self.b)

    def _raw_log_a(self, n: np.ndarray) -> np.ndarray:
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.full(n.shape, np.log(self.a) if self.a > 0 else np.nan)


class PowerModel(ClosedFormModel):
    """a_n = scale * (n + 1)^p, b_n = b"""

    kind = 'power'

    def __init__(self, params: Sequence[float], start_index: int = 0):
        self.p, self.scale, self.b = _unpack(self.kind, params, 1, [1.0, 0.0])
        if self.scale <= 0:
            raise InvalidParams(f"power scale must be positive, got {self.scale}")
        super().__init__([self.p, self.scale, self.b], start_index)

    def _raw_a(self, n: np.ndarray) -> np.ndarray:
        with np.errstate(divide='ignore', invalid='ignore'):
            return self.scale * np.power((n + 1).astype(float), self.p)

    def _raw_b(self, n: np.ndarray) -> np.ndarray:
        return np.full(n.shape, self.b)

    def _raw_log_a(self, n: np.ndarray) -> np.ndarray:
        with np.errstate(divide='ignore', invalid='ignore'):
            return np.log(self.scale) + self.p * np.log((n + 1).astype(float))


class ExponentialModel(ClosedFormModel):
    """a_n = e^{c n}, b_n = b"""

    kind = 'exponential'

    def __init__(self, params: Sequence[float], start_index: int = 0):
        self.c, self.b = _unpack(self.kind, params, 1, [0.0])
        super().__init__([self.c, self.b], start_index)

    def _raw_a(self, n: np.ndarray) -> np.ndarray:
        with np.errstate(over='ignore'):
            return np.exp(self.c * n)

    def _raw_b(self, n: np.ndarray) -> np.ndarray:
        return np.full(n.shape, self.b)

    def _raw_log_a(self, n: np.ndarray) -> np.ndarray:
        return self.c * n.astype(float)


class SuperExponentialModel(ClosedFormModel):
    """a_n = e^{c n^2}, b_n = b; violates the ratio bound on a_n for any C1"""

    kind = 'superexponential'

    def __init__(self, params: Sequence[float] = (1.0,), start_index: int = 0):
        self.c, self.b = _unpack(self.kind, params, 1, [0.0])
        super().__init__([self.c, self.b], start_index)

    def _raw_a(self, n: np.ndarray) -> np.ndarray:
        with np.errstate(over='ignore'):
            return np.exp(self.c * n.astype(float) ** 2)

    def _raw_b(self, n: np.ndarray) -> np.ndarray:
        return np.full(n.shape, self.b)

    def _raw_log_a(self, n: np.ndarray) -> np.ndarray:
        return self.c * n.astype(float) ** 2
