# Wimp example coefficients
# a_n = (n(n+1))^{1/2} with diagonal 2n, obtained from the weighted equation
# -n(n+1) y_{n+1} + 2n^2 y_n - n(n-1) y_{n-1} = lambda n y_n

from typing import Callable, Sequence, Tuple

import numpy as np

from core.errors import InvalidParams

from .base import CoefficientModel


def wimp_weights() -> Tuple[Callable, Callable, Callable]:
    """(p, q, c) of the weighted Wimp equation, as vectorized callables of n"""

    def p(n):
        n = np.asarray(n, dtype=float)
        return n * (n + 1.0)

    def q(n):
        n = np.asarray(n, dtype=float)
        return 2.0 * n * n

    def c(n):
        return np.asarray(n, dtype=float)

    return p, q, c


class WimpModel(CoefficientModel):
    """Jacobi form of the Wimp example on the lattice n >= 1

    a_0 = 0 would put a zero off-diagonal at the left edge, so the lattice
    starts at n = 1 and a_0 only contributes the Dirichlet edge.
    """

    kind = 'wimp'

    def __init__(self, params: Sequence[float] = (), start_index: int = 1):
        if len(params) != 0:
            raise InvalidParams(f"wimp takes no params, got {list(params)}")
        if start_index != 1:
            raise InvalidParams("wimp lattice starts at n = 1")
        super().__init__((), start_index)

    def _raw_a(self, n: np.ndarray) -> np.ndarray:
        n = n.astype(float)
        with np.errstate(invalid='ignore'):
            return np.sqrt(n * (n + 1.0))

    def _raw_b(self, n: np.ndarray) -> np.ndarray:
        # 2n - sqrt(n(n+1)) - sqrt(n(n-1)) without cancellation
        n = n.astype(float)
        upper = n / (n + np.sqrt(n * (n + 1.0)))
        lower = n / (n + np.sqrt(n * (n - 1.0)))
        return lower - upper

    def _raw_log_a(self, n: np.ndarray) -> np.ndarray:
        n = n.astype(float)
        with np.errstate(divide='ignore', invalid='ignore'):
            return 0.5 * (np.log(n) + np.log(n + 1.0))
