# Coefficient models package
# Built-in coefficient families for the three-term recurrence and their factory

from .base import CoefficientModel
from .factory import CoefficientFactory, builtin
from .tabulated import TabulatedModel

__all__ = ['CoefficientModel', 'CoefficientFactory', 'TabulatedModel', 'builtin']
