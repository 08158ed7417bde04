# Coefficient family factory and registry
# Creates validated coefficient models from a family name or a config mapping

from typing import Any, List, Mapping, Sequence

from core.errors import InvalidParams, UnknownFamily

from .base import CoefficientModel
from .closed_form import ConstantModel, ExponentialModel, PowerModel, SuperExponentialModel
from .tabulated import TabulatedModel
from .wimp import WimpModel


class CoefficientFactory:
    """Factory for creating coefficient models"""

    _registry = {
        'constant': ConstantModel,
        'power': PowerModel,
        'exponential': ExponentialModel,
        'superexponential': SuperExponentialModel,
        'wimp': WimpModel,
    }

    @classmethod
    def create(cls, name: str, params: Sequence[float] = (), start_index: int = None) -> CoefficientModel:
        """Create a closed-form model"""
        if name not in cls._registry:
            raise UnknownFamily(f"Unknown coefficient family: {name}")
        try:
            params = [float(p) for p in params]
        except (TypeError, ValueError) as e:
            raise InvalidParams(f"{name} params must be numbers: {params!r}") from e

        model_class = cls._registry[name]
        if start_index is None:
            return model_class(params)
        return model_class(params, start_index=start_index)

    @classmethod
    def from_spec(cls, spec: Mapping[str, Any]) -> CoefficientModel:
        """Create a model from its config form

        Either {"family": name, "params": [...], "start_index": k}
        or {"a": [...], "b": [...], "a_edge": x, "start_index": k}.
        """
        if 'family' in spec:
            unknown = set(spec) - {'family', 'params', 'start_index'}
            if unknown:
                raise InvalidParams(f"Unknown model keys: {sorted(unknown)}")
            return cls.create(spec['family'], spec.get('params', []), spec.get('start_index'))

        if 'a' in spec and 'b' in spec:
            unknown = set(spec) - {'a', 'b', 'a_edge', 'start_index'}
            if unknown:
                raise InvalidParams(f"Unknown model keys: {sorted(unknown)}")
            return TabulatedModel(
                spec['a'], spec['b'],
                a_edge=spec.get('a_edge', 0.0),
                start_index=spec.get('start_index', 0),
            )

        raise InvalidParams("Model needs either 'family' or both 'a' and 'b'")

    @classmethod
    def list_families(cls) -> List[str]:
        """Registered closed-form family names"""
        return sorted(cls._registry)


def builtin(name: str, params: Sequence[float] = ()) -> CoefficientModel:
    """Validated built-in model by family name"""
    return CoefficientFactory.create(name, params)

