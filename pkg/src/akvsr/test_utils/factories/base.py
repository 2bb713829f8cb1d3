"""Base factory classes for the akvsr test suite.

Factories draw from one seeded numpy generator so that a test which
reseeds gets the same instances on every run.
"""

from typing import Any

import numpy as np


class BaseFactory:
    """Base factory over the shared random stream."""

    # Override in subclasses to specify the model/type to create
    _model: Any = dict
    _rng: np.random.Generator = np.random.default_rng(0)

    @classmethod
    def reseed(cls, seed: int) -> None:
        """Restart the shared random stream."""
        BaseFactory._rng = np.random.default_rng(seed)

    @classmethod
    def rng(cls) -> np.random.Generator:
        """The shared random stream."""
        return BaseFactory._rng

    @classmethod
    def create(cls, **kwargs: Any) -> Any:
        """Create an instance with optional overrides."""
        defaults = cls._get_defaults()
        defaults.update(kwargs)
        if cls._model is dict:
            return defaults
        return cls._model(**defaults)

    @classmethod
    def create_batch(cls, size: int, **kwargs: Any) -> list[Any]:
        """Create multiple instances."""
        return [cls.create(**kwargs) for _ in range(size)]

    @classmethod
    def _get_defaults(cls) -> dict[str, Any]:
        return {}


class TraitMixin:
    """Mixin for adding trait support to factories.

    A trait ``x`` is a ``trait_x`` classmethod returning nested overrides.
    """

    @classmethod
    def traits(cls, *trait_names: str) -> dict[str, Any]:
        """Merge the named traits, later ones winning per section."""
        merged: dict[str, Any] = {}
        for trait_name in trait_names:
            trait_method = getattr(cls, f"trait_{trait_name}", None)
            if trait_method is None:
                raise AttributeError(f"{cls.__name__} has no trait '{trait_name}'")
            for key, value in trait_method().items():
                if isinstance(value, dict):
                    merged.setdefault(key, {}).update(value)
                else:
                    merged[key] = value
        return merged
