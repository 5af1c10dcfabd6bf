"""Catalog of builtin equation models and the model DSL."""

from __future__ import annotations

from .model import (
    LAMBDA,
    Covering,
    Equation,
    EquationModel,
    LaxPair,
    RecursionSystem,
    SymmetryFamily,
    linearize,
)


class UnknownModel(KeyError):
    pass


_CACHE: dict[str, EquationModel] = {}


def list_models() -> list[str]:
    from .catalog import BUILDERS

    return sorted(BUILDERS)


def builtin(model_id: str) -> EquationModel:
    """The catalog model ``model_id``; built once and cached."""
    from .catalog import BUILDERS

    m = _CACHE.get(model_id)
    if m is None:
        try:
            build = BUILDERS[model_id]
        except KeyError:
            raise UnknownModel(model_id) from None
        m = build()
        _CACHE[model_id] = m
    return m


__all__ = [
    "LAMBDA",
    "Covering",
    "Equation",
    "EquationModel",
    "LaxPair",
    "RecursionSystem",
    "SymmetryFamily",
    "UnknownModel",
    "builtin",
    "linearize",
    "list_models",
]
