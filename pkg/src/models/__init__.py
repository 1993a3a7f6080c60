"""
Models package: finite-coordinate vector lattices and their AL view.
"""

from .lattice_core import (
    BandDescriptor,
    Element,
    Functional,
    LatticeModel,
    NormKind,
    SpaceTag,
    band_decompose,
    band_projection,
    is_quasi_interior,
    is_weak_unit,
    lattice_ops,
    norm,
)
from .al_representation import ALView, al_norm, contractive_extension_check, to_probability_model

__all__ = [
    'BandDescriptor',
    'Element',
    'Functional',
    'LatticeModel',
    'NormKind',
    'SpaceTag',
    'band_decompose',
    'band_projection',
    'is_quasi_interior',
    'is_weak_unit',
    'lattice_ops',
    'norm',
    'ALView',
    'al_norm',
    'contractive_extension_check',
    'to_probability_model',
]
