"""Rigid-motion scattering transforms for texture classification."""

from . import _backend
from .se2_group import IDENTITY, RigidMotion, SE2Volume
from .wavelets2d import (CASCADE_PARAMS, DEFAULT_PARAMS, MorletParams, build_filter_bank,
                         littlewood_paley_audit, wavelet_modulus, wavelet_transform)

backend = _backend.name

__all__ = [
    "CASCADE_PARAMS", "DEFAULT_PARAMS", "IDENTITY", "MorletParams", "RigidMotion", "SE2Volume",
    "backend", "build_filter_bank", "littlewood_paley_audit", "wavelet_modulus",
    "wavelet_transform",
]
__version__ = "0.1.0"
