"""Randomized smoothing as certifier and practical defense, at desk scale.

Certified radii, decision-based black-box attacks (HSJA, SurFree,
RayS), and boundary probes over small synthetic classifiers, all fully
deterministic given a seed.
"""
from .backend import BACKEND_NAME, available_backends
from .rng import Stream, derive_key

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "available_backends",
    "Stream",
    "derive_key",
    "__version__",
]
