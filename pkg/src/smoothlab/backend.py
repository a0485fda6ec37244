"""Kernel backend selection.

The native extension is optional.  At import time this module picks it
up when available, otherwise it falls back to the numpy implementation;
both produce bit-identical streams and vote counts, so the choice only
affects speed.  Set SMOOTHLAB_BACKEND=python or =native to force one
(forcing native raises if the extension is missing).
"""
import os

from . import _kernels_py

_forced = os.environ.get("SMOOTHLAB_BACKEND", "").strip().lower()

_native = None
if _forced != "python":
    try:
        from . import _native  # type: ignore[attr-defined]
    except ImportError:
        _native = None

if _forced == "native" and _native is None:
    raise ImportError(
        "SMOOTHLAB_BACKEND=native but the smoothlab._native extension "
        "is not built; install with the Cython toolchain or unset the "
        "variable to use the numpy fallback"
    )

_impl = _native if _native is not None else _kernels_py

BACKEND_NAME = _impl.BACKEND_NAME

philox_block = _impl.philox_block
uniforms = _impl.uniforms
normals = _impl.normals
vote_linear = _impl.vote_linear
vote_sphere = _impl.vote_sphere
vote_mlp = _impl.vote_mlp

# Always the numpy implementations; not performance critical.
mlp_logits = _kernels_py.mlp_logits
portable_log = _kernels_py.portable_log
normal_from_uniform = _kernels_py.normal_from_uniform


def available_backends():
    names = ["python"]
    if _native is not None:
        names.insert(0, "native")
    return names
