"""Build script for the optional native kernel extension.

The extension is a performance backend only: every kernel has a pure
numpy twin in smoothlab._kernels_py, and the two must produce
bit-identical output.  -ffp-contract=off keeps the compiler from fusing
multiply-adds, which would change rounding versus the numpy path.
"""
import sys

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    if sys.platform == "win32":
        flags = ["/O2", "/fp:precise"]
    else:
        flags = ["-O2", "-ffp-contract=off"]
    ext_modules = cythonize(
        [
            Extension(
                "smoothlab._native",
                ["src/smoothlab/_native.pyx"],
                extra_compile_args=flags,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
