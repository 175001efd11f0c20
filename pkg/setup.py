"""Build the optional Cython k-NN completion kernel.

The package works without it: ``lanefusion.geometry.completion`` falls back to
a NumPy implementation when the extension is missing.
"""
import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pragma: no cover
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("LANEFUSION_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "lanefusion.geometry._knn",
                ["src/lanefusion/geometry/_knn.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: keeps results bitwise-equal to the NumPy path
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
