"""Build the optional Cython kernels.

The package works without them: ``multiverse._backend`` falls back to the
pure-Python implementations when the extension cannot be imported.  Set
``MULTIVERSE_NO_EXT=1`` to skip compiling altogether.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("MULTIVERSE_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        # no -ffast-math / -march=native: results must stay bit-reproducible
        extensions = [
            Extension(
                "multiverse._kernels",
                ["src/multiverse/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ]
        ext_modules = cythonize(
            extensions,
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
