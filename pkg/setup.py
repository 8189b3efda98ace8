"""Build script for the optional Cython kernels.

The package works without a compiler: if Cython or a C toolchain is missing the
extension is skipped and ``umpcodes._kernels`` falls back to pure Python.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("UMPCODES_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "umpcodes._kernels._ckernels",
                    ["src/umpcodes/_kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
