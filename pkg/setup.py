"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension (a pure-numpy
fallback is selected at import time); compiling it accelerates the hot
training loops. If Cython or a C compiler is unavailable the build
silently degrades to pure Python.
"""
import sys

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "stackner._kernels._native",
                ["src/stackner/_kernels/_native.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    print("Cython not available, building without the compiled kernel extension",
          file=sys.stderr)

setup(ext_modules=ext_modules)
