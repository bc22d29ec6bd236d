"""Builds the optional compiled kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time); set MCDF_REQUIRE_EXT=1 to fail the build instead of silently
skipping, or MCDF_NO_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MCDF_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "mcdf._kernels._core",
                    ["src/mcdf/_kernels/_core.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        if os.environ.get("MCDF_REQUIRE_EXT") == "1":
            raise

setup(ext_modules=ext_modules)
