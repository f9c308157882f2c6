"""Builds the optional Cython kernel module.

If Cython or a C compiler is unavailable the package still installs and
runs on the numpy fallback in ``folnerlab._fallback``.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("FOLNERLAB_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "folnerlab._kernels",
                    ["src/folnerlab/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
