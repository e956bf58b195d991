"""Build script for the optional compiled core.

The extension is optional: when Cython or a C compiler is missing the
package installs without it and falls back to the pure-Python kernels.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("FRACHOLDER_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "fracholder._core",
                    ["src/fracholder/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
