"""Build the optional compiled kernels.

The package works without them: ``pparabolic.kernels`` falls back to the
pure-Python/numpy implementations when the extension is missing.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("PPARABOLIC_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "pparabolic._kernels",
                    ["src/pparabolic/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no -ffast-math: the interval kernels rely on IEEE nextafter semantics
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
