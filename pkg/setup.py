"""Builds the optional Cython kernel; the package falls back to NumPy without it."""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("QDSV_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension(
                "qdsv._kernels",
                ["src/qdsv/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # keep a*b+c unfused so results match the NumPy fallback
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )],
            language_level=3,
        )

setup(ext_modules=ext_modules)
