"""Build script: compiles the optional fast extension core.

The package works without the extension (a pure-numpy backend is selected at
import time), so a failed compile only loses speed, never functionality.
Set BOLTZCF_NO_EXT=1 to skip the compile entirely.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("BOLTZCF_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "boltzcf._fast._core",
                    ["src/boltzcf/_fast/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except Exception as exc:  # pragma: no cover - build-env dependent
        print(f"boltzcf: skipping fast extension ({exc}); pure backend will be used")

setup(ext_modules=ext_modules)
