"""Build script: compiles the scan kernel extension when Cython is available.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed or skipped extension build is not fatal.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "bitextmine._kernels._scan",
                ["src/bitextmine/_kernels/_scan.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
