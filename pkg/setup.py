"""Optional build of the compiled kernels; the package works without them."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("ANELASTIC_NO_EXT", "") in ("", "0"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("anelastic._kernels", ["src/anelastic/_kernels.pyx"],
                       include_dirs=[numpy.get_include()], extra_compile_args=["-O3"])],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
