"""Build hook for the optional compiled core.

The extension is optional: if Cython or a C compiler is missing the package
still installs and runs on the numpy fallback.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("METRICGP_NO_EXT", "") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext = Extension(
            "metricgp._core",
            ["src/metricgp/_core.pyx"],
            include_dirs=[numpy.get_include()],
            extra_compile_args=["-O3", "-ffp-contract=off"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize(
            [ext],
            compiler_directives={"language_level": 3, "boundscheck": False,
                                 "wraparound": False, "cdivision": True},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
