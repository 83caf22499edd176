import os

from setuptools import Extension, setup

# The compiled kernel is an optimization, not a requirement: when Cython or a
# C compiler is unavailable the package falls back to the pure-Python backend
# selected at import time in echoroom._kernels.
ext_modules = []
if os.environ.get("ECHOROOM_PURE_PYTHON") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "echoroom._kernels._native",
                    ["src/echoroom/_kernels/_native.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level="3",
            compiler_directives={
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
