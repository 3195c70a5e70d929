import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python fallback only
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("DDMETAPOP_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "ddmetapop._kernels._fast",
                ["src/ddmetapop/_kernels/_fast.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: results must match the Python kernel bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
