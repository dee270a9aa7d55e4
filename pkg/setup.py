from setuptools import setup, Extension
from Cython.Build import cythonize
import numpy as np

# -ffp-contract=off keeps the compiled kernels bit-identical to the pure-Python
# fallback (no FMA contraction); do not add -ffast-math for the same reason.
ext = Extension(
    "coordplay._core",
    ["src/coordplay/_core.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(
    ext_modules=cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    ),
)
