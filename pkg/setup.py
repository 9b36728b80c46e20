import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None and os.environ.get("LHD_NO_EXT") != "1":
    ext_modules = cythonize(
        [
            Extension(
                "maximin_lhd._ckernel",
                ["src/maximin_lhd/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # keep float rounding identical to the pure-Python kernel
                extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"] + (["-march=native"] if os.environ.get("LHD_NATIVE") == "1" else []),
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
