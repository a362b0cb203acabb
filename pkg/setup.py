import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # build the pure-Python fallback only
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("CAMPUS_EMS_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "campus_ems.linprog._kernel",
                ["src/campus_ems/linprog/_kernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
