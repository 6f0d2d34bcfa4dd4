import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # The package still works without the compiled kernel; the numpy
    # fallback in rwabounds._kernels is selected at import time.
    extensions = []
else:
    extensions = cythonize(
        [
            Extension(
                "rwabounds._kernels._step_cy",
                ["src/rwabounds/_kernels/_step_cy.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
