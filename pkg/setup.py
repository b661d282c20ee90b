import os

from setuptools import setup

ext_modules = []
if os.environ.get("CLOUDAUCTION_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "cloudauction._engine_cy",
                    ["src/cloudauction/_engine_cy.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O2"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # No Cython available: install pure-Python only, the engine falls
        # back to the interpreted kernel at import time.
        ext_modules = []

setup(ext_modules=ext_modules)
