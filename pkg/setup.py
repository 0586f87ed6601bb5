"""Builds the optional compiled tree-split kernel.

    pip install -e . --no-build-isolation

If Cython or a C compiler is missing the package still installs and the
pure-Python kernel is used instead.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "ensemble_ids.forest._splitter",
                ["src/ensemble_ids/forest/_splitter.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
