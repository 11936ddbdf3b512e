import os

from setuptools import setup
from setuptools.extension import Extension

# The compiled kernel is optional: the package falls back to the numpy
# implementation when the extension is absent (see svyglm._kernels).
ext_modules = []
if not os.environ.get("SVYGLM_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("svyglm._kernels._core", ["src/svyglm/_kernels/_core.pyx"])],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
