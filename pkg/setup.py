"""Build script for the compiled propagation kernels.

The extension is optional at runtime: if the compiled module is missing the
package falls back to a pure-numpy implementation with the same interface.
"""
import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "urcontrol.engine._kernels",
        ["src/urcontrol/engine/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
