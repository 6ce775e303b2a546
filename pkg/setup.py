import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("CNEIGH_NO_EXT") != "1":
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "cneigh._kernels",
        ["src/cneigh/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
