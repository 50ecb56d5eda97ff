import numpy as np
from setuptools import Extension, setup
from Cython.Build import cythonize

# The compiled kernels are an optional speedup: qrsin.backend falls back to
# the vectorized numpy implementation when the extension is unavailable.
extensions = [
    Extension(
        "qrsin._kernels",
        ["src/qrsin/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
