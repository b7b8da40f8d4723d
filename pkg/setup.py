import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# Compiled stepping kernel for the fixed-step Runge-Kutta loop. The package
# works without it (a numpy fallback is selected at import time), so the
# extension is marked optional and a failed compile only costs speed.
extensions = [
    Extension(
        "graphon_sir._stepper",
        ["src/graphon_sir/_stepper.pyx"],
        include_dirs=[numpy.get_include()],
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
