import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off keeps the compiled event loop bit-identical to the
# pure-Python fallback (no fused multiply-add reassociation).
extensions = [
    Extension(
        "plrlab.sim._engine_cy",
        ["src/plrlab/sim/_engine_cy.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O2", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
