import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RECLOOP_NO_EXTENSION", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            Extension(
                "recloop._kernels",
                ["src/recloop/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # no FMA contraction: keeps results bit-identical to the numpy fallback
                extra_compile_args=["-O2", "-ffp-contract=off"],
            ),
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
