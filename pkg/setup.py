import os

from setuptools import setup

ext_modules = []
if os.environ.get("FAIRAUDIT_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:  # fall back to the numpy kernels
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "fairaudit._kernels",
                    ["src/fairaudit/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
