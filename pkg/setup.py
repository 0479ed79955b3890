"""Build hook for the optional compiled flow kernels.

Metadata lives in pyproject.toml. When Cython or a C compiler is missing the
package still installs and falls back to the numpy kernels at import time.
"""

import os

from setuptools import setup


def extensions():
    if os.environ.get("GITSTRATA_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "gitstrata.kahler._flowcore",
        ["src/gitstrata/kahler/_flowcore.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"}, quiet=True)


setup(ext_modules=extensions())
