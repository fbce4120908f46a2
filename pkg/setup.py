"""Build script: compiles the optional accelerator extension.

The package is fully functional without the extension (a pure-Python twin is
selected at import time), so any failure here downgrades to a pure build
instead of aborting the install.
"""

import sys

from setuptools import setup

ext_modules = []
cmdclass = {}

try:
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "byzcast._speedups",
                ["src/byzcast/_speedups.pyx"],
                language="c++",
                extra_compile_args=["-O2", "-std=c++11"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    sys.stderr.write(
        "byzcast: building without the compiled kernels (%s); "
        "the pure-Python fallback will be used\n" % exc
    )

setup(ext_modules=ext_modules, cmdclass=cmdclass)
