"""Build script: compiles the optional Cython stepping kernel.

The package works without the extension (a pure-Python mirror of the
kernel is selected at import time), so any failure here degrades to a
slower install instead of a broken one.
"""

import sys

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext = Extension(
        "sldelay._core",
        ["src/sldelay/_core.pyx"],
        # fused multiply-add would change rounding vs the Python mirror;
        # the backends are tested for near-bitwise agreement
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    ext_modules = cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # noqa: BLE001 - any build-time failure means "no extension"
    sys.stderr.write("sldelay: building without compiled kernel (%s)\n" % exc)

setup(ext_modules=ext_modules)
