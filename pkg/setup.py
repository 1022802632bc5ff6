"""Build script for the optional compiled kernel.

The package works without the extension (a numpy fallback is selected at
import time), so a failing C toolchain must not break installation.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the accelerator extension, but tolerate failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing or broken
            sys.stderr.write(f"camalign: skipping compiled kernel ({exc}); "
                             "the pure-python backend will be used\n")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            sys.stderr.write(f"camalign: failed to build {ext.name} ({exc}); "
                             "the pure-python backend will be used\n")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension
    return cythonize(
        [Extension("camalign._kernel", ["src/camalign/_kernel.pyx"],
                   extra_compile_args=["-O3"])],
        language_level=3,
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
