"""Build script: compiles the optional C extension holding the hot kernels.

The package is fully functional without the extension (pure-Python kernels
are selected at import time), so a failed compile only costs speed. Set
LRKBEST_REQUIRE_C=1 to turn a build failure into a hard error.
"""

import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self._warn(exc)

    def _warn(self, exc):
        if os.environ.get("LRKBEST_REQUIRE_C"):
            raise
        print(
            f"WARNING: building the C kernels failed ({exc!r}); "
            "installing with pure-Python kernels only.",
            file=sys.stderr,
        )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("WARNING: Cython not available; skipping C kernels.", file=sys.stderr)
        return []
    from setuptools import Extension

    ext = Extension(
        "lrkbest._ckernels",
        ["src/lrkbest/_ckernels.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level="3")


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
