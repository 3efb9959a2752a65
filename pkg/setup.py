"""Build script: compiles the optional fast-kernel extension.

The package works without the extension (a pure-Python kernel module is
selected at import time), so a failed compile downgrades to a warning
instead of aborting the install.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the accelerator extension if possible, warn and move on if not."""

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # compiler missing, etc.
            warnings.warn(
                f"could not build optional extension {ext.name!r} ({exc}); "
                "falling back to the pure-Python kernels"
            )


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython not available; installing with pure-Python kernels only")
        return []
    ext = Extension(
        "bregman_perceptron._kernels_cy",
        sources=["src/bregman_perceptron/_kernels_cy.pyx"],
        # No -ffast-math and no fp contraction: the compiled kernels must be
        # bit-identical to the pure-Python ones (IEEE-754 ops in fixed order).
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
        },
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
