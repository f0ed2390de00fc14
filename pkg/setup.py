"""Build script: compiles the coordinate-ascent sweep kernel when a C
toolchain is available.  Set DRIFTBENCH_NO_EXT=1 to skip compilation and
run on the pure-Python fallback (selected automatically at import)."""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DRIFTBENCH_NO_EXT") != "1":
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "driftbench._kernels",
                ["src/driftbench/_kernels.pyx"],
                # -ffp-contract=off keeps the compiled sweep bit-identical
                # to the pure-Python fallback (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
