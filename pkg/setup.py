import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # The package falls back to the pure-Python kernel when the compiled
    # extension is unavailable, so a Cython-less build is still valid.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "tgraph.kernels._entrysolve",
                ["src/tgraph/kernels/_entrysolve.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off keeps the C arithmetic bit-identical to
                # the pure-Python kernel (no fused multiply-add contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
