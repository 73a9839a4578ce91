"""Build script for the optional compiled evaluator.

The package is fully functional without the extension: cgmplan.engine
falls back to the pure-Python evaluator when cgmplan._ckernel is not
importable.  The extension only exists to make large sweeps and
benchmarks fast.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    ext_modules = cythonize(
        [Extension("cgmplan._ckernel", ["src/cgmplan/_ckernel.pyx"])],
        language_level=3,
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
