"""Build script: compiles the optional Cython kernel.

The package works without the extension (pure-Python kernel fallback); the
extension is marked optional so installation never fails on a missing
toolchain.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("treefit._kernel", ["src/treefit/_kernel.pyx"])],
        language_level=3,
    )
    for ext in ext_modules:
        ext.optional = True
except ImportError:
    pass

setup(ext_modules=ext_modules)
