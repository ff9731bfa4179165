"""Build the optional compiled kernel.

The extension is best-effort: if Cython or a C compiler is unavailable the
package installs anyway and falls back to the pure-Python kernel at import.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/sdgeom/_core.pyx"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
