"""Build script for the optional compiled max-flow kernel.

The package works without the extension; trackcut.maxflow falls back to
the pure-Python solver when the compiled module is absent.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "trackcut.maxflow._speed",
                sources=["src/trackcut/maxflow/_speed.pyx"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
