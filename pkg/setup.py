import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("QCONTEXTS_PURE") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "qcontexts._kernel._section_search",
                    ["src/qcontexts/_kernel/_section_search.pyx"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython: the pure-Python kernel is used at import time.
        ext_modules = []

setup(ext_modules=ext_modules)
