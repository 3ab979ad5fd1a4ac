"""Build script: compiles the optional Cython enumeration kernel.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile is downgraded to a warning.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "phrasemeter._markov_core",
                ["src/phrasemeter/_markov_core.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    sys.stderr.write(f"warning: skipping Cython kernel build ({exc}); "
                     "pure-python fallback will be used\n")

setup(ext_modules=ext_modules)
