import os

from setuptools import Extension, setup

# The compiled loop is optional; without Cython (or with RKBS_MIRROR_NO_EXT=1)
# the package installs pure-Python and falls back to _mda_py at import.
ext_modules = []
if not os.environ.get("RKBS_MIRROR_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("rkbs_mirror._mda_core", ["src/rkbs_mirror/_mda_core.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
