# Builds the compiled kernel extension.  The package works without it
# (a pure numpy fallback is selected at import), so the extension is
# skipped when Cython is unavailable.
#
#   pip install -e . --no-build-isolation
#   python setup.py build_ext --inplace

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy

    ext_modules = cythonize(
        ["src/coarseops/_ckernels.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    for ext in ext_modules:
        ext.include_dirs.append(numpy.get_include())
        ext.define_macros.append(("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"))
except ImportError:
    pass

setup(ext_modules=ext_modules)
