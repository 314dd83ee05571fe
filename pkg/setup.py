from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # Pure-Python install; polyqn.backend falls back to the NumPy kernels.
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("polyqn._kernels", ["src/polyqn/_kernels.pyx"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
