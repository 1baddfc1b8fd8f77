from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: the pure-Python evaluator is used
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("flatmc._fokernel", ["src/flatmc/_fokernel.pyx"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
