from setuptools import Extension, setup

# The compiled rewrite kernel is optional: the package falls back to the
# pure-Python engine when the extension is unavailable.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "quamal._engine.engine_cy",
                ["src/quamal/_engine/engine_cy.pyx"],
            )
        ],
        language_level="3",
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
