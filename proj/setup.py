import os

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

SOURCES = [
    "python/bindings.cpp",
    "src/mdp.cpp",
    "src/exact.cpp",
    "src/data.cpp",
    "src/convex.cpp",
    "src/dice.cpp",
    "src/optim.cpp",
    "src/lstdq.cpp",
    "src/sweep.cpp",
]

EIGEN_INCLUDE = os.environ.get("EIGEN_INCLUDE_DIR", "/usr/include/eigen3")

ext = Pybind11Extension(
    "_dicelp",
    SOURCES,
    include_dirs=["include", EIGEN_INCLUDE],
    cxx_std=20,
)

setup(ext_modules=[ext], cmdclass={"build_ext": build_ext})
