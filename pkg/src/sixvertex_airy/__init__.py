"""Exact prelimit formulas for the stochastic six-vertex model and their Airy-process limits."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"

from ._backend import COMPILED
from .errors import BudgetError, ValidationError
from .params import ModelParams, param_convert
from .result import QuadResult

__all__ = ["COMPILED", "BudgetError", "ModelParams", "QuadResult", "ValidationError", "__version__", "param_convert"]
