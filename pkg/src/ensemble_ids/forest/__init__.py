"""Random forest learner with a compiled split kernel and a numpy fallback."""
from ._backend import DEFAULT as KERNEL, KERNELS
from .forest import NotFittedError, RandomForest, fit, predict
from .tree import DecisionTree, fit_tree, gini

__all__ = [
    "KERNEL", "KERNELS", "DecisionTree", "NotFittedError", "RandomForest",
    "fit", "fit_tree", "gini", "predict",
]
