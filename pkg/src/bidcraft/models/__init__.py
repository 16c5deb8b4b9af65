from .base import (
    PARAMS,
    ModelKind,
    ModelSpec,
    TrainedModel,
    fit,
    fit_head,
    load_model,
    model_from_dict,
    model_to_dict,
    predict,
    save_model,
)
from .linear import coordinate_descent, ridge, soft_threshold
from .svr import DualSolution, kernel_matrix, solve_svr_dual
from .tree import Tree, grow_tree

__all__ = [
    "PARAMS", "ModelKind", "ModelSpec", "TrainedModel", "fit", "fit_head", "load_model",
    "model_from_dict", "model_to_dict", "predict", "save_model", "coordinate_descent", "ridge",
    "soft_threshold", "DualSolution", "kernel_matrix", "solve_svr_dual", "Tree", "grow_tree",
]
