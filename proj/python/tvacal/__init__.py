"""Post-hoc confidence calibration for multiclass classifiers."""

from ._core import (
    Calibrator,
    DegenerateFit,
    Error,
    FormatError,
    InvalidInput,
    InvalidParameter,
    OptimizationFailure,
    UndefinedMetric,
    auroc,
    brier,
    ece,
    generate,
    load_dataset,
    predict,
    reliability_diagram,
    save_dataset,
    softmax,
    split,
)

__all__ = [
    "Calibrator",
    "DegenerateFit",
    "Error",
    "FormatError",
    "InvalidInput",
    "InvalidParameter",
    "OptimizationFailure",
    "UndefinedMetric",
    "auroc",
    "brier",
    "ece",
    "generate",
    "load_dataset",
    "predict",
    "reliability_diagram",
    "save_dataset",
    "softmax",
    "split",
]
