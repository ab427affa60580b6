"""Rotated-box toolkit: geometry, angle coding, loss weighting, evaluation.

Angles for long-side boxes live in (-90, 90] degrees and repeat with
period 180. Predicting them by regression or naive classification is
discontinuous at the period boundary; the coding schemes, weights and
desk-scale experiments here quantify that and provide the dense-code
alternative.
"""

from ._version import __version__
from .coding import (
    AngleCodeTable,
    CodingConfig,
    QuantizationStats,
    build_code_table,
    decode_logits,
    decode_logits_batch,
    discretize,
    encode_angle,
    encode_angles,
    encode_index,
    gray_to_binary,
    prediction_thickness,
    quantization_error_stats,
)
from .errors import (
    AnnotationParseError,
    ConfigError,
    DegenerateGeometryError,
    DivergenceError,
    InvalidInputError,
    RBoxError,
)
from .estimator import AngleCoder
from .evaluation import (
    FP,
    IGNORED,
    TP,
    APResult,
    DetectionRecord,
    EvalResult,
    GroundTruthRecord,
    average_precision,
    evaluate_detections,
    match_detections,
)
from .experiments import (
    FitBatchResult,
    FitTrajectory,
    GranularityRow,
    SweepResult,
    fit_logits,
    fit_many,
    granularity_study,
    loss_surface_sweep,
    sweep_grid,
    synthetic_boxes,
)
from .geometry import (
    QuadBox,
    RotatedBoxLongSide,
    RotatedBoxOpenCV,
    angle_distance,
    canonicalize_angle,
    convert_definition,
    longside_to_quad,
    quad_to_longside,
    rotated_iou,
)
from .losses import (
    LossConfig,
    MultiTaskLoss,
    TrainingSample,
    WeightConfig,
    adarsw_weight,
    angle_distance_weight,
    binary_focal_loss,
    binary_focal_loss_grad,
    box_offsets,
    dcl_loss,
    dcl_loss_grad,
    decode_box_offsets,
    loss_weight,
    multitask_loss,
    smooth_l1,
)

__all__ = [
    "__version__",
    # errors
    "RBoxError", "InvalidInputError", "ConfigError", "DegenerateGeometryError",
    "AnnotationParseError", "DivergenceError",
    # geometry
    "RotatedBoxLongSide", "RotatedBoxOpenCV", "QuadBox",
    "canonicalize_angle", "angle_distance", "convert_definition",
    "longside_to_quad", "quad_to_longside", "rotated_iou",
    # coding
    "CodingConfig", "AngleCodeTable", "QuantizationStats",
    "build_code_table", "discretize", "encode_index", "encode_angle",
    "encode_angles", "gray_to_binary", "decode_logits", "decode_logits_batch",
    "prediction_thickness", "quantization_error_stats", "AngleCoder",
    # losses
    "WeightConfig", "LossConfig", "TrainingSample", "MultiTaskLoss",
    "angle_distance_weight", "adarsw_weight", "loss_weight",
    "binary_focal_loss", "binary_focal_loss_grad", "dcl_loss", "dcl_loss_grad",
    "box_offsets", "decode_box_offsets", "smooth_l1", "multitask_loss",
    # experiments
    "SweepResult", "FitTrajectory", "FitBatchResult", "GranularityRow",
    "sweep_grid", "loss_surface_sweep", "fit_logits", "fit_many",
    "granularity_study", "synthetic_boxes",
    # evaluation
    "TP", "FP", "IGNORED",
    "DetectionRecord", "GroundTruthRecord", "APResult", "EvalResult",
    "match_detections", "average_precision", "evaluate_detections",
]
