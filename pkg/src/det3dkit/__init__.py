"""3D detection toolkit: 2D-to-3D lifting, loss oracles, and open-set metrics."""

from .geometry import (
    Box2D,
    Box3D,
    CameraIntrinsics,
    Rot6D,
    center_distance,
    corners,
    geodesic_angle,
    gt_radius,
    iou3d,
    matrix_to_rot6d,
    project,
    rot6d_to_matrix,
    unproject,
)
from .lifting import (
    CanonicalConfig,
    CanonicalTransform,
    LiftParams,
    LiftScales,
    apply_transform,
    canonicalize,
    decode_depth,
    decode_dims,
    invert_transform,
    lift,
    lift_jacobian,
)
from .losses import LossWeights, final_loss, giou_2d, l1_3d, silog
from .metrics import (
    Detection,
    DistCriterion,
    GroundTruth,
    IoUCriterion,
    MetricConfig,
    MetricReport,
    evaluate,
    match_frame,
    ods,
)
from .synth import ClassSpec, PerturbModel, SceneSpec, generate, perturb

__version__ = "0.1.0"

__all__ = [
    "Box2D",
    "Box3D",
    "CameraIntrinsics",
    "CanonicalConfig",
    "CanonicalTransform",
    "ClassSpec",
    "Detection",
    "DistCriterion",
    "GroundTruth",
    "IoUCriterion",
    "LiftParams",
    "LiftScales",
    "LossWeights",
    "MetricConfig",
    "MetricReport",
    "PerturbModel",
    "Rot6D",
    "SceneSpec",
    "apply_transform",
    "canonicalize",
    "center_distance",
    "corners",
    "decode_depth",
    "decode_dims",
    "evaluate",
    "final_loss",
    "generate",
    "geodesic_angle",
    "giou_2d",
    "gt_radius",
    "invert_transform",
    "iou3d",
    "l1_3d",
    "lift",
    "lift_jacobian",
    "match_frame",
    "matrix_to_rot6d",
    "ods",
    "perturb",
    "project",
    "rot6d_to_matrix",
    "silog",
    "unproject",
]
