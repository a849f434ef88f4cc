"""Metric depth priors from camera geometry, with self-supervision losses and
depth evaluation utilities."""

from .camera import (
    CameraModel,
    Extrinsics,
    Intrinsics,
    euler_from_rotation,
    pixel_ray,
    project,
    rescale_intrinsics,
    rotate_ray,
    rotation_from_euler,
    unproject,
)
from .estimators import MedianScaler, PhysicsDepthTransformer
from .evaluation import (
    MetricsReport,
    PctErrorReport,
    apply_scale,
    compare_scales,
    depth_metrics,
    median_scale,
    pct_error_report,
    within_pct,
)
from .exceptions import (
    BehindCamera,
    EmptyOverlap,
    EmptyPrior,
    GeometryError,
    InvalidDepth,
    InvalidInput,
    ParseError,
    PhysDepthError,
)
from .inpaint import telea
from .losses import (
    LossConfig,
    RigidTransform,
    block_matching_flow,
    confidence_map,
    min_reprojection,
    photometric_loss,
    physics_supervision_loss,
    smoothness_loss,
    spatial_2d_loss,
    ssim,
    warp_image,
)
from .physics import (
    PhysicsDepthConfig,
    PhysicsDepthResult,
    compute_pipeline,
    densify,
    edge_extend,
    ground_physics_depth,
)
from .scene import (
    Category,
    DepthMap,
    FlowField,
    LabelSchema,
    Provenance,
    categorize,
    cityscapes_schema,
    new_depth_map,
    read_pfd,
    write_pfd,
)

__all__ = [
    "CameraModel",
    "Extrinsics",
    "Intrinsics",
    "euler_from_rotation",
    "pixel_ray",
    "project",
    "rescale_intrinsics",
    "rotate_ray",
    "rotation_from_euler",
    "unproject",
    "MedianScaler",
    "PhysicsDepthTransformer",
    "MetricsReport",
    "PctErrorReport",
    "apply_scale",
    "compare_scales",
    "depth_metrics",
    "median_scale",
    "pct_error_report",
    "within_pct",
    "BehindCamera",
    "EmptyOverlap",
    "EmptyPrior",
    "GeometryError",
    "InvalidDepth",
    "InvalidInput",
    "ParseError",
    "PhysDepthError",
    "telea",
    "LossConfig",
    "RigidTransform",
    "block_matching_flow",
    "confidence_map",
    "min_reprojection",
    "photometric_loss",
    "physics_supervision_loss",
    "smoothness_loss",
    "spatial_2d_loss",
    "ssim",
    "warp_image",
    "PhysicsDepthConfig",
    "PhysicsDepthResult",
    "compute_pipeline",
    "densify",
    "edge_extend",
    "ground_physics_depth",
    "Category",
    "DepthMap",
    "FlowField",
    "LabelSchema",
    "Provenance",
    "categorize",
    "cityscapes_schema",
    "new_depth_map",
    "read_pfd",
    "write_pfd",
]

__version__ = "0.1.0"
