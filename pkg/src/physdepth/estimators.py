"""scikit-learn compatible wrappers.

``PhysicsDepthTransformer`` turns label maps into physics depth;
``MedianScaler`` learns the median-ratio scale between predicted and
reference depth. Both follow the estimator conventions (constructor only
stores parameters, fitted state ends in ``_``), so they work with
``clone``, ``get_params`` and pipelines.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .camera import CameraModel
from .evaluation import apply_scale, depth_metrics, median_scale
from .exceptions import InvalidInput
from .physics import PhysicsDepthConfig, physics_depth_from_categories
from .scene import LabelSchema, categorize, cityscapes_schema

_STAGES = ("road", "flat", "edge_extended", "dense")


def _as_stack(X, name="X"):
    a = np.asarray(X)
    if a.ndim == 2:
        return a[None], True
    if a.ndim != 3:
        raise InvalidInput(f"{name} must be (H, W) or (N, H, W), got shape {a.shape}")
    return a, False


class PhysicsDepthTransformer(TransformerMixin, BaseEstimator):
    """Label maps in, metric physics depth out.

    ``transform`` accepts one (H, W) class-ID map or a stack (N, H, W) and
    returns float64 depth of the same shape with NaN where the selected
    ``stage`` has no value. Label maps whose size differs from the camera
    image are handled by rescaling the intrinsics.
    """

    def __init__(self, camera=None, schema=None, stage="dense", horizon_epsilon=1e-6,
                 max_depth=120.0, sky_factor=1.5, inpaint_radius=5, per_axis_rays=False):
        self.camera = camera
        self.schema = schema
        self.stage = stage
        self.horizon_epsilon = horizon_epsilon
        self.max_depth = max_depth
        self.sky_factor = sky_factor
        self.inpaint_radius = inpaint_radius
        self.per_axis_rays = per_axis_rays

    def fit(self, X=None, y=None):
        if not isinstance(self.camera, CameraModel):
            raise InvalidInput("camera must be a CameraModel")
        if self.stage not in _STAGES:
            raise InvalidInput(f"stage must be one of {_STAGES}, got {self.stage!r}")
        if self.schema is not None and not isinstance(self.schema, LabelSchema):
            raise InvalidInput("schema must be a LabelSchema or None")
        self.config_ = PhysicsDepthConfig(self.horizon_epsilon, self.max_depth, self.sky_factor,
                                          self.inpaint_radius, self.per_axis_rays)
        self.schema_ = self.schema if self.schema is not None else cityscapes_schema("train")
        return self

    def _camera_for(self, shape):
        h, w = shape
        cam = self.camera
        if cam.intrinsics.shape != (h, w):
            cam = cam.rescaled(w, h)
        return cam

    def compute(self, labels):
        """Full :class:`PhysicsDepthResult` for a single label map."""
        check_is_fitted(self, "config_")
        labels = np.asarray(labels)
        cats = categorize(labels, self.schema_)
        return physics_depth_from_categories(self._camera_for(labels.shape), cats, self.config_)

    def transform(self, X):
        check_is_fitted(self, "config_")
        stack, single = _as_stack(X)
        out = np.empty(stack.shape, dtype=np.float64)
        for k, labels in enumerate(stack):
            depth = getattr(self.compute(labels), self.stage)
            out[k] = np.where(depth.valid, depth.values, np.nan)
        return out[0] if single else out


class MedianScaler(TransformerMixin, BaseEstimator):
    """Aligns predicted depth to a reference by the median of ``ref / pred``.

    ``fit(X, y)`` takes predictions ``X`` and reference depth ``y`` (arrays
    or DepthMaps, NaN / non-positive = invalid) and stores ``scale_``.
    """

    def __init__(self, depth_range=None):
        self.depth_range = depth_range

    def fit(self, X, y):
        self.scale_ = median_scale(X, y, self.depth_range)
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        return apply_scale(X, self.scale_)

    def score(self, X, y):
        """delta < 1.25 accuracy of the scaled prediction against ``y``."""
        check_is_fitted(self, "scale_")
        rng = self.depth_range or (1e-3, 80.0)
        return depth_metrics(self.transform(X), y, rng).delta1
