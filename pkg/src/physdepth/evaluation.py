"""Depth evaluation: error metrics, percentage-error fractions and median
scale alignment.

Inputs may be :class:`DepthMap` objects or plain arrays (non-finite or
non-positive entries count as invalid). Reductions use ``math.fsum``, so
every metric is the correctly rounded value of its defining sum and does
not depend on pixel order.
"""

import csv
import io
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .exceptions import EmptyOverlap, InvalidInput
from .scene import DepthMap

DEFAULT_RANGE = (1e-3, 80.0)


@dataclass(frozen=True)
class MetricsReport:
    abs_rel: float
    sq_rel: float
    rmse: float
    rmse_log: float
    delta1: float
    delta2: float
    delta3: float
    n_pixels: int
    scale_applied: float = 1.0

    def to_dict(self):
        return asdict(self)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    def csv_row(self):
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerow([getattr(self, n) for n in self.field_names()])
        return buf.getvalue()


@dataclass(frozen=True)
class PctErrorReport:
    frac_within_5pct: float
    frac_within_10pct: float
    n_pixels: int

    def to_dict(self):
        return asdict(self)


def _arrays(depth, name):
    if isinstance(depth, DepthMap):
        return depth.values.astype(np.float64), depth.valid
    d = np.asarray(depth, dtype=np.float64)
    if d.ndim < 1:
        raise InvalidInput(f"{name} must be an array or DepthMap")
    return d, np.isfinite(d) & (d > 0)


def _overlap(pred, gt, depth_range=None):
    p, p_ok = _arrays(pred, "pred")
    g, g_ok = _arrays(gt, "gt")
    if p.shape != g.shape:
        raise InvalidInput(f"pred {p.shape} and gt {g.shape} differ in shape")
    mask = p_ok & g_ok
    if depth_range is not None:
        lo, hi = depth_range
        mask &= (g >= lo) & (g <= hi)
    if not mask.any():
        raise EmptyOverlap("no pixel is valid in both maps")
    return p[mask], g[mask]


def depth_metrics(pred, gt, depth_range=DEFAULT_RANGE, scale_applied=1.0):
    """Standard monocular-depth error metrics over the valid overlap.

    Only pixels valid in both maps with ground truth inside ``depth_range``
    (inclusive) count; predictions are not clamped.
    """
    p, g = _overlap(pred, gt, depth_range)
    n = len(p)
    diff = p - g
    thresh = np.maximum(p / g, g / p)
    # libm log: numpy's SIMD log may differ by an ulp across CPU dispatch paths
    log_p = np.fromiter(map(math.log, p.tolist()), np.float64, n)
    log_g = np.fromiter(map(math.log, g.tolist()), np.float64, n)
    log_diff = log_p - log_g
    return MetricsReport(
        abs_rel=math.fsum(np.abs(diff) / g) / n,
        sq_rel=math.fsum(diff ** 2 / g) / n,
        rmse=math.sqrt(math.fsum(diff ** 2) / n),
        rmse_log=math.sqrt(math.fsum(log_diff ** 2) / n),
        delta1=int(np.count_nonzero(thresh < 1.25)) / n,
        delta2=int(np.count_nonzero(thresh < 1.25 ** 2)) / n,
        delta3=int(np.count_nonzero(thresh < 1.25 ** 3)) / n,
        n_pixels=n,
        scale_applied=float(scale_applied),
    )


def within_pct(pred, gt, pct, depth_range=None):
    """Fraction of overlapping pixels with ``|pred - gt| / gt <= pct / 100``."""
    if not pct >= 0:
        raise InvalidInput(f"pct must be >= 0, got {pct}")
    p, g = _overlap(pred, gt, depth_range)
    return int(np.count_nonzero(np.abs(p - g) / g <= pct / 100.0)) / len(p)


def pct_error_report(pred, gt, depth_range=None):
    p, g = _overlap(pred, gt, depth_range)
    rel = np.abs(p - g) / g
    n = len(p)
    return PctErrorReport(
        frac_within_5pct=int(np.count_nonzero(rel <= 0.05)) / n,
        frac_within_10pct=int(np.count_nonzero(rel <= 0.10)) / n,
        n_pixels=n,
    )


def median_scale(pred, ref, depth_range=None):
    """Median of ``ref / pred`` over the overlap: the factor that aligns ``pred`` to ``ref``."""
    p, r = _overlap(pred, ref, depth_range)
    return float(np.median(r / p))


def apply_scale(pred, s):
    """Multiply every valid depth by ``s``. Returns the same kind it was given."""
    if not (np.isfinite(s) and s > 0):
        raise InvalidInput(f"scale must be positive and finite, got {s!r}")
    if isinstance(pred, DepthMap):
        valid = pred.valid
        values = np.where(valid, pred.values.astype(np.float64) * s, 0.0)
        return DepthMap(values, pred.provenance.copy())
    return np.asarray(pred, dtype=np.float64) * s


def compare_scales(pred, lidar_gt, phys, depth_range=DEFAULT_RANGE):
    """Metrics of ``pred`` aligned by LiDAR scale vs. by physics-depth scale.

    Both aligned predictions are scored against ``lidar_gt``. Returns
    ``(lidar_scaled_report, physics_scaled_report)``.
    """
    s_lidar = median_scale(pred, lidar_gt)
    s_phys = median_scale(pred, phys)
    return (
        depth_metrics(apply_scale(pred, s_lidar), lidar_gt, depth_range, s_lidar),
        depth_metrics(apply_scale(pred, s_phys), lidar_gt, depth_range, s_phys),
    )
