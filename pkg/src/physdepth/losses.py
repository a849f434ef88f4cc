"""Training-signal kernels: physics supervision, view synthesis, photometric,
smoothness and 2-D flow consistency losses, plus a block-matching flow used
to feed the last one.

Per-pixel loss maps use NaN for pixels without a defined loss. Scalar
reductions use ``numpy.sum`` (pairwise summation in a fixed order), so they
are reproducible run to run.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ._validation import check_image, check_same_shape, check_weights
from .camera import pixel_centers
from .exceptions import EmptyPriorWarning, InvalidInput
from .scene import DepthMap, FlowField, Provenance

SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2

DEFAULT_CONFIDENCE = {
    Provenance.NONE: 0.0,
    Provenance.ROAD: 1.0,
    Provenance.FLAT: 0.8,
    Provenance.EDGE_EXTENDED: 0.5,
    Provenance.INPAINTED: 0.2,
    Provenance.SKY: 0.0,
    Provenance.EXTERNAL: 1.0,
}


@dataclass(frozen=True)
class LossConfig:
    alpha_ssim: float = 0.85
    smooth_lambda: float = 1e-3
    l2d_alpha: float = 1.0
    l2d_beta: float = 1.0
    normalize_phy: bool = True

    def __post_init__(self):
        if not 0.0 <= self.alpha_ssim <= 1.0:
            raise InvalidInput("alpha_ssim must lie in [0, 1]")
        for name in ("smooth_lambda", "l2d_alpha", "l2d_beta"):
            if not getattr(self, name) >= 0:
                raise InvalidInput(f"{name} must be >= 0")


@dataclass(frozen=True)
class RigidTransform:
    """Maps points ``p`` to ``rotation @ p + translation``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if R.shape != (3, 3) or not np.all(np.isfinite(R)) or not np.all(np.isfinite(t)):
            raise InvalidInput("rotation must be a finite 3x3 matrix and translation a finite 3-vector")
        if np.abs(R.T @ R - np.eye(3)).max() > 1e-9 or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise InvalidInput("rotation must be orthonormal with det +1")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points):
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def inverse(self):
        Rt = self.rotation.T
        return RigidTransform(Rt, -Rt @ self.translation)

    def compose(self, other):
        """``self`` after ``other``."""
        return RigidTransform(self.rotation @ other.rotation,
                              self.rotation @ other.translation + self.translation)

    def to_dict(self):
        return {"rotation": self.rotation.tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(np.array(d["rotation"], dtype=np.float64),
                       np.array(d["translation"], dtype=np.float64))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"bad rigid transform: {exc}") from exc


def _depth_arrays(depth):
    if isinstance(depth, DepthMap):
        return depth.values.astype(np.float64), depth.valid
    d = np.asarray(depth, dtype=np.float64)
    return d, np.isfinite(d) & (d > 0)


def confidence_map(result, table=None):
    """Per-pixel supervision weight looked up from each pixel's provenance.

    ``result`` is a :class:`PhysicsDepthResult` (its dense map is used) or a
    :class:`DepthMap`. ``table`` overrides entries of the default table and
    may be keyed by :class:`Provenance` or by name (``"road"``, ...).
    """
    depth = getattr(result, "dense", result)
    weights = dict(DEFAULT_CONFIDENCE)
    for key, w in (table or {}).items():
        prov = Provenance[key.upper()] if isinstance(key, str) else Provenance(key)
        if not 0.0 <= w <= 1.0:
            raise InvalidInput(f"confidence for {prov.name} must lie in [0, 1]")
        weights[prov] = float(w)
    lut = np.array([weights[Provenance(i)] for i in range(len(Provenance))])
    return lut[depth.provenance]


def physics_supervision_loss(pred, phys, weights=None, normalize=True):
    """Weighted squared error between predicted and physics depth.

    Sums ``w * (phys - pred)^2`` over pixels valid in both maps and, with
    ``normalize`` (default), divides by the summed weight. Returns 0 and
    emits :class:`EmptyPriorWarning` if no pixel carries weight.
    """
    p, p_ok = _depth_arrays(pred)
    q, q_ok = _depth_arrays(phys)
    check_same_shape(p, q, ("pred", "phys"))
    w = np.ones_like(p) if weights is None else check_weights(weights, p.shape)
    mask = p_ok & q_ok
    w = np.where(mask, w, 0.0)
    wsum = np.sum(w)
    if wsum == 0:
        warnings.warn("physics supervision over zero weighted pixels", EmptyPriorWarning, stacklevel=2)
        return 0.0
    sq = np.where(mask, (q - p) ** 2, 0.0)
    total = np.sum(w * sq)
    return float(total / wsum) if normalize else float(total)


def reproject(target_depth, pose, intr):
    """Where each target pixel lands in the source view.

    Unprojects target pixel centers with their depth, applies ``pose``
    (target camera frame to source camera frame) and projects with ``intr``.
    Returns ``(u, v, ok)`` in continuous image coordinates; ``ok`` is False
    for invalid depth and for points that end up behind the source camera.
    """
    d, valid = _depth_arrays(target_depth)
    if d.shape != intr.shape:
        raise InvalidInput(f"depth {d.shape} does not match intrinsics {intr.shape}")
    u, v = pixel_centers(intr.width, intr.height)
    dd = np.where(valid, d, 1.0)
    pts = np.stack([dd * (u - intr.ox) / intr.fx, dd * (v - intr.oy) / intr.fy, dd], axis=-1)
    moved = pose.apply(pts)
    z = moved[..., 2]
    ok = valid & (z > 0)
    zs = np.where(ok, z, 1.0)
    us = intr.fx * moved[..., 0] / zs + intr.ox
    vs = intr.fy * moved[..., 1] / zs + intr.oy
    return np.where(ok, us, np.nan), np.where(ok, vs, np.nan), ok


def bilinear_sample(image, u, v):
    """Sample (H, W, C) ``image`` at continuous coordinates; returns ``(values, inside)``.

    Pixel ``(i, j)`` sits at ``(i + 0.5, j + 0.5)``; coordinates outside the
    hull of pixel centers are reported as not inside.
    """
    img = check_image(image)
    H, W, _ = img.shape
    x = np.asarray(u, dtype=np.float64) - 0.5
    y = np.asarray(v, dtype=np.float64) - 0.5
    # round-trip round-off must not push border centers outside the hull
    tol = 1e-9
    inside = (np.isfinite(x) & np.isfinite(y) & (x >= -tol) & (x <= W - 1 + tol)
              & (y >= -tol) & (y <= H - 1 + tol))
    xs = np.where(inside, np.clip(x, 0, W - 1), 0.0)
    ys = np.where(inside, np.clip(y, 0, H - 1), 0.0)
    x0 = np.minimum(np.floor(xs).astype(np.int64), max(W - 2, 0))
    y0 = np.minimum(np.floor(ys).astype(np.int64), max(H - 2, 0))
    x1 = np.minimum(x0 + 1, W - 1)
    y1 = np.minimum(y0 + 1, H - 1)
    fx = (xs - x0)[..., None]
    fy = (ys - y0)[..., None]
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    out = top * (1 - fy) + bot * fy
    out[~inside] = 0.0
    return out, inside


def warp_image(src, target_depth, pose, intr):
    """Reconstruct the target view by sampling ``src`` where target pixels land.

    Returns ``(recon, valid)``; invalid pixels hold 0.
    """
    img = check_image(src)
    if img.shape[:2] != intr.shape:
        raise InvalidInput(f"source image {img.shape[:2]} does not match intrinsics {intr.shape}")
    u, v, ok = reproject(target_depth, pose, intr)
    recon, inside = bilinear_sample(img, u, v)
    valid = ok & inside
    recon[~valid] = 0.0
    return recon, valid


def _box3(a):
    # 3x3 mean with mirror padding (edge not repeated)
    p = np.pad(a, ((1, 1), (1, 1), (0, 0)), mode="reflect")
    H, W = a.shape[:2]
    acc = np.zeros_like(a)
    for di in range(3):
        for dj in range(3):
            acc = acc + p[di:di + H, dj:dj + W]
    return acc / 9.0


def ssim(a, b):
    """Per-pixel SSIM over a 3x3 box window, averaged over channels."""
    x = check_image(a, "a")
    y = check_image(b, "b")
    check_same_shape(x, y, ("a", "b"))
    if min(x.shape[:2]) < 2:
        raise InvalidInput("SSIM needs images at least 2x2")
    mx, my = _box3(x), _box3(y)
    sx = _box3(x * x) - mx * mx
    sy = _box3(y * y) - my * my
    sxy = _box3(x * y) - mx * my
    num = (2 * mx * my + SSIM_C1) * (2 * sxy + SSIM_C2)
    den = (mx * mx + my * my + SSIM_C1) * (sx + sy + SSIM_C2)
    return np.mean(num / den, axis=2)


def photometric_error(target, recon, alpha=0.85):
    """Per-pixel ``alpha/2 * (1 - SSIM) + (1 - alpha) * L1`` (L1 averaged over channels)."""
    x = check_image(target, "target")
    y = check_image(recon, "recon")
    check_same_shape(x, y, ("target", "recon"))
    l1 = np.mean(np.abs(x - y), axis=2)
    return alpha / 2.0 * (1.0 - ssim(x, y)) + (1.0 - alpha) * l1


def photometric_loss(target, recon, valid=None, cfg=LossConfig()):
    """Photometric error map (NaN off ``valid``) and its mean over valid pixels."""
    err = photometric_error(target, recon, cfg.alpha_ssim)
    mask = np.ones(err.shape, bool) if valid is None else np.asarray(valid, dtype=bool)
    check_same_shape(err, mask, ("images", "valid"))
    err = np.where(mask, err, np.nan)
    n = int(np.count_nonzero(mask))
    if n == 0:
        warnings.warn("photometric loss over zero valid pixels", EmptyPriorWarning, stacklevel=2)
        return err, 0.0
    return err, float(np.sum(err[mask]) / n)


def min_reprojection(loss_fwd, loss_bwd):
    """Pixel-wise minimum of two loss maps; NaN marks pixels without a loss."""
    a = np.asarray(loss_fwd, dtype=np.float64)
    b = np.asarray(loss_bwd, dtype=np.float64)
    check_same_shape(a, b, ("loss_fwd", "loss_bwd"))
    return np.fmin(a, b)


def smoothness_loss(depth, image, lam=1e-3):
    """Edge-aware smoothness of mean-normalized disparity.

    ``lam * (mean_x(|dx d*| exp(-|dx I|)) + mean_y(|dy d*| exp(-|dy I|)))``
    where ``d* = (1/d) / mean(1/d)`` and each mean runs over neighbor pairs
    with valid depth on both sides.
    """
    d, valid = _depth_arrays(depth)
    img = check_image(image)
    if img.shape[:2] != d.shape:
        raise InvalidInput(f"image {img.shape[:2]} does not match depth {d.shape}")
    if not valid.any():
        warnings.warn("smoothness over zero valid pixels", EmptyPriorWarning, stacklevel=2)
        return 0.0
    if lam == 0:
        return 0.0
    disp = np.where(valid, 1.0 / np.where(valid, d, 1.0), 0.0)
    disp = disp / (np.sum(disp[valid]) / np.count_nonzero(valid))
    total = 0.0
    for axis in (1, 0):
        sl_a = [slice(None), slice(None)]
        sl_b = [slice(None), slice(None)]
        sl_a[axis] = slice(None, -1)
        sl_b[axis] = slice(1, None)
        sa, sb = tuple(sl_a), tuple(sl_b)
        pair = valid[sa] & valid[sb]
        if not pair.any():
            continue
        gd = np.abs(disp[sa] - disp[sb])
        gi = np.mean(np.abs(img[sa] - img[sb]), axis=2)
        term = gd * np.exp(-gi)
        total += np.sum(term[pair]) / np.count_nonzero(pair)
    return float(lam * total)


def spatial_2d_loss(v_t, v_t1, alpha=1.0, beta=1.0, eps=1e-9):
    """Motion-consistency loss over matched flow vectors.

    ``sum_i alpha * |v_t1_i - v_t_i|^2 + beta * (1 - cos theta_i)``; pairs
    where either vector is shorter than ``eps`` skip the angular term.
    """
    a = np.asarray(v_t, dtype=np.float64).reshape(-1, 2)
    b = np.asarray(v_t1, dtype=np.float64).reshape(-1, 2)
    if a.shape != b.shape:
        raise InvalidInput(f"match arrays differ in shape: {a.shape} vs {b.shape}")
    if len(a) == 0:
        raise InvalidInput("spatial_2d_loss needs at least one match")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidInput("motion vectors must be finite")
    pos = np.sum((b - a) ** 2, axis=1)
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    ok = (na >= eps) & (nb >= eps)
    cos = np.ones(len(a))
    cos[ok] = np.sum(a[ok] * b[ok], axis=1) / (na[ok] * nb[ok])
    return float(np.sum(alpha * pos + beta * (1.0 - cos)))


def flow_matches(flow_t, flow_t1):
    """Vectors of two flow fields at their jointly valid pixels, as (N, 2) arrays."""
    if flow_t.shape != flow_t1.shape:
        raise InvalidInput(f"flow fields differ in shape: {flow_t.shape} vs {flow_t1.shape}")
    both = flow_t.valid & flow_t1.valid
    return flow_t.vectors[both], flow_t1.vectors[both]


def _patch_sum(a, r):
    # sum over (2r+1)^2 windows, 'valid' region only; direct adds keep exact zeros exact
    H, W = a.shape
    rows = np.zeros((H - 2 * r, W))
    for k in range(2 * r + 1):
        rows = rows + a[k:k + H - 2 * r]
    out = np.zeros((H - 2 * r, W - 2 * r))
    for k in range(2 * r + 1):
        out = out + rows[:, k:k + W - 2 * r]
    return out


def block_matching_flow(a, b, patch=7, search=4):
    """Integer flow from ``a`` to ``b`` by exhaustive SSD block matching.

    Each pixel takes the displacement (within ``search`` px) whose patch in
    ``b`` best matches its patch in ``a``. Ties go to the shortest
    displacement, then to row-major order of ``(dy, dx)``. Pixels whose
    patch never fits inside both images are invalid.
    """
    x = check_image(a, "a").mean(axis=2)
    y = check_image(b, "b").mean(axis=2)
    check_same_shape(x, y, ("a", "b"))
    if patch < 1 or patch % 2 == 0:
        raise InvalidInput(f"patch must be odd and positive, got {patch}")
    if search < 1:
        raise InvalidInput(f"search must be >= 1, got {search}")
    H, W = x.shape
    if H < patch or W < patch:
        raise InvalidInput(f"images {W}x{H} are smaller than the {patch}px patch")
    r = patch // 2
    best = np.full((H, W), np.inf)
    flow = np.zeros((H, W, 2))
    offsets = sorted(
        ((dy, dx) for dy in range(-search, search + 1) for dx in range(-search, search + 1)),
        key=lambda d: (d[0] ** 2 + d[1] ** 2, d[0], d[1]),
    )
    for dy, dx in offsets:
        # overlap where both p and p + d lie in the image
        ya0, ya1 = max(0, -dy), min(H, H - dy)
        xa0, xa1 = max(0, -dx), min(W, W - dx)
        if ya1 - ya0 < patch or xa1 - xa0 < patch:
            continue
        diff = (x[ya0:ya1, xa0:xa1] - y[ya0 + dy:ya1 + dy, xa0 + dx:xa1 + dx]) ** 2
        ssd = _patch_sum(diff, r)
        region = (slice(ya0 + r, ya1 - r), slice(xa0 + r, xa1 - r))
        better = ssd < best[region]
        best[region] = np.where(better, ssd, best[region])
        flow[region][better] = (dx, dy)
    valid = np.isfinite(best)
    flow[~valid] = 0.0
    return FlowField(flow, valid)
