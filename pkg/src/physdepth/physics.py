"""Physics depth: metric depth priors from camera geometry and semantics.

The pipeline intersects every road/flat pixel ray with the ground plane,
copies the contact depth up vertical objects standing on that ground, and
densifies the rest with Telea inpainting plus a constant far depth for sky.
"""

from dataclasses import dataclass

import numpy as np

from .camera import pixel_centers, pixel_ray, rotate_ray
from .exceptions import EmptyPrior, InvalidInput
from .inpaint import telea
from .scene import Category, DepthMap, Provenance, categorize


@dataclass(frozen=True)
class PhysicsDepthConfig:
    horizon_epsilon: float = 1e-6
    max_depth: float = 120.0
    sky_factor: float = 1.5
    inpaint_radius: int = 5
    per_axis_rays: bool = False

    def __post_init__(self):
        if not self.horizon_epsilon > 0:
            raise InvalidInput("horizon_epsilon must be > 0")
        if not self.max_depth > 0:
            raise InvalidInput("max_depth must be > 0")
        if not self.sky_factor > 1:
            raise InvalidInput("sky_factor must be > 1")
        if int(self.inpaint_radius) != self.inpaint_radius or self.inpaint_radius < 1:
            raise InvalidInput("inpaint_radius must be an integer >= 1")


@dataclass
class PhysicsDepthResult:
    road: DepthMap
    flat: DepthMap
    edge_extended: DepthMap
    dense: DepthMap
    categories: np.ndarray

    def stages(self):
        return {
            "road": self.road,
            "flat": self.flat,
            "edge_extended": self.edge_extended,
            "dense": self.dense,
        }

    def summary(self):
        h, w = self.dense.shape
        return {
            "width": w,
            "height": h,
            "valid_pixels": {name: d.valid_count() for name, d in self.stages().items()},
        }


def _check_raster(cam, categories):
    categories = np.asarray(categories)
    if categories.shape != cam.intrinsics.shape:
        raise InvalidInput(
            f"raster shape {categories.shape} does not match camera image size {cam.intrinsics.shape}"
        )
    return categories


def ground_points(cam, cfg=PhysicsDepthConfig()):
    """Camera-frame ground intersection of every pixel-center ray, (H, W, 3)."""
    intr = cam.intrinsics
    u, v = pixel_centers(intr.width, intr.height)
    return ground_intersection(cam, u, v, cfg)


def ground_intersection(cam, u_img, v_img, cfg=PhysicsDepthConfig()):
    """Intersect the rays through image points with the ground plane.

    The unit ray is rotated into the ground-aligned frame, scaled to reach
    ``y = camera_height`` (distance ``h / r_v``) and rotated back. Returns
    ``(points, hit)`` with camera-frame points (NaN where the ray does not
    point below the horizon by more than ``cfg.horizon_epsilon``).
    """
    rays = pixel_ray(cam.intrinsics, u_img, v_img, per_axis=cfg.per_axis_rays)
    R = cam.rotation
    rc = rotate_ray(R, rays)
    down = rc[..., 1]
    hit = down > cfg.horizon_epsilon
    dist = np.where(hit, cam.extrinsics.camera_height / np.where(hit, down, 1.0), np.nan)
    p_ground = dist[..., None] * rc
    # back to the camera frame before reading off z (ground frame != camera frame once tilted)
    p_cam = rotate_ray(R.T, p_ground)
    return p_cam, hit


def ground_physics_depth(cam, categories, which="road", cfg=PhysicsDepthConfig()):
    """Physics depth on ground pixels.

    ``which="road"`` keeps road pixels only; ``"flat"`` keeps road and other
    flat categories. Pixels at or above the horizon, or with depth beyond
    ``cfg.max_depth``, stay invalid.
    """
    categories = _check_raster(cam, categories)
    if which in ("road", "road_only"):
        selected = categories == Category.ROAD
    elif which in ("flat", "all_flat"):
        selected = (categories == Category.ROAD) | (categories == Category.FLAT)
    else:
        raise InvalidInput(f"which must be 'road' or 'flat', got {which!r}")

    p_cam, hit = ground_points(cam, cfg)
    z = p_cam[..., 2]
    ok = selected & hit & (z > 0) & (z <= cfg.max_depth)
    prov = np.where(
        categories == Category.ROAD, np.uint8(Provenance.ROAD), np.uint8(Provenance.FLAT)
    )
    return DepthMap(np.where(ok, z, 0.0), np.where(ok, prov, 0))


def edge_extend(ground, categories):
    """Propagate ground-contact depth up runs of vertical-category pixels.

    Each column is scanned bottom to top. A run of vertical pixels whose
    pixel immediately below is valid (and not itself vertical) takes that
    contact depth; runs without such contact stay invalid. Pixels that are
    already valid are never modified.
    """
    categories = np.asarray(categories)
    if categories.shape != ground.shape:
        raise InvalidInput(f"categories {categories.shape} do not match depth {ground.shape}")
    out = ground.copy()
    vertical = categories == Category.VERTICAL
    if not vertical.any():
        return out
    h, w = ground.shape
    valid = ground.valid
    carry = np.full(w, np.nan, dtype=np.float32)
    for row in range(h - 1, -1, -1):
        vert = vertical[row]
        if row == h - 1:
            carry = np.full(w, np.nan, dtype=np.float32)
        else:
            below_vert = vertical[row + 1]
            contact = valid[row + 1] & ~below_vert
            carry = np.where(
                vert & contact, ground.values[row + 1],
                np.where(vert & below_vert, carry, np.float32(np.nan)),
            ).astype(np.float32)
        fill = vert & ~valid[row] & np.isfinite(carry)
        out.values[row, fill] = carry[fill]
        out.provenance[row, fill] = Provenance.EDGE_EXTENDED
    return out


def densify(extended, categories, cfg=PhysicsDepthConfig()):
    """Fill every remaining pixel.

    Non-sky holes are inpainted from the valid set; sky pixels get
    ``cfg.sky_factor`` times the largest non-sky depth after inpainting.
    """
    categories = np.asarray(categories)
    if categories.shape != extended.shape:
        raise InvalidInput(f"categories {categories.shape} do not match depth {extended.shape}")
    sky = categories == Category.SKY
    known = extended.valid
    if not (known & ~sky).any():
        raise EmptyPrior("no valid non-sky pixel to seed densification")

    out = extended.copy()
    holes = ~known & ~sky
    if holes.any():
        filled = telea(extended.values.astype(np.float64), known, cfg.inpaint_radius)
        out.values[holes] = filled[holes].astype(np.float32)
        out.provenance[holes] = Provenance.INPAINTED

    sky_holes = sky & ~known
    if sky_holes.any():
        far = float(out.values[~sky].astype(np.float64).max())
        out.values[sky_holes] = np.float32(cfg.sky_factor * far)
        out.provenance[sky_holes] = Provenance.SKY
    return out


def physics_depth_from_categories(cam, categories, cfg=PhysicsDepthConfig(), extend_from="flat"):
    """All four stages from a category raster; ``extend_from`` picks the ground stage
    that edge extension grows from."""
    categories = _check_raster(cam, categories)
    road = ground_physics_depth(cam, categories, "road", cfg)
    flat = ground_physics_depth(cam, categories, "flat", cfg)
    if extend_from not in ("road", "flat"):
        raise InvalidInput(f"extend_from must be 'road' or 'flat', got {extend_from!r}")
    extended = edge_extend(flat if extend_from == "flat" else road, categories)
    dense = densify(extended, categories, cfg)
    return PhysicsDepthResult(road, flat, extended, dense, categories)


def compute_pipeline(cam, labels, schema, cfg=PhysicsDepthConfig()):
    """Run categorize, road and flat ground depth, edge extension and densify."""
    categories = categorize(labels, schema)
    return physics_depth_from_categories(cam, categories, cfg)
