"""Pinhole camera geometry.

Conventions used throughout the package:

* image coordinates are continuous pixels with the origin at the top-left
  corner of the top-left pixel; integer pixel ``(i, j)`` (column, row) is
  sampled at ``(i + 0.5, j + 0.5)``;
* the camera frame has x to the right, y downward and z along the optical
  axis;
* angles are radians and lengths meters.

All functions are pure and vectorize over leading array dimensions.
"""

from dataclasses import dataclass, replace

import numpy as np

from .exceptions import BehindCamera, InvalidDepth, InvalidInput


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    ox: float
    oy: float
    width: int
    height: int

    def __post_init__(self):
        vals = (self.fx, self.fy, self.ox, self.oy)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidInput("intrinsics must be finite")
        if self.width < 1 or self.height < 1:
            raise InvalidInput(f"image size must be positive, got {self.width}x{self.height}")
        if self.fx <= 0 or self.fy <= 0:
            raise InvalidInput(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")
        if not (0 <= self.ox < self.width and 0 <= self.oy < self.height):
            raise InvalidInput(
                f"principal point ({self.ox}, {self.oy}) outside {self.width}x{self.height} image"
            )

    @property
    def focal(self):
        """Mean focal length ``(fx + fy) / 2``."""
        return 0.5 * (self.fx + self.fy)

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def K(self):
        return np.array(
            [[self.fx, 0.0, self.ox], [0.0, self.fy, self.oy], [0.0, 0.0, 1.0]]
        )

    @property
    def K_inv(self):
        # closed-form inverse of the upper-triangular K
        return np.array(
            [
                [1.0 / self.fx, 0.0, -self.ox / self.fx],
                [0.0, 1.0 / self.fy, -self.oy / self.fy],
                [0.0, 0.0, 1.0],
            ]
        )


@dataclass(frozen=True)
class Extrinsics:
    camera_height: float
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite(v) for v in (self.camera_height, self.roll, self.pitch, self.yaw)):
            raise InvalidInput("extrinsics must be finite")
        if self.camera_height <= 0:
            raise InvalidInput(f"camera_height must be positive, got {self.camera_height}")


@dataclass(frozen=True)
class CameraModel:
    intrinsics: Intrinsics
    extrinsics: Extrinsics

    @property
    def rotation(self):
        return rotation_from_euler(self.extrinsics)

    def rescaled(self, new_width, new_height):
        return replace(self, intrinsics=rescale_intrinsics(self.intrinsics, new_width, new_height))

    def to_dict(self):
        i, e = self.intrinsics, self.extrinsics
        return {
            "intrinsics": {
                "fx": i.fx, "fy": i.fy, "ox": i.ox, "oy": i.oy,
                "width": i.width, "height": i.height,
            },
            "extrinsics": {
                "camera_height": e.camera_height,
                "roll": e.roll, "pitch": e.pitch, "yaw": e.yaw,
            },
        }

    @classmethod
    def from_dict(cls, d):
        try:
            i, e = d["intrinsics"], d["extrinsics"]
            intr = Intrinsics(
                float(i["fx"]), float(i["fy"]), float(i["ox"]), float(i["oy"]),
                int(i["width"]), int(i["height"]),
            )
            ext = Extrinsics(
                float(e["camera_height"]),
                float(e.get("roll", 0.0)), float(e.get("pitch", 0.0)), float(e.get("yaw", 0.0)),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidInput(f"camera dict missing field: {exc}") from exc
        return cls(intr, ext)


def pixel_centers(width, height):
    """Continuous (u, v) coordinates of every pixel center, each (H, W)."""
    u = np.arange(width, dtype=np.float64) + 0.5
    v = np.arange(height, dtype=np.float64) + 0.5
    return np.meshgrid(u, v)


def pixel_ray(intr, u_img, v_img, per_axis=False):
    """Unit ray through image point ``(u_img, v_img)``.

    The ray is ``[u, v, f] / |[u, v, f]|`` with ``(u, v)`` measured from the
    principal point and ``f`` the mean focal length. With ``per_axis=True``
    the direction is ``(u / fx, v / fy, 1)`` instead, the exact pinhole
    back-projection when ``fx != fy``.
    """
    u_img = np.asarray(u_img, dtype=np.float64)
    v_img = np.asarray(v_img, dtype=np.float64)
    if not (np.all(np.isfinite(u_img)) and np.all(np.isfinite(v_img))):
        raise InvalidInput("pixel coordinates must be finite")
    u = u_img - intr.ox
    v = v_img - intr.oy
    if per_axis:
        r = np.stack(np.broadcast_arrays(u / intr.fx, v / intr.fy, np.ones_like(u)), axis=-1)
    else:
        r = np.stack(np.broadcast_arrays(u, v, np.full_like(u, intr.focal)), axis=-1)
    return r / np.linalg.norm(r, axis=-1, keepdims=True)


def rescale_intrinsics(intr, new_width, new_height):
    if intr.width <= 0 or intr.height <= 0:
        raise InvalidInput("original image dimensions must be positive")
    if new_width < 1 or new_height < 1:
        raise InvalidInput(f"new size must be at least 1x1, got {new_width}x{new_height}")
    sw = new_width / intr.width
    sh = new_height / intr.height
    return Intrinsics(
        fx=sw * intr.fx, fy=sh * intr.fy, ox=sw * intr.ox, oy=sh * intr.oy,
        width=int(new_width), height=int(new_height),
    )


def _r_roll(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def _r_pitch(b):
    c, s = np.cos(b), np.sin(b)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def _r_yaw(g):
    c, s = np.cos(g), np.sin(g)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation_from_euler(ext):
    """Camera-to-ground rotation ``R_yaw @ R_pitch @ R_roll``.

    ``roll`` turns about the camera x axis, ``pitch`` about y and ``yaw``
    about the optical axis; each factor uses the sign layout
    ``[[1, 0, 0], [0, c, s], [0, -s, c]]`` (and its cyclic analogues), so a
    positive ``roll`` tilts the optical axis toward the ground.
    """
    return _r_yaw(ext.yaw) @ _r_pitch(ext.pitch) @ _r_roll(ext.roll)


def euler_from_rotation(R):
    """Inverse of :func:`rotation_from_euler`, returning ``(roll, pitch, yaw)``.

    Each factor equals a right-handed rotation by the negated angle, so this
    is a standard ZYX decomposition with signs flipped. Valid away from
    ``|pitch| = pi/2``.
    """
    R = np.asarray(R, dtype=np.float64)
    pitch = np.arcsin(np.clip(R[2, 0], -1.0, 1.0))
    roll = -np.arctan2(R[2, 1], R[2, 2])
    yaw = -np.arctan2(R[1, 0], R[0, 0])
    return float(roll), float(pitch), float(yaw)


def rotate_ray(R, r):
    return np.asarray(r, dtype=np.float64) @ np.asarray(R, dtype=np.float64).T


def project(intr, point):
    """Project camera-frame points (..., 3) to image coordinates ``(u, v)``."""
    p = np.asarray(point, dtype=np.float64)
    z = p[..., 2]
    if np.any(~(z > 0)):
        raise BehindCamera("cannot project points with z <= 0")
    u = intr.fx * p[..., 0] / z + intr.ox
    v = intr.fy * p[..., 1] / z + intr.oy
    return u, v


def unproject(intr, u_img, v_img, depth):
    """Back-project image points at the given z-depth to camera-frame points."""
    depth = np.asarray(depth, dtype=np.float64)
    if np.any(~(depth > 0)) or not np.all(np.isfinite(depth)):
        raise InvalidDepth("depth must be positive and finite")
    u_img = np.asarray(u_img, dtype=np.float64)
    v_img = np.asarray(v_img, dtype=np.float64)
    x = (u_img - intr.ox) / intr.fx
    y = (v_img - intr.oy) / intr.fy
    x, y, d = np.broadcast_arrays(x, y, depth)
    return np.stack([d * x, d * y, d], axis=-1)
