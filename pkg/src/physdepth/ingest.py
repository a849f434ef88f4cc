"""Calibration and sensor-file parsers, and LiDAR-to-depth projection.

Parsers never guess: malformed input raises :class:`ParseError` carrying a
line number, JSON path or byte offset, and no partial result is returned.
"""

import json
import re
from dataclasses import dataclass, field

import numpy as np

from .camera import CameraModel, Extrinsics, Intrinsics, euler_from_rotation
from .exceptions import InvalidInput, ParseError
from .losses import RigidTransform
from .scene import DepthMap, Provenance

KITTI_CAMERA_HEIGHT = 1.65

_KITTI_SIZES = [
    (re.compile(r"^(P_rect_\d\d|P\d|Tr|Tr_velo_to_cam|Tr_imu_to_velo)$"), 12),
    (re.compile(r"^(R_rect_\d\d|R_\d\d|K_\d\d|R)$"), 9),
    (re.compile(r"^(T_\d\d|T)$"), 3),
    (re.compile(r"^(S_\d\d|S_rect_\d\d|delta_f|delta_c)$"), 2),
    (re.compile(r"^D_\d\d$"), 5),
    (re.compile(r"^corner_dist$"), 1),
]
_KITTI_TEXT_KEYS = {"calib_time"}


def _expected_size(key):
    for pattern, n in _KITTI_SIZES:
        if pattern.match(key):
            return n
    return None


@dataclass
class KittiCalibration:
    """Parsed KITTI calibration text: every numeric entry as a flat float64 array."""

    entries: dict = field(default_factory=dict)
    text_entries: dict = field(default_factory=dict)

    def _get(self, *keys):
        for k in keys:
            if k in self.entries:
                return self.entries[k]
        raise ParseError(f"calibration has no {' or '.join(keys)} entry", location=keys[0])

    def projection(self, cam=2):
        return self._get(f"P_rect_{cam:02d}", f"P{cam}").reshape(3, 4)

    def rectification(self, cam=0):
        if f"R_rect_{cam:02d}" in self.entries:
            return self.entries[f"R_rect_{cam:02d}"].reshape(3, 3)
        return np.eye(3)

    def image_size(self, cam=2):
        w, h = self._get(f"S_rect_{cam:02d}")
        return int(round(w)), int(round(h))

    def intrinsics(self, cam=2, width=None, height=None):
        P = self.projection(cam)
        if width is None or height is None:
            width, height = self.image_size(cam)
        return Intrinsics(fx=P[0, 0], fy=P[1, 1], ox=P[0, 2], oy=P[1, 2],
                          width=int(width), height=int(height))

    def camera_model(self, cam=2, camera_height=KITTI_CAMERA_HEIGHT, width=None, height=None):
        return CameraModel(self.intrinsics(cam, width, height), Extrinsics(camera_height))

    def projection_offset(self, cam=2):
        """Translation hidden in the 4th column of the rectified projection, in meters."""
        P = self.projection(cam)
        K = P[:, :3]
        return np.linalg.solve(K, P[:, 3])


def parse_kitti_calib(text, require=()):
    """Parse ``key: v0 v1 ...`` lines (cam_to_cam, velo_to_cam or odometry calib.txt)."""
    calib = KittiCalibration()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        if not sep or not key:
            raise ParseError(f"expected 'key: values', got {line[:40]!r}", location=f"line {lineno}")
        if key in calib.entries or key in calib.text_entries:
            raise ParseError(f"duplicate key {key!r}", location=f"line {lineno}")
        if key in _KITTI_TEXT_KEYS:
            calib.text_entries[key] = rest.strip()
            continue
        try:
            values = np.array([float(tok) for tok in rest.split()], dtype=np.float64)
        except ValueError:
            raise ParseError(f"non-numeric value in {key!r}", location=f"line {lineno}") from None
        n = _expected_size(key)
        if len(values) == 0 or (n is not None and len(values) != n):
            raise ParseError(
                f"{key!r} has {len(values)} values, expected {n if n is not None else 'at least 1'}",
                location=f"line {lineno}",
            )
        if not np.all(np.isfinite(values)):
            raise ParseError(f"non-finite value in {key!r}", location=f"line {lineno}")
        calib.entries[key] = values
    for key in require:
        if key not in calib.entries:
            raise ParseError(f"missing required key {key!r}", location=key)
    return calib


def dump_kitti_calib(calib):
    lines = [f"{k}: {v}" for k, v in calib.text_entries.items()]
    lines += [f"{k}: " + " ".join(repr(float(x)) for x in v) for k, v in calib.entries.items()]
    return "\n".join(lines) + "\n"


def _orthonormalize(R, what):
    # KITTI prints rotations to ~7 digits; project onto SO(3) before use
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0 or np.abs(Q - R).max() > 1e-3:
        raise ParseError(f"{what} is not close to a rotation matrix", location=what)
    return Q


def velo_to_camera_transform(cam_calib, velo_calib, cam=2):
    """Rigid transform from the velodyne frame to rectified camera ``cam``.

    Chains velodyne extrinsics (``R``/``T`` or ``Tr``), the reference
    rectification ``R_rect_00`` and the baseline offset folded out of the
    rectified projection matrix.
    """
    if "Tr" in velo_calib.entries or "Tr_velo_to_cam" in velo_calib.entries:
        Tr = velo_calib._get("Tr", "Tr_velo_to_cam").reshape(3, 4)
        R, T = Tr[:, :3], Tr[:, 3]
    else:
        R = velo_calib._get("R").reshape(3, 3)
        T = velo_calib._get("T")
    R = _orthonormalize(R, "R")
    R_rect = _orthonormalize(cam_calib.rectification(0), "R_rect_00")
    offset = cam_calib.projection_offset(cam)
    return RigidTransform(R_rect @ R, R_rect @ T + offset)


@dataclass
class CityscapesCamera:
    fx: float
    fy: float
    u0: float
    v0: float
    z: float
    pitch: float
    roll: float
    yaw: float
    baseline: float = None
    x: float = 0.0
    y: float = 0.0
    width: int = 2048
    height: int = 1024

    def to_camera_model(self):
        """Camera model with the mounting rotation re-expressed in our Euler convention.

        Cityscapes angles rotate a vehicle frame (x forward, y left, z up) as
        ``Rz(yaw) Ry(pitch) Rx(roll)``; conjugating by the axis permutation
        into the camera frame (x right, y down, z forward) gives the
        camera-to-ground rotation, which is then decomposed.
        """
        def rx(a):
            c, s = np.cos(a), np.sin(a)
            return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])

        def ry(a):
            c, s = np.cos(a), np.sin(a)
            return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])

        def rz(a):
            c, s = np.cos(a), np.sin(a)
            return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])

        A = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
        R_c = A.T @ rz(self.yaw) @ ry(self.pitch) @ rx(self.roll) @ A
        roll, pitch, yaw = euler_from_rotation(R_c)
        intr = Intrinsics(self.fx, self.fy, self.u0, self.v0, self.width, self.height)
        return CameraModel(intr, Extrinsics(self.z, roll, pitch, yaw))


_CS_REQUIRED = (
    ("intrinsic", "fx"), ("intrinsic", "fy"), ("intrinsic", "u0"), ("intrinsic", "v0"),
    ("extrinsic", "z"), ("extrinsic", "pitch"), ("extrinsic", "roll"), ("extrinsic", "yaw"),
)


def parse_cityscapes_camera(doc, width=2048, height=1024):
    """Parse a Cityscapes per-image camera JSON (text or already-decoded dict)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", location=f"line {exc.lineno}") from exc
    if not isinstance(doc, dict):
        raise ParseError("camera JSON must be an object", location="$")
    vals = {}
    for section, name in _CS_REQUIRED:
        path = f"{section}.{name}"
        sec = doc.get(section)
        if not isinstance(sec, dict) or name not in sec:
            raise ParseError(f"missing field {path}", location=path)
        v = sec[name]
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
            raise ParseError(f"{path} must be a finite number, got {v!r}", location=path)
        vals[name] = float(v)
    ext = doc["extrinsic"]
    for opt in ("baseline", "x", "y"):
        if opt in ext:
            v = ext[opt]
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ParseError(f"extrinsic.{opt} must be a number", location=f"extrinsic.{opt}")
            vals[opt] = float(v)
    if vals["z"] <= 0:
        raise ParseError(f"extrinsic.z must be > 0 (camera above ground), got {vals['z']}",
                         location="extrinsic.z")
    for name in ("fx", "fy"):
        if vals[name] <= 0:
            raise ParseError(f"intrinsic.{name} must be > 0", location=f"intrinsic.{name}")
    return CityscapesCamera(width=width, height=height, **vals)


def dump_cityscapes_camera(cam):
    ext = {"pitch": cam.pitch, "roll": cam.roll, "yaw": cam.yaw, "x": cam.x, "y": cam.y, "z": cam.z}
    if cam.baseline is not None:
        ext["baseline"] = cam.baseline
    return json.dumps({
        "extrinsic": ext,
        "intrinsic": {"fx": cam.fx, "fy": cam.fy, "u0": cam.u0, "v0": cam.v0},
    }, indent=2)


@dataclass
class LidarScan:
    """Points as an (N, 4) float32 array of ``x, y, z, reflectance`` (sensor frame, m)."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float32).reshape(-1, 4)
        if not np.all(np.isfinite(self.points)):
            raise InvalidInput("lidar points must be finite")

    def __len__(self):
        return len(self.points)


def read_velodyne_bin(data):
    data = bytes(data)
    if len(data) % 16:
        raise ParseError(f"velodyne buffer length {len(data)} is not a multiple of 16",
                         location=f"byte {len(data) - len(data) % 16}")
    pts = np.frombuffer(data, dtype="<f4").reshape(-1, 4)
    bad = ~np.all(np.isfinite(pts), axis=1)
    if bad.any():
        raise ParseError("non-finite point", location=f"byte {16 * int(np.argmax(bad))}")
    return LidarScan(pts.astype(np.float32))


def write_velodyne_bin(scan):
    return scan.points.astype("<f4").tobytes()


def lidar_to_depth(scan, sensor_to_cam, intr):
    """Sparse depth map from a scan; the nearest point wins each pixel."""
    h, w = intr.shape
    values = np.zeros((h, w), np.float64)
    prov = np.zeros((h, w), np.uint8)
    if len(scan) == 0:
        return DepthMap(values, prov)
    cam = sensor_to_cam.apply(scan.points[:, :3].astype(np.float64))
    cam = cam[cam[:, 2] > 0]
    u = intr.fx * cam[:, 0] / cam[:, 2] + intr.ox
    v = intr.fy * cam[:, 1] / cam[:, 2] + intr.oy
    col = np.floor(u)
    row = np.floor(v)
    ok = (col >= 0) & (col < w) & (row >= 0) & (row < h)
    col, row, z = col[ok].astype(np.int64), row[ok].astype(np.int64), cam[ok, 2]
    # sort by pixel then depth and keep the first (nearest) point of each pixel
    lin = row * w + col
    order = np.lexsort((z, lin))
    lin_s = lin[order]
    first = np.ones(len(order), bool)
    first[1:] = lin_s[1:] != lin_s[:-1]
    keep = order[first]
    values.flat[lin[keep]] = z[keep]
    prov.flat[lin[keep]] = Provenance.EXTERNAL
    return DepthMap(values, prov)


def load_camera(path, kitti_cam=2, camera_height=KITTI_CAMERA_HEIGHT, width=None, height=None):
    """Camera model from our JSON, a Cityscapes camera JSON or KITTI calib text."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", location=f"{path}:{exc.lineno}") from exc
        if "intrinsics" in doc:
            return CameraModel.from_dict(doc)
        cs = parse_cityscapes_camera(doc, width or 2048, height or 1024)
        return cs.to_camera_model()
    calib = parse_kitti_calib(text)
    return calib.camera_model(kitti_cam, camera_height, width, height)
