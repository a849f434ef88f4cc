"""Synthetic ground-plane scenes with closed-form depth.

The renderer is deliberately independent of :mod:`physdepth.physics`: it
back-projects pixel centers with ``K^-1`` (ray z-component 1, so the hit
parameter *is* the z-depth) and intersects them analytically with the
ground plane and with axis-aligned boxes, all in the ground-aligned frame
(x right, y down, z forward, ground at ``y = camera_height``).
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .camera import CameraModel, Extrinsics, Intrinsics, pixel_centers
from .exceptions import InvalidInput, ParseError
from .scene import Category, DepthMap, LabelSchema, Provenance, cityscapes_schema

# trainIds used for rendered labels; 255 is declared as ignore in the bundle schema
CATEGORY_LABEL = {
    Category.ROAD: 0,
    Category.FLAT: 1,
    Category.VERTICAL: 13,
    Category.SKY: 10,
    Category.IGNORE: 255,
}


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in the ground-aligned frame.

    ``lift`` raises the bottom face above the ground (0 = resting on it).
    """

    x: tuple
    z: tuple
    height: float
    lift: float = 0.0
    category: Category = Category.VERTICAL

    def __post_init__(self):
        x0, x1 = self.x
        z0, z1 = self.z
        if not (x0 < x1 and z0 < z1 and self.height > 0 and self.lift >= 0):
            raise InvalidInput(f"degenerate or below-ground box {self}")


@dataclass(frozen=True)
class SynthSpec:
    camera: CameraModel
    boxes: tuple = ()
    road_half_width: float = 3.5
    texture_waves: int = 6

    @classmethod
    def from_dict(cls, doc):
        try:
            cam = CameraModel.from_dict(doc["camera"])
        except KeyError:
            raise ParseError("synth spec needs a 'camera' object", location="camera")
        boxes = []
        for i, b in enumerate(doc.get("boxes", [])):
            try:
                cat = Category[str(b.get("category", "vertical")).upper()]
                boxes.append(Box(tuple(b["x"]), tuple(b["z"]), float(b["height"]),
                                 float(b.get("lift", 0.0)), cat))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad box entry: {exc}", location=f"boxes[{i}]") from exc
        return cls(cam, tuple(boxes), float(doc.get("road_half_width", 3.5)),
                   int(doc.get("texture_waves", 6)))

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", location=f"line {exc.lineno}") from exc
        return cls.from_dict(doc)

    def to_dict(self):
        return {
            "camera": self.camera.to_dict(),
            "road_half_width": self.road_half_width,
            "texture_waves": self.texture_waves,
            "boxes": [
                {"x": list(b.x), "z": list(b.z), "height": b.height, "lift": b.lift,
                 "category": b.category.name.lower()}
                for b in self.boxes
            ],
        }


def default_spec():
    cam = CameraModel(
        Intrinsics(fx=370.0, fy=370.0, ox=320.0, oy=96.0, width=640, height=192),
        Extrinsics(camera_height=1.65),
    )
    boxes = (
        Box(x=(1.5, 3.3), z=(12.0, 16.0), height=1.45),     # car on the right lane
        Box(x=(-14.0, -6.0), z=(9.0, 45.0), height=9.0),    # building along the left sidewalk
    )
    return SynthSpec(cam, boxes)


@dataclass
class SynthScene:
    spec: SynthSpec
    seed: int
    labels: np.ndarray
    categories: np.ndarray
    depth: DepthMap
    image: np.ndarray
    schema: LabelSchema = field(default_factory=lambda: synth_schema())

    @property
    def camera(self):
        return self.spec.camera


def synth_schema():
    schema = cityscapes_schema("train")
    schema.classes[255] = ("unlabeled", Category.IGNORE)
    return schema


def _slab_hit(origin, dirs, box, h):
    """Entry parameter and entry-face axis of rays against one box (NaN = miss)."""
    lo = np.array([box.x[0], h - box.lift - box.height, box.z[0]])
    hi = np.array([box.x[1], h - box.lift, box.z[1]])
    with np.errstate(divide="ignore", invalid="ignore"):
        t0 = (lo - origin) / dirs
        t1 = (hi - origin) / dirs
    tmin = np.fmin(t0, t1)
    tmax = np.fmax(t0, t1)
    # axis-parallel rays: inside the slab -> unbounded, outside -> miss
    par = dirs == 0
    inside = (origin >= lo) & (origin <= hi)
    tmin = np.where(par, np.where(inside, -np.inf, np.inf), tmin)
    tmax = np.where(par, np.where(inside, np.inf, -np.inf), tmax)
    t_enter = tmin.max(axis=-1)
    axis = tmin.argmax(axis=-1)
    t_exit = tmax.min(axis=-1)
    hit = (t_enter <= t_exit) & (t_enter > 0)
    return np.where(hit, t_enter, np.nan), axis


def _texture(points, seed, waves):
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(0.5, 3.0, size=(waves, 3))
    phases = rng.uniform(0, 2 * np.pi, size=waves)
    acc = np.zeros(points.shape[:-1])
    for k in range(waves):
        acc += np.sin(points @ freqs[k] + phases[k])
    return 0.5 + 0.5 * acc / waves


def render(spec, seed=0, camera_offset=(0.0, 0.0, 0.0)):
    """Render ``spec`` from a camera displaced by ``camera_offset`` (ground frame).

    Orientation is shared across offsets, so a second render differs from
    the first by a pure translation.
    """
    cam = spec.camera
    intr = cam.intrinsics
    R = cam.rotation
    h = cam.extrinsics.camera_height
    origin = np.asarray(camera_offset, dtype=np.float64)
    if not np.all(np.isfinite(origin)) or origin[1] >= h:
        raise InvalidInput("camera must stay above the ground plane")

    u, v = pixel_centers(intr.width, intr.height)
    e = np.stack([(u - intr.ox) / intr.fx, (v - intr.oy) / intr.fy, np.ones_like(u)], axis=-1)
    g = e @ R.T

    with np.errstate(divide="ignore", invalid="ignore"):
        t_ground = np.where(g[..., 1] > 0, (h - origin[1]) / g[..., 1], np.nan)
    t_best = t_ground.copy()
    cat = np.full(u.shape, Category.SKY, dtype=np.uint8)
    gx = origin[0] + t_ground * g[..., 0]
    on_ground = np.isfinite(t_ground)
    cat[on_ground] = np.where(np.abs(gx[on_ground]) <= spec.road_half_width,
                              Category.ROAD, Category.FLAT)
    normal_axis = np.full(u.shape, 1, dtype=np.int64)
    for box in spec.boxes:
        t_box, axis = _slab_hit(origin, g, box, h)
        closer = np.isfinite(t_box) & ~(t_box >= t_best)
        t_best = np.where(closer, t_box, t_best)
        cat[closer] = box.category
        normal_axis = np.where(closer, axis, normal_axis)

    hit = np.isfinite(t_best)
    depth = DepthMap(np.where(hit, t_best, 0.0),
                     np.where(hit, np.uint8(Provenance.EXTERNAL), np.uint8(0)))

    points = origin + np.where(hit, t_best, 0.0)[..., None] * g
    light = np.array([0.3, -1.0, -0.5])
    light /= np.linalg.norm(light)
    # |n . L| for the axis-aligned face that was hit
    lambert = np.abs(light[normal_axis])
    tex = _texture(points, seed, spec.texture_waves)
    shade = np.clip((0.35 + 0.55 * lambert) * (0.4 + 0.6 * tex), 0.0, 1.0)
    sky = np.clip(0.95 - 0.25 * v / intr.height, 0.0, 1.0)
    image = np.where(hit, shade, sky)[..., None]

    inv = {c: lab for c, lab in CATEGORY_LABEL.items()}
    labels = np.zeros(u.shape, dtype=np.int64)
    for c, lab in inv.items():
        labels[cat == c] = lab
    return SynthScene(spec, seed, labels, cat, depth, image)


def synth_scene(spec=None, seed=0):
    return render(spec or default_spec(), seed)


def plane_only_spec(width=1024, height=320, camera_height=1.65, roll=0.0, pitch=0.0, yaw=0.0,
                    fx=None, road_half_width=3.5):
    f = fx if fx is not None else 0.58 * width
    cam = CameraModel(
        Intrinsics(fx=f, fy=f, ox=width / 2.0, oy=height / 2.0, width=width, height=height),
        Extrinsics(camera_height=camera_height, roll=roll, pitch=pitch, yaw=yaw),
    )
    return SynthSpec(cam, (), road_half_width)
