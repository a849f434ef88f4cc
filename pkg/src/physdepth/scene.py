"""Raster containers, label schemas and on-disk formats."""

import enum
import json
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from ._validation import check_image
from .exceptions import InvalidInput, ParseError, UnknownLabelWarning


class Provenance(enum.IntEnum):
    """Which pipeline stage produced a depth value. Codes are the PFD1 codes."""

    NONE = 0
    ROAD = 1
    FLAT = 2
    EDGE_EXTENDED = 3
    INPAINTED = 4
    SKY = 5
    EXTERNAL = 6


class Category(enum.IntEnum):
    IGNORE = 0
    ROAD = 1
    FLAT = 2
    VERTICAL = 3
    SKY = 4


@dataclass
class DepthMap:
    """Metric z-depth raster with a per-pixel provenance channel.

    ``values`` is float32 (H, W) in meters; a pixel is valid iff its
    provenance is not ``NONE``, and invalid pixels hold exactly 0.
    """

    values: np.ndarray
    provenance: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float32)
        self.provenance = np.ascontiguousarray(self.provenance, dtype=np.uint8)
        if self.values.ndim != 2 or self.values.shape != self.provenance.shape:
            raise InvalidInput(
                f"values {self.values.shape} and provenance {self.provenance.shape} must be equal 2-D shapes"
            )
        if self.provenance.max(initial=0) > max(Provenance):
            raise InvalidInput("unknown provenance code")
        valid = self.valid
        if np.any(self.values[~valid] != 0):
            raise InvalidInput("invalid pixels must carry depth 0")
        v = self.values[valid]
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise InvalidInput("valid pixels must carry positive finite depth")

    @classmethod
    def empty(cls, width, height):
        return new_depth_map(width, height)

    @classmethod
    def from_array(cls, values, valid=None, provenance=Provenance.EXTERNAL):
        """Wrap a plain array. Pixels that are non-finite or <= 0 become invalid."""
        values = np.asarray(values, dtype=np.float64)
        ok = np.isfinite(values) & (values > 0)
        if valid is not None:
            ok &= np.asarray(valid, dtype=bool)
        prov = np.where(ok, np.asarray(provenance, dtype=np.uint8), np.uint8(0)).astype(np.uint8)
        ok &= prov != 0
        return cls(np.where(ok, values, 0.0), prov)

    @property
    def valid(self):
        return self.provenance != Provenance.NONE

    @property
    def shape(self):
        return self.values.shape

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    def valid_count(self):
        return int(np.count_nonzero(self.valid))

    def copy(self):
        return DepthMap(self.values.copy(), self.provenance.copy())

    def __getitem__(self, rc):
        """Depth at ``(row, col)``, or ``None`` if invalid."""
        if self.provenance[rc] == Provenance.NONE:
            return None
        return float(self.values[rc])

    def set(self, row, col, depth, provenance=Provenance.EXTERNAL):
        if provenance == Provenance.NONE:
            self.values[row, col] = 0
        elif not (np.isfinite(depth) and depth > 0):
            raise InvalidInput("depth must be positive and finite")
        else:
            self.values[row, col] = depth
        self.provenance[row, col] = provenance

    def equals(self, other):
        """Bit-exact equality of values and provenance."""
        return (
            self.shape == other.shape
            and self.values.tobytes() == other.values.tobytes()
            and np.array_equal(self.provenance, other.provenance)
        )

    def to_bytes(self):
        h, w = self.shape
        return (
            PFD_MAGIC
            + struct.pack("<II", w, h)
            + self.values.astype("<f4").tobytes()
            + self.provenance.tobytes()
        )

    @classmethod
    def from_bytes(cls, data):
        return _parse_pfd(bytes(data))


def new_depth_map(width, height):
    if width < 1 or height < 1:
        raise InvalidInput(f"depth map size must be at least 1x1, got {width}x{height}")
    return DepthMap(np.zeros((height, width), np.float32), np.zeros((height, width), np.uint8))


PFD_MAGIC = b"PFD1"


def _parse_pfd(data):
    if len(data) < 12:
        raise ParseError("truncated PFD1 header", location="byte 0")
    if data[:4] != PFD_MAGIC:
        raise ParseError(f"bad magic {data[:4]!r}, expected b'PFD1'", location="byte 0")
    w, h = struct.unpack_from("<II", data, 4)
    if w < 1 or h < 1:
        raise ParseError(f"invalid dimensions {w}x{h}", location="byte 4")
    n = w * h
    expected = 12 + 5 * n
    if len(data) != expected:
        raise ParseError(f"expected {expected} bytes for {w}x{h}, got {len(data)}", location="byte 12")
    values = np.frombuffer(data, dtype="<f4", count=n, offset=12).reshape(h, w)
    prov = np.frombuffer(data, dtype=np.uint8, count=n, offset=12 + 4 * n).reshape(h, w)
    try:
        return DepthMap(values.astype(np.float32), prov.copy())
    except InvalidInput as exc:
        raise ParseError(f"inconsistent PFD1 payload: {exc}", location="byte 12") from exc


def write_pfd(path, depth):
    with open(path, "wb") as fh:
        fh.write(depth.to_bytes())


def read_pfd(path):
    with open(path, "rb") as fh:
        return _parse_pfd(fh.read())


@dataclass
class FlowField:
    """Dense 2-D motion vectors (H, W, 2) in pixels, ``[..., 0]`` along x."""

    vectors: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.vectors.ndim != 3 or self.vectors.shape[2] != 2:
            raise InvalidInput(f"flow vectors must be (H, W, 2), got {self.vectors.shape}")
        if self.valid.shape != self.vectors.shape[:2]:
            raise InvalidInput("flow validity mask must match vector raster")
        if not np.all(np.isfinite(self.vectors[self.valid])):
            raise InvalidInput("valid flow vectors must be finite")

    @property
    def shape(self):
        return self.valid.shape


@dataclass
class LabelSchema:
    """Maps class IDs to geometric categories.

    ``classes`` maps ``id -> (name, Category)``.
    """

    classes: dict = field(default_factory=dict)

    def __post_init__(self):
        for cid, (name, cat) in list(self.classes.items()):
            if not isinstance(cid, (int, np.integer)) or cid < 0:
                raise InvalidInput(f"class id must be a non-negative integer, got {cid!r}")
            self.classes[cid] = (str(name), Category(cat))

    def category_of(self, class_id):
        entry = self.classes.get(int(class_id))
        return Category.IGNORE if entry is None else entry[1]

    def lookup_table(self, size=65536):
        lut = np.zeros(size, dtype=np.uint8)
        known = np.zeros(size, dtype=bool)
        for cid, (_, cat) in self.classes.items():
            if cid < size:
                lut[cid] = cat
                known[cid] = True
        return lut, known

    @classmethod
    def from_dict(cls, doc):
        try:
            entries = doc["classes"]
        except (KeyError, TypeError):
            raise ParseError("schema must be an object with a 'classes' list", location="classes")
        if not isinstance(entries, list):
            raise ParseError("schema must be an object with a 'classes' list", location="classes")
        classes = {}
        for i, c in enumerate(entries):
            loc = f"classes[{i}]"
            try:
                cid, name, cat = c["id"], c["name"], c["category"]
            except (KeyError, TypeError) as exc:
                raise ParseError(f"schema entry missing field {exc}", location=loc)
            if not isinstance(cid, int) or isinstance(cid, bool) or cid < 0:
                raise ParseError(f"class id must be a non-negative integer, got {cid!r}", location=f"{loc}.id")
            try:
                category = Category[str(cat).upper()]
            except KeyError:
                raise ParseError(f"unknown category {cat!r}", location=f"{loc}.category")
            if cid in classes:
                raise ParseError(f"duplicate class id {cid}", location=f"{loc}.id")
            classes[cid] = (name, category)
        return cls(classes)

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", location=f"line {exc.lineno}") from exc
        return cls.from_dict(doc)

    def to_dict(self):
        return {
            "classes": [
                {"id": cid, "name": name, "category": cat.name.lower()}
                for cid, (name, cat) in sorted(self.classes.items())
            ]
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


_R, _F, _V, _S = Category.ROAD, Category.FLAT, Category.VERTICAL, Category.SKY

# Cityscapes trainIds. parking and rail track have no trainId (they map to
# 255) and therefore only appear in the labelId schema below.
CITYSCAPES_TRAIN_IDS = {
    0: ("road", _R), 1: ("sidewalk", _F), 2: ("building", _V), 3: ("wall", _V),
    4: ("fence", _V), 5: ("pole", _V), 6: ("traffic light", _V), 7: ("traffic sign", _V),
    8: ("vegetation", _V), 9: ("terrain", _F), 10: ("sky", _S), 11: ("person", _V),
    12: ("rider", _V), 13: ("car", _V), 14: ("truck", _V), 15: ("bus", _V),
    16: ("train", _V), 17: ("motorcycle", _V), 18: ("bicycle", _V),
}

CITYSCAPES_LABEL_IDS = {
    0: ("unlabeled", Category.IGNORE), 1: ("ego vehicle", Category.IGNORE),
    2: ("rectification border", Category.IGNORE), 3: ("out of roi", Category.IGNORE),
    4: ("static", Category.IGNORE), 5: ("dynamic", Category.IGNORE),
    6: ("ground", Category.IGNORE), 7: ("road", _R), 8: ("sidewalk", _F),
    9: ("parking", _F), 10: ("rail track", _F), 11: ("building", _V), 12: ("wall", _V),
    13: ("fence", _V), 14: ("guard rail", Category.IGNORE), 15: ("bridge", Category.IGNORE),
    16: ("tunnel", Category.IGNORE), 17: ("pole", _V), 18: ("polegroup", Category.IGNORE),
    19: ("traffic light", _V), 20: ("traffic sign", _V), 21: ("vegetation", _V),
    22: ("terrain", _F), 23: ("sky", _S), 24: ("person", _V), 25: ("rider", _V),
    26: ("car", _V), 27: ("truck", _V), 28: ("bus", _V), 29: ("caravan", Category.IGNORE),
    30: ("trailer", Category.IGNORE), 31: ("train", _V), 32: ("motorcycle", _V),
    33: ("bicycle", _V),
}


def cityscapes_schema(id_space="train"):
    """Default schema over Cityscapes ``"train"`` IDs or raw ``"label"`` IDs."""
    if id_space == "train":
        return LabelSchema(dict(CITYSCAPES_TRAIN_IDS))
    if id_space == "label":
        return LabelSchema(dict(CITYSCAPES_LABEL_IDS))
    raise InvalidInput(f"id_space must be 'train' or 'label', got {id_space!r}")


def categorize(labels, schema):
    """Per-pixel :class:`Category` raster (uint8) for a class-ID label map.

    IDs the schema does not declare become ``IGNORE``; an
    :class:`UnknownLabelWarning` reports how many pixels were affected.
    """
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise InvalidInput(f"label map must be 2-D, got {labels.shape}")
    if labels.size and (labels.min() < 0 or not np.issubdtype(labels.dtype, np.integer)):
        raise InvalidInput("label map must hold non-negative integer class IDs")
    size = max(65536, int(labels.max(initial=0)) + 1)
    lut, known = schema.lookup_table(size)
    idx = labels.astype(np.int64)
    n_unknown = int(np.count_nonzero(~known[idx]))
    if n_unknown:
        warnings.warn(
            f"{n_unknown} pixels carry class IDs missing from the schema; treated as ignore",
            UnknownLabelWarning,
            stacklevel=2,
        )
    return lut[idx]


def read_label_png(path):
    """Class-ID raster from an 8- or 16-bit single-channel PNG."""
    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "P", "I", "I;16", "I;16B", "I;16L"):
                raise ParseError(f"label PNG must be single-channel, got mode {img.mode}", location=str(path))
            arr = np.array(img)
    except (OSError, SyntaxError) as exc:
        raise ParseError(f"cannot read label PNG: {exc}", location=str(path)) from exc
    return arr.astype(np.int64)


def write_label_png(path, labels):
    labels = np.asarray(labels)
    if labels.max(initial=0) > 255:
        Image.fromarray(labels.astype(np.uint16)).save(path)
    else:
        Image.fromarray(labels.astype(np.uint8), mode="L").save(path)


def read_image(path):
    """8-bit PNG to float (H, W, C) in [0, 1]."""
    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB")
            arr = np.array(img)
    except (OSError, SyntaxError) as exc:
        raise ParseError(f"cannot read image: {exc}", location=str(path)) from exc
    return check_image(arr)


def write_image(path, image):
    a = check_image(image)
    a8 = np.round(a * 255.0).astype(np.uint8)
    if a8.shape[2] == 1:
        Image.fromarray(a8[:, :, 0], mode="L").save(path)
    else:
        Image.fromarray(a8, mode="RGB").save(path)


def write_depth_preview(path, depth, max_depth=None):
    """Lossy 8-bit colormapped preview of a depth map (near = bright)."""
    v = depth.values.astype(np.float64)
    valid = depth.valid
    hi = max_depth or (float(v[valid].max()) if valid.any() else 1.0)
    t = np.clip(v / hi, 0.0, 1.0)
    rgb = np.stack([1.0 - t, 1.0 - np.abs(2 * t - 1.0), t], axis=-1)
    rgb[~valid] = 0.0
    Image.fromarray(np.round(rgb * 255).astype(np.uint8), mode="RGB").save(path)
