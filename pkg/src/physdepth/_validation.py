"""Input validation helpers shared by the public functions and estimators."""

import numpy as np

from .exceptions import InvalidInput


def check_finite(*values, name="input"):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise InvalidInput(f"{name} must be finite")


def check_image(image, name="image"):
    """Return ``image`` as a float64 (H, W, C) array with values in [0, 1].

    Accepts (H, W) grayscale or (H, W, 1|3) arrays. uint8 input is scaled
    by 1/255; float input is clamped.
    """
    a = np.asarray(image)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise InvalidInput(f"{name} must be (H, W), (H, W, 1) or (H, W, 3), got {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInput(f"{name} is empty")
    if a.dtype == np.uint8:
        return a.astype(np.float64) / 255.0
    a = a.astype(np.float64)
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} contains non-finite values")
    return np.clip(a, 0.0, 1.0)


def check_same_shape(a, b, names=("a", "b")):
    sa, sb = np.shape(a), np.shape(b)
    if sa != sb:
        raise InvalidInput(f"{names[0]} shape {sa} does not match {names[1]} shape {sb}")


def check_mask(mask, shape=None, name="mask"):
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got {m.shape}")
    if shape is not None and m.shape != tuple(shape):
        raise InvalidInput(f"{name} shape {m.shape} does not match {tuple(shape)}")
    return m


def check_weights(weights, shape=None, name="weights"):
    w = np.asarray(weights, dtype=np.float64)
    if shape is not None and w.shape != tuple(shape):
        raise InvalidInput(f"{name} shape {w.shape} does not match {tuple(shape)}")
    if not np.all(np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
        raise InvalidInput(f"{name} must lie in [0, 1]")
    return w


def check_positive(value, name):
    if not np.isfinite(value) or value <= 0:
        raise InvalidInput(f"{name} must be positive and finite, got {value!r}")
    return float(value)
