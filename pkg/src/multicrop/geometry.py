"""Weak-perspective cameras for square crops and their full-image counterparts.

Conventions: pixel origin at the top-left corner with y pointing down; the
full-image principal point is the image center ``(width/2, height/2)``; a
bounding box ``(c_x, c_y, b)`` is a square of side ``b`` whose center sits at
the signed offset ``(c_x, c_y)`` from the image center. Joints arrive already
rotated into the camera-aligned body frame, so only translation remains.

All functions accept a single joint of shape ``(3,)`` or a stack ``(K, 3)`` and
return ``(2,)`` or ``(K, 2)`` accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BehindCamera,
    DegenerateCamera,
    InvalidBBox,
    InvalidImage,
    InvalidSpec,
    SchemaError,
    ShapeError,
)

DEFAULT_FOCAL = 5000.0
DEFAULT_RES = 224.0


def _require_finite(path, **values):
    for name, value in values.items():
        if not math.isfinite(value):
            raise SchemaError(f"{path}.{name}", f"must be finite, got {value!r}")


def _read_fields(d, names, path):
    if not isinstance(d, dict):
        raise SchemaError(path, f"expected an object, got {type(d).__name__}")
    unknown = set(d) - set(names)
    if unknown:
        raise SchemaError(f"{path}.{sorted(unknown)[0]}", "unknown field")
    out = {}
    for name in names:
        if name not in d:
            raise SchemaError(f"{path}.{name}", "missing field")
        value = d[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{path}.{name}", f"expected a number, got {value!r}")
        out[name] = float(value)
    return out


@dataclass(frozen=True)
class BBox:
    """Square crop: center offset from the image center and side length, in pixels."""

    c_x: float
    c_y: float
    b: float

    def __post_init__(self):
        _require_finite("bbox", c_x=self.c_x, c_y=self.c_y, b=self.b)
        if not self.b > 0:
            raise InvalidBBox(f"bbox width must be positive, got b={self.b!r}")

    def to_dict(self):
        return {"c_x": self.c_x, "c_y": self.c_y, "b": self.b}

    @classmethod
    def from_dict(cls, d, path="bbox"):
        f = _read_fields(d, ("c_x", "c_y", "b"), path)
        if not f["b"] > 0:
            raise SchemaError(f"{path}.b", f"must be positive, got {f['b']!r}")
        return cls(**f)

    def as_array(self):
        return np.array([self.c_x, self.c_y, self.b])


@dataclass(frozen=True)
class LocalCamera:
    """Per-crop weak-perspective camera: scale ``s`` and translation ``(t_x, t_y)`` in meters."""

    s: float
    t_x: float
    t_y: float

    def __post_init__(self):
        _require_finite("camera", s=self.s, t_x=self.t_x, t_y=self.t_y)

    def to_dict(self):
        return {"s": self.s, "t_x": self.t_x, "t_y": self.t_y}

    @classmethod
    def from_dict(cls, d, path="camera"):
        return cls(**_read_fields(d, ("s", "t_x", "t_y"), path))

    def as_array(self):
        return np.array([self.s, self.t_x, self.t_y])


@dataclass(frozen=True)
class FullCamera:
    """Full-image translation plus image size; the focal length follows from the size."""

    t_x: float
    t_y: float
    t_z: float
    width: float
    height: float

    def __post_init__(self):
        _require_finite("full_cam", t_x=self.t_x, t_y=self.t_y, t_z=self.t_z)
        if not (self.width > 0 and self.height > 0):
            raise InvalidImage(f"image size must be positive, got {self.width}x{self.height}")

    @property
    def f_full(self):
        return full_focal(self.width, self.height)

    @property
    def translation(self):
        return np.array([self.t_x, self.t_y, self.t_z])

    def to_dict(self):
        return {
            "t_x": self.t_x,
            "t_y": self.t_y,
            "t_z": self.t_z,
            "width": self.width,
            "height": self.height,
            "f_full": self.f_full,
        }

    @classmethod
    def from_dict(cls, d, path="full_cam"):
        names = ("t_x", "t_y", "t_z", "width", "height")
        if not isinstance(d, dict):
            raise SchemaError(path, f"expected an object, got {type(d).__name__}")
        d = dict(d)
        f_full = d.pop("f_full", None)
        f = _read_fields(d, names, path)
        if f["width"] <= 0 or f["height"] <= 0:
            raise SchemaError(f"{path}.width", "image size must be positive")
        cam = cls(**f)
        if f_full is not None and f_full != cam.f_full:
            raise SchemaError(f"{path}.f_full", f"{f_full!r} inconsistent with image size ({cam.f_full!r})")
        return cam


@dataclass(frozen=True)
class CropIntrinsics:
    """Focal length and side of the resized square crop."""

    f: float = DEFAULT_FOCAL
    res: float = DEFAULT_RES

    def __post_init__(self):
        if not (self.f > 0 and self.res > 0):
            raise InvalidSpec(f"crop intrinsics must be positive, got f={self.f}, res={self.res}")


def _joints(j, ncols):
    a = np.asarray(j, dtype=np.float64)
    if a.shape[-1:] != (ncols,) or a.ndim > 2:
        raise ShapeError(f"expected joints of shape ({ncols},) or (K, {ncols}), got {a.shape}")
    return a


def _check_scale(s):
    if not s > 0:
        raise DegenerateCamera(f"camera scale must be positive, got s={s!r}")


def crop_tz(cam: LocalCamera, intr: CropIntrinsics = CropIntrinsics()) -> float:
    """Depth of the crop camera implied by its scale: ``2 f / (res s)``."""
    _check_scale(cam.s)
    return 2.0 * intr.f / (intr.res * cam.s)


def _perspective(j, tx, ty, tz, focal, cx, cy):
    depth = j[..., 2] + tz
    if np.any(depth <= 0):
        raise BehindCamera(f"joint depth must be positive, min depth {float(np.min(depth))!r}")
    u = focal * (j[..., 0] + tx) / depth + cx
    v = focal * (j[..., 1] + ty) / depth + cy
    return np.stack([u, v], axis=-1)


def project_crop(j, cam: LocalCamera, intr: CropIntrinsics = CropIntrinsics()) -> np.ndarray:
    """Project body-frame joints into the resized crop with the local camera."""
    j = _joints(j, 3)
    tz = crop_tz(cam, intr)
    half = intr.res / 2.0
    return _perspective(j, cam.t_x, cam.t_y, tz, intr.f, half, half)


def full_focal(width, height) -> float:
    if not (width > 0 and height > 0):
        raise InvalidImage(f"image size must be positive, got {width}x{height}")
    return math.sqrt(width * width + height * height)


def local_to_full(cam: LocalCamera, bbox: BBox, img) -> FullCamera:
    """Full-image translation implied by a crop's local camera and its bounding box."""
    width, height = img
    bs = bbox.b * cam.s
    if not bs > 0:
        raise DegenerateCamera(f"b*s must be positive, got {bs!r}")
    f = full_focal(width, height)
    return FullCamera(
        t_x=cam.t_x + 2.0 * bbox.c_x / bs,
        t_y=cam.t_y + 2.0 * bbox.c_y / bs,
        t_z=2.0 * f / bs,
        width=width,
        height=height,
    )


def full_to_local(full: FullCamera, bbox: BBox) -> LocalCamera:
    """Inverse of :func:`local_to_full` for a given bounding box."""
    if not full.t_z > 0:
        raise DegenerateCamera(f"full camera depth must be positive, got t_z={full.t_z!r}")
    if not bbox.b > 0:
        raise DegenerateCamera(f"bbox width must be positive, got b={bbox.b!r}")
    bs = 2.0 * full.f_full / full.t_z
    s = bs / bbox.b
    return LocalCamera(
        s=s,
        t_x=full.t_x - 2.0 * bbox.c_x / bs,
        t_y=full.t_y - 2.0 * bbox.c_y / bs,
    )


def project_full(j, full: FullCamera) -> np.ndarray:
    """Project body-frame joints into the full image."""
    j = _joints(j, 3)
    return _perspective(j, full.t_x, full.t_y, full.t_z, full.f_full, full.width / 2.0, full.height / 2.0)


def crop_pixel_map(u_full, bbox: BBox, img, intr: CropIntrinsics = CropIntrinsics()) -> np.ndarray:
    """Map full-image pixels into the resized crop of ``bbox``."""
    u = _joints(u_full, 2)
    width, height = img
    left = bbox.c_x + width / 2.0 - bbox.b / 2.0
    top = bbox.c_y + height / 2.0 - bbox.b / 2.0
    k = intr.res / bbox.b
    return np.stack([(u[..., 0] - left) * k, (u[..., 1] - top) * k], axis=-1)


def joints_to_list(j):
    return np.asarray(j, dtype=np.float64).tolist()
