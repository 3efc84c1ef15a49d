"""Synthetic scenes: a skeleton, a ground-truth full camera, crops around the
projected person and the local cameras each crop implies.

Scenes are consistent by construction, so every consistency residual vanishes
before :func:`perturb` injects Gaussian camera noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .crops import CropSpec, make_crops, rng
from .errors import BehindCamera, InvalidSpec, SchemaError
from .geometry import BBox, FullCamera, LocalCamera, full_focal, full_to_local, project_full

# 24-joint body template (meters, y up, pelvis at the origin), SMPL joint order.
SKELETON = np.array(
    [
        [0.00, 0.00, 0.00],  # pelvis
        [0.09, -0.08, 0.00],  # left hip
        [-0.09, -0.08, 0.00],  # right hip
        [0.00, 0.11, -0.02],  # spine 1
        [0.10, -0.46, 0.01],  # left knee
        [-0.10, -0.46, 0.01],  # right knee
        [0.00, 0.24, -0.02],  # spine 2
        [0.10, -0.86, -0.03],  # left ankle
        [-0.10, -0.86, -0.03],  # right ankle
        [0.00, 0.30, 0.00],  # spine 3
        [0.11, -0.92, 0.09],  # left foot
        [-0.11, -0.92, 0.09],  # right foot
        [0.00, 0.52, -0.02],  # neck
        [0.07, 0.42, -0.01],  # left collar
        [-0.07, 0.42, -0.01],  # right collar
        [0.00, 0.61, 0.04],  # head
        [0.18, 0.45, -0.02],  # left shoulder
        [-0.18, 0.45, -0.02],  # right shoulder
        [0.44, 0.42, -0.03],  # left elbow
        [-0.44, 0.42, -0.03],  # right elbow
        [0.68, 0.43, -0.01],  # left wrist
        [-0.68, 0.43, -0.01],  # right wrist
        [0.76, 0.43, -0.01],  # left hand
        [-0.76, 0.43, -0.01],  # right hand
    ]
)


@dataclass(frozen=True)
class SceneConfig:
    width: float = 1920.0
    height: float = 1080.0
    m: int = 5
    crop_mode: str = "fixed"
    tz_range: tuple = (4.0, 15.0)
    joint_jitter: float = 0.02
    max_spread: float = 1.0
    bbox_margin: float = 0.2
    # projected body center is placed inside this central fraction of the image
    center_range: float = 0.4

    def validate(self):
        if not (self.width > 0 and self.height > 0):
            raise InvalidSpec(f"image size must be positive, got {self.width}x{self.height}")
        lo, hi = self.tz_range
        if not 0 < lo <= hi:
            raise InvalidSpec(f"tz_range must satisfy 0 < low <= high, got {self.tz_range}")
        if not 0 < self.max_spread <= 1.0:
            raise InvalidSpec(f"max_spread must be in (0, 1] m, got {self.max_spread}")
        if self.joint_jitter < 0 or self.bbox_margin < 0:
            raise InvalidSpec("joint_jitter and bbox_margin must be >= 0")
        return self


@dataclass(frozen=True)
class Scene:
    joints3d: np.ndarray
    full_cam: FullCamera
    bboxes: list
    local_cams: list
    gt2d_full: np.ndarray
    noise_sigma: dict = field(default_factory=lambda: {"s": 0.0, "t_x": 0.0, "t_y": 0.0})

    @property
    def img(self):
        return (self.full_cam.width, self.full_cam.height)

    @property
    def m(self):
        return len(self.bboxes)

    def gt_local_cams(self):
        return [full_to_local(self.full_cam, b) for b in self.bboxes]

    def to_dict(self):
        return {
            "joints3d": np.asarray(self.joints3d).tolist(),
            "full_cam": self.full_cam.to_dict(),
            "bboxes": [b.to_dict() for b in self.bboxes],
            "local_cams": [c.to_dict() for c in self.local_cams],
            "gt2d_full": np.asarray(self.gt2d_full).tolist(),
            "noise_sigma": dict(self.noise_sigma),
        }

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise SchemaError("scene", "expected an object")
        expected = {"joints3d", "full_cam", "bboxes", "local_cams", "gt2d_full", "noise_sigma"}
        for key in sorted(expected - set(d)):
            raise SchemaError(f"scene.{key}", "missing field")
        for key in sorted(set(d) - expected):
            raise SchemaError(f"scene.{key}", "unknown field")
        joints = _matrix(d["joints3d"], 3, "scene.joints3d")
        gt2d = _matrix(d["gt2d_full"], 2, "scene.gt2d_full")
        if len(gt2d) != len(joints):
            raise SchemaError("scene.gt2d_full", f"{len(gt2d)} entries for {len(joints)} joints")
        bboxes = [BBox.from_dict(b, f"scene.bboxes[{i}]") for i, b in enumerate(_list(d["bboxes"], "scene.bboxes"))]
        cams = [
            LocalCamera.from_dict(c, f"scene.local_cams[{i}]")
            for i, c in enumerate(_list(d["local_cams"], "scene.local_cams"))
        ]
        if len(cams) != len(bboxes):
            raise SchemaError("scene.local_cams", f"{len(cams)} cameras for {len(bboxes)} bboxes")
        sigma = d["noise_sigma"]
        if not isinstance(sigma, dict) or set(sigma) != {"s", "t_x", "t_y"}:
            raise SchemaError("scene.noise_sigma", "expected an object with fields s, t_x, t_y")
        return cls(
            joints3d=joints,
            full_cam=FullCamera.from_dict(d["full_cam"], "scene.full_cam"),
            bboxes=bboxes,
            local_cams=cams,
            gt2d_full=gt2d,
            noise_sigma={k: float(sigma[k]) for k in ("s", "t_x", "t_y")},
        )

    def to_json(self):
        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError("scene", f"invalid JSON: {exc}") from None
        return cls.from_dict(data)


def _list(v, path):
    if not isinstance(v, list):
        raise SchemaError(path, "expected an array")
    return v


def _matrix(v, ncols, path):
    rows = _list(v, path)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != ncols:
            raise SchemaError(f"{path}[{i}]", f"expected an array of {ncols} numbers")
        for k, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise SchemaError(f"{path}[{i}][{k}]", f"expected a number, got {x!r}")
    return np.array(rows, dtype=np.float64).reshape(-1, ncols)


def dumps(obj):
    """JSON text with shortest round-trip float formatting; rejects NaN and infinities."""
    return json.dumps(obj, indent=2, allow_nan=False)


def skeleton(gen, jitter=0.02, max_spread=1.0):
    """Template joints with Gaussian jitter and a random yaw, converted to y-down, centered."""
    joints = SKELETON + gen.normal(scale=jitter, size=SKELETON.shape)
    yaw = gen.uniform(-np.pi, np.pi)
    c, s = np.cos(yaw), np.sin(yaw)
    rot = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    joints = joints @ rot.T
    joints[:, 1] *= -1.0
    joints -= 0.5 * (joints.min(axis=0) + joints.max(axis=0))
    extent = np.abs(joints).max()
    if extent > max_spread:
        joints *= max_spread / extent
    return joints


def base_bbox(points2d, img, margin=0.2):
    """Square box around projected joints, enlarged by ``margin`` of the longer side."""
    width, height = img
    lo, hi = points2d.min(axis=0), points2d.max(axis=0)
    center = 0.5 * (lo + hi)
    side = float(np.max(hi - lo)) * (1.0 + margin)
    return BBox(float(center[0] - width / 2.0), float(center[1] - height / 2.0), side)


def make_scene(seed: int, config: SceneConfig = SceneConfig()) -> Scene:
    config.validate()
    gen = rng(seed)
    img = (float(config.width), float(config.height))
    f = full_focal(*img)
    for _ in range(100):
        joints = skeleton(gen, config.joint_jitter, config.max_spread)
        tz = gen.uniform(*config.tz_range)
        u0, v0 = gen.uniform(-0.5 * config.center_range, 0.5 * config.center_range, size=2) * img
        full = FullCamera(float(u0 * tz / f), float(v0 * tz / f), float(tz), *img)
        if np.all(joints[:, 2] + full.t_z > 0):
            break
    else:
        raise BehindCamera("could not place the skeleton in front of the camera after 100 tries")
    gt2d = project_full(joints, full)
    base = base_bbox(gt2d, img, config.bbox_margin)
    bboxes = make_crops(base, CropSpec(mode=config.crop_mode, m=config.m, seed=seed))
    return Scene(
        joints3d=joints,
        full_cam=full,
        bboxes=bboxes,
        local_cams=[full_to_local(full, b) for b in bboxes],
        gt2d_full=gt2d,
    )


S_FLOOR = 1e-3


def perturb(scene: Scene, sigma_s: float, sigma_t: float, seed: int) -> Scene:
    """Add seeded Gaussian noise to every local camera; ``s`` is clamped at 1e-3."""
    if sigma_s < 0 or sigma_t < 0:
        raise InvalidSpec(f"noise sigmas must be >= 0, got {sigma_s}, {sigma_t}")
    noise = rng(seed).normal(size=(scene.m, 3)) * np.array([sigma_s, sigma_t, sigma_t])
    cams = [
        LocalCamera(max(c.s + float(n[0]), S_FLOOR), c.t_x + float(n[1]), c.t_y + float(n[2]))
        for c, n in zip(scene.local_cams, noise)
    ]
    return replace(scene, local_cams=cams, noise_sigma={"s": float(sigma_s), "t_x": float(sigma_t), "t_y": float(sigma_t)})
