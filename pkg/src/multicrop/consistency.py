"""Camera-consistency residuals and losses, with analytic gradients.

Every crop ``i`` of one person implies a full-image translation

    X_i = t_x,i + 2 c_x,i / (b_i s_i)
    Y_i = t_y,i + 2 c_y,i / (b_i s_i)
    P_i = b_i s_i                  (t_z = 2 f_full / P_i)

and consistent cameras agree on all three. The loss sums, over unordered
pairs ``i < j``, ``lambda_x (X_i - X_j)^2 + lambda_y (Y_i - Y_j)^2 +
lambda_s (P_i - P_j)^2``.

Gradients are returned as ``(M, 3)`` arrays whose columns are the partials
with respect to ``(s, t_x, t_y)`` of each crop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, DegenerateCamera, InvalidSpec, NotEnoughCrops, ShapeError
from .geometry import BBox, LocalCamera, full_focal

S_MIN = 1e-9


@dataclass(frozen=True)
class ConsistencyWeights:
    lambda_x: float = 1.0
    lambda_y: float = 1.0
    lambda_s: float = 1e-4

    def __post_init__(self):
        if min(self.lambda_x, self.lambda_y, self.lambda_s) < 0:
            raise InvalidSpec(f"consistency weights must be >= 0, got {self}")

    def scaled(self, k):
        return ConsistencyWeights(k * self.lambda_x, k * self.lambda_y, k * self.lambda_s)


def stack_cameras(cams) -> np.ndarray:
    return np.array([[c.s, c.t_x, c.t_y] for c in cams], dtype=np.float64).reshape(-1, 3)


def stack_bboxes(bboxes) -> np.ndarray:
    return np.array([[b.c_x, b.c_y, b.b] for b in bboxes], dtype=np.float64).reshape(-1, 3)


def _check_scales(s):
    bad = ~(s > S_MIN)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise DegenerateCamera(f"camera {i} has scale s={s[i]!r} <= {S_MIN}")


def implied_translation(params, boxes):
    """Per-crop implied ``(X, Y, P)`` from stacked cameras and boxes."""
    s, tx, ty = params[:, 0], params[:, 1], params[:, 2]
    cx, cy, b = boxes[:, 0], boxes[:, 1], boxes[:, 2]
    _check_scales(s)
    bs = b * s
    return tx + 2.0 * cx / bs, ty + 2.0 * cy / bs, bs


def cam_loss_arrays(params, boxes, w=ConsistencyWeights(), grad=False):
    """Array form of :func:`cam_loss`; with ``grad=True`` also returns the ``(M, 3)`` gradient."""
    params = np.asarray(params, dtype=np.float64)
    boxes = np.asarray(boxes, dtype=np.float64)
    m = len(params)
    if m < 2:
        raise NotEnoughCrops(f"consistency needs at least 2 crops, got {m}")
    if boxes.shape != params.shape:
        raise ShapeError(f"{len(params)} cameras but {len(boxes)} bboxes")
    x, y, p = implied_translation(params, boxes)
    dx = x[:, None] - x[None, :]
    dy = y[:, None] - y[None, :]
    dp = p[:, None] - p[None, :]
    iu = np.triu_indices(m, 1)
    loss = float(
        w.lambda_x * np.sum(dx[iu] ** 2) + w.lambda_y * np.sum(dy[iu] ** 2) + w.lambda_s * np.sum(dp[iu] ** 2)
    )
    if not grad:
        return loss
    gx = 2.0 * w.lambda_x * dx.sum(axis=1)
    gy = 2.0 * w.lambda_y * dy.sum(axis=1)
    gp = 2.0 * w.lambda_s * dp.sum(axis=1)
    s = params[:, 0]
    cx, cy, b = boxes[:, 0], boxes[:, 1], boxes[:, 2]
    # dX/ds = -2 c_x / (b s^2) = -(X - t_x) / s
    out = np.empty_like(params)
    out[:, 0] = (-gx * 2.0 * cx - gy * 2.0 * cy) / (p * s) + gp * b
    out[:, 1] = gx
    out[:, 2] = gy
    return loss, out


def pair_residuals(cam_i: LocalCamera, bbox_i: BBox, cam_j: LocalCamera, bbox_j: BBox):
    """``(r_x, r_y, r_s)`` between two crops of the same person."""
    x, y, p = implied_translation(stack_cameras([cam_i, cam_j]), stack_bboxes([bbox_i, bbox_j]))
    return float(x[0] - x[1]), float(y[0] - y[1]), float(p[0] - p[1])


def all_pair_residuals(cams, bboxes):
    """List of ``(i, j, r_x, r_y, r_s)`` for every unordered pair ``i < j``."""
    x, y, p = implied_translation(stack_cameras(cams), stack_bboxes(bboxes))
    out = []
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            out.append((i, j, float(x[i] - x[j]), float(y[i] - y[j]), float(p[i] - p[j])))
    return out


def cam_loss(cams, bboxes, w: ConsistencyWeights = ConsistencyWeights()) -> float:
    return cam_loss_arrays(stack_cameras(cams), stack_bboxes(bboxes), w)


def cam_loss_grad(cams, bboxes, w: ConsistencyWeights = ConsistencyWeights()) -> np.ndarray:
    return cam_loss_arrays(stack_cameras(cams), stack_bboxes(bboxes), w, grad=True)[1]


def loss_2d_arrays(j3d, gt2d, params, boxes, img, grad=False):
    """Full-image reprojection loss summed over crops and joints.

    With ``grad=True`` returns ``(loss, camera_grad (M, 3), joint_grad (K, 3))``.
    """
    j3d = np.asarray(j3d, dtype=np.float64)
    gt2d = np.asarray(gt2d, dtype=np.float64)
    params = np.asarray(params, dtype=np.float64)
    boxes = np.asarray(boxes, dtype=np.float64)
    if j3d.ndim != 2 or j3d.shape[1] != 3 or gt2d.shape != (len(j3d), 2):
        raise ShapeError(f"joints {j3d.shape} and 2D targets {gt2d.shape} are not aligned")
    if boxes.shape != params.shape:
        raise ShapeError(f"{len(params)} cameras but {len(boxes)} bboxes")
    width, height = img
    f = full_focal(width, height)
    s = params[:, 0]
    cx, cy = boxes[:, 0], boxes[:, 1]
    _check_scales(s)
    bs = boxes[:, 2] * s
    tx = params[:, 1] + 2.0 * cx / bs
    ty = params[:, 2] + 2.0 * cy / bs
    tz = 2.0 * f / bs

    depth = j3d[None, :, 2] + tz[:, None]
    if np.any(depth <= 0):
        raise BehindCamera(f"joint depth must be positive, min depth {float(depth.min())!r}")
    px = j3d[None, :, 0] + tx[:, None]
    py = j3d[None, :, 1] + ty[:, None]
    ru = f * px / depth + width / 2.0 - gt2d[None, :, 0]
    rv = f * py / depth + height / 2.0 - gt2d[None, :, 1]
    loss = float(np.sum(ru * ru) + np.sum(rv * rv))
    if not grad:
        return loss

    gu = 2.0 * f * ru / depth
    gv = 2.0 * f * rv / depth
    gz = -(gu * px + gv * py) / depth
    g_tx = gu.sum(axis=1)
    g_ty = gv.sum(axis=1)
    g_tz = gz.sum(axis=1)
    cam_grad = np.empty_like(params)
    # all three implied translations scale as 1/s
    cam_grad[:, 0] = -(g_tx * 2.0 * cx / bs + g_ty * 2.0 * cy / bs + g_tz * tz) / s
    cam_grad[:, 1] = g_tx
    cam_grad[:, 2] = g_ty
    joint_grad = np.stack([gu.sum(axis=0), gv.sum(axis=0), gz.sum(axis=0)], axis=1)
    return loss, cam_grad, joint_grad


def loss_2d(j3d, gt2d, cams, bboxes, img) -> float:
    return loss_2d_arrays(j3d, gt2d, stack_cameras(cams), stack_bboxes(bboxes), img)


def loss_2d_grad(j3d, gt2d, cams, bboxes, img):
    """``(camera_grad (M, 3), joint_grad (K, 3))`` of :func:`loss_2d`."""
    _, g_cam, g_joint = loss_2d_arrays(j3d, gt2d, stack_cameras(cams), stack_bboxes(bboxes), img, grad=True)
    return g_cam, g_joint


def _pair(j3d, gt3d):
    a = np.asarray(j3d, dtype=np.float64)
    b = np.asarray(gt3d, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"3D joint sets differ in shape: {a.shape} vs {b.shape}")
    return a, b


def loss_3d(j3d, gt3d) -> float:
    a, b = _pair(j3d, gt3d)
    return float(np.sum((a - b) ** 2))


def loss_3d_grad(j3d, gt3d) -> np.ndarray:
    a, b = _pair(j3d, gt3d)
    return 2.0 * (a - b)
