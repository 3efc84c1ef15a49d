"""Refine noisy local cameras by gradient descent on

    lambda_cam * L_cam + lambda_2d * L_2D

with the scene's 3D joints held fixed. The optimization variables per crop are
``(log s, t_x, t_y)`` so the scale stays positive without clamping.

Adam runs with a fixed step and keeps the best iterate it has seen; plain
gradient descent uses a halving backtracking line search and never accepts an
increase.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .consistency import (
    ConsistencyWeights,
    cam_loss_arrays,
    implied_translation,
    loss_2d_arrays,
    stack_bboxes,
    stack_cameras,
)
from .errors import InvalidSpec, NotEnoughCrops, NumericalError, SchemaError
from .geometry import LocalCamera, full_focal
from .gradcheck import GradCheckReport, grad_check

MAX_HALVINGS = 30


@dataclass(frozen=True)
class SolveConfig:
    max_iters: int = 2000
    step: float = 1e-2
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    tol_grad: float = 1e-8
    lambda_cam: float = 1.0
    lambda_2d: float = 1e-3
    weights: ConsistencyWeights = field(default_factory=ConsistencyWeights)

    def validate(self):
        if self.optimizer not in ("adam", "gd"):
            raise InvalidSpec(f"optimizer must be 'adam' or 'gd', got {self.optimizer!r}")
        if not self.step > 0:
            raise InvalidSpec(f"step must be positive, got {self.step}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvalidSpec(f"max_iters must be a positive integer, got {self.max_iters}")
        if self.lambda_cam < 0 or self.lambda_2d < 0:
            raise InvalidSpec("loss weights must be >= 0")
        return self

    def to_dict(self):
        return {
            "max_iters": self.max_iters,
            "step": self.step,
            "optimizer": self.optimizer,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
            "tol_grad": self.tol_grad,
            "lambda_cam": self.lambda_cam,
            "lambda_2d": self.lambda_2d,
            "weights": {
                "lambda_x": self.weights.lambda_x,
                "lambda_y": self.weights.lambda_y,
                "lambda_s": self.weights.lambda_s,
            },
        }

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise SchemaError("config", "expected an object")
        known = set(cls.__dataclass_fields__)
        for key in d:
            if key not in known:
                raise SchemaError(f"config.{key}", "unknown field")
        kwargs = dict(d)
        if "weights" in kwargs:
            w = kwargs["weights"]
            if not isinstance(w, dict) or not set(w) <= {"lambda_x", "lambda_y", "lambda_s"}:
                raise SchemaError("config.weights", "expected an object with lambda_x, lambda_y, lambda_s")
            kwargs["weights"] = ConsistencyWeights(**{k: float(v) for k, v in w.items()})
        return cls(**kwargs).validate()


@dataclass
class SolveReport:
    iterations: int
    converged: bool
    initial: dict
    final: dict
    implied_before: list
    implied_after: list
    spread_before: float
    spread_after: float
    history: list = field(default_factory=list, repr=False)

    @property
    def spread_reduction(self):
        if self.spread_after == 0.0:
            return float("inf") if self.spread_before > 0 else 1.0
        return self.spread_before / self.spread_after

    def to_dict(self):
        reduction = self.spread_reduction
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "initial": self.initial,
            "final": self.final,
            "implied_before": self.implied_before,
            "implied_after": self.implied_after,
            "spread_before": self.spread_before,
            "spread_after": self.spread_after,
            # JSON has no infinity
            "spread_reduction": reduction if np.isfinite(reduction) else None,
        }


class Objective:
    """Total loss of a scene as a function of the ``(M, 3)`` array ``(log s, t_x, t_y)``."""

    def __init__(self, scene, cfg: SolveConfig):
        if scene.m < 2:
            raise NotEnoughCrops(f"refinement needs at least 2 crops, got {scene.m}")
        self.boxes = stack_bboxes(scene.bboxes)
        self.joints = np.asarray(scene.joints3d, dtype=np.float64)
        self.gt2d = np.asarray(scene.gt2d_full, dtype=np.float64)
        self.img = scene.img
        self.cfg = cfg

    def to_theta(self, cams):
        p = stack_cameras(cams)
        return np.column_stack([np.log(p[:, 0]), p[:, 1], p[:, 2]])

    @staticmethod
    def to_params(theta):
        return np.column_stack([np.exp(theta[:, 0]), theta[:, 1], theta[:, 2]])

    def parts(self, theta):
        params = self.to_params(theta)
        l_cam = cam_loss_arrays(params, self.boxes, self.cfg.weights)
        l_2d = loss_2d_arrays(self.joints, self.gt2d, params, self.boxes, self.img)
        return l_cam, l_2d

    def value(self, theta):
        l_cam, l_2d = self.parts(theta)
        return self.cfg.lambda_cam * l_cam + self.cfg.lambda_2d * l_2d

    def value_and_grad(self, theta):
        params = self.to_params(theta)
        l_cam, g_cam = cam_loss_arrays(params, self.boxes, self.cfg.weights, grad=True)
        l_2d, g_2d, _ = loss_2d_arrays(self.joints, self.gt2d, params, self.boxes, self.img, grad=True)
        g = self.cfg.lambda_cam * g_cam + self.cfg.lambda_2d * g_2d
        # chain rule through s = exp(log s)
        g[:, 0] *= params[:, 0]
        return self.cfg.lambda_cam * l_cam + self.cfg.lambda_2d * l_2d, g


def implied_full(params, boxes, img):
    """Per-crop implied full-image translations, shape ``(M, 3)``."""
    x, y, p = implied_translation(params, boxes)
    return np.column_stack([x, y, 2.0 * full_focal(*img) / p])


def spread(translations):
    t = np.asarray(translations)
    diff = t[:, None, :] - t[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))


def _summary(obj, theta):
    l_cam, l_2d = obj.parts(theta)
    return {"L_cam": l_cam, "L_2D": l_2d, "total": obj.cfg.lambda_cam * l_cam + obj.cfg.lambda_2d * l_2d}


def _check(value, grad, it):
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise NumericalError("loss or gradient is not finite", iteration=it)


def _adam(obj, theta, cfg, history):
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    best_val, best = np.inf, theta
    it = 0
    converged = False
    for it in range(cfg.max_iters + 1):
        val, g = obj.value_and_grad(theta)
        _check(val, g, it)
        history.append(val)
        if val < best_val:
            best_val, best = val, theta
        if np.max(np.abs(g)) <= cfg.tol_grad:
            converged = True
            break
        if it == cfg.max_iters:
            break
        t = it + 1
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        m_hat = m / (1.0 - cfg.beta1**t)
        v_hat = v / (1.0 - cfg.beta2**t)
        theta = theta - cfg.step * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return best, it, converged


def _gd(obj, theta, cfg, history):
    val, g = obj.value_and_grad(theta)
    _check(val, g, 0)
    history.append(val)
    step = cfg.step
    it = 0
    converged = False
    for it in range(cfg.max_iters):
        if np.max(np.abs(g)) <= cfg.tol_grad:
            converged = True
            break
        for _ in range(MAX_HALVINGS + 1):
            trial = theta - step * g
            try:
                trial_val = obj.value(trial)
            except NumericalError:
                trial_val = np.inf
            if trial_val <= val:
                break
            step *= 0.5
        else:
            # no non-increasing step along the gradient: stationary to working precision
            converged = True
            break
        theta = trial
        val, g = obj.value_and_grad(theta)
        _check(val, g, it + 1)
        history.append(val)
        step *= 2.0
    else:
        converged = bool(np.max(np.abs(g)) <= cfg.tol_grad)
        it = cfg.max_iters
    return theta, it, converged


def refine_cameras(scene, cfg: SolveConfig = SolveConfig()):
    """Return ``(refined local cameras, SolveReport)`` for the scene's current cameras."""
    cfg.validate()
    obj = Objective(scene, cfg)
    theta0 = obj.to_theta(scene.local_cams)
    history = []
    if cfg.optimizer == "adam":
        theta, iters, converged = _adam(obj, theta0, cfg, history)
    else:
        theta, iters, converged = _gd(obj, theta0, cfg, history)
    params = obj.to_params(theta)
    cams = [LocalCamera(float(s), float(tx), float(ty)) for s, tx, ty in params]
    before = implied_full(obj.to_params(theta0), obj.boxes, obj.img)
    after = implied_full(params, obj.boxes, obj.img)
    report = SolveReport(
        iterations=iters,
        converged=converged,
        initial=_summary(obj, theta0),
        final=_summary(obj, theta),
        implied_before=before.tolist(),
        implied_after=after.tolist(),
        spread_before=spread(before),
        spread_after=spread(after),
        history=history,
    )
    return cams, report


def fd_validate(scene, cfg: SolveConfig = SolveConfig(), rtol=1e-4, atol=1e-8, grad_fn=None) -> GradCheckReport:
    """Check the total-loss gradient at the scene's cameras against central differences.

    ``grad_fn(theta) -> (value, grad)`` replaces the analytic gradient, e.g. to
    confirm that a corrupted gradient is caught.
    """
    obj = Objective(scene, cfg)
    theta = obj.to_theta(scene.local_cams)
    _, g = (grad_fn or obj.value_and_grad)(theta)
    return grad_check(obj.value, theta, g, rtol=rtol, atol=atol)
