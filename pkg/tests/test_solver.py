from dataclasses import replace

import numpy as np
import pytest

from multicrop.consistency import all_pair_residuals, cam_loss
from multicrop.errors import InvalidSpec, NotEnoughCrops, NumericalError, SchemaError
from multicrop.solver import Objective, SolveConfig, fd_validate, refine_cameras, spread
from multicrop.synth import make_scene, perturb


def noisy(seed, sigma=0.05):
    return perturb(make_scene(seed), sigma, sigma, 1000 + seed)


def test_noise_free_scene_is_left_alone():
    scene = make_scene(0)
    for opt in ("adam", "gd"):
        cams, report = refine_cameras(scene, SolveConfig(optimizer=opt))
        assert report.iterations <= 1
        for a, b in zip(cams, scene.local_cams):
            np.testing.assert_allclose(a.as_array(), b.as_array(), rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_recovery_from_noise(seed):
    scene = noisy(seed)
    cams, report = refine_cameras(scene)
    assert report.final["L_cam"] <= 1e-6
    assert report.spread_reduction >= 100
    assert report.final["total"] <= report.initial["total"]
    assert cam_loss(cams, scene.bboxes) == pytest.approx(report.final["L_cam"], rel=1e-9, abs=1e-15)
    truth = np.array(scene.full_cam.translation)
    np.testing.assert_allclose(report.implied_after, np.broadcast_to(truth, (5, 3)), rtol=1e-4)


def test_consistency_term_alone_reaches_zero_residuals():
    for seed in range(5):
        scene = noisy(seed)
        cams, _ = refine_cameras(scene, SolveConfig(lambda_2d=0.0))
        for _, _, rx, ry, rs in all_pair_residuals(cams, scene.bboxes):
            assert max(abs(rx), abs(ry), abs(rs)) < 1e-6


def test_reprojection_alone_also_aligns_crops():
    # each crop's reprojection term depends only on its own implied full translation,
    # so every crop is pulled to the same minimizer even without the consistency term
    scene = noisy(3)
    obj = Objective(scene, SolveConfig(lambda_cam=0.0))
    theta = obj.to_theta(scene.local_cams)
    base = obj.value(theta)
    moved = theta.copy()
    moved[0] += 0.01
    # moving crop 0 changes the loss by the same amount whatever the other crops are
    change = obj.value(moved) - base
    pair = Objective(replace(scene, bboxes=scene.bboxes[:2], local_cams=scene.local_cams[:2]), SolveConfig(lambda_cam=0.0))
    t2 = pair.to_theta(scene.local_cams[:2])
    m2 = t2.copy()
    m2[0] += 0.01
    assert change == pytest.approx(pair.value(m2) - pair.value(t2), rel=1e-9)

    _, report = refine_cameras(scene, SolveConfig(lambda_cam=0.0))
    assert report.final["L_2D"] < report.initial["L_2D"]
    assert report.spread_reduction >= 100


def test_gd_never_increases():
    scene = noisy(4)
    _, report = refine_cameras(scene, SolveConfig(optimizer="gd", max_iters=300, step=1e-3))
    h = np.array(report.history)
    assert np.all(np.diff(h) <= 0)
    assert report.final["total"] < report.initial["total"]


def test_adam_returns_best_iterate():
    scene = noisy(6)
    _, report = refine_cameras(scene, SolveConfig(max_iters=50, step=0.2))
    assert report.final["total"] == pytest.approx(min(report.history), rel=1e-12)


def test_determinism():
    scene = noisy(7)
    a = refine_cameras(scene)[1].to_dict()
    b = refine_cameras(scene)[1].to_dict()
    assert a == b


@pytest.mark.parametrize("seed", range(20))
def test_fd_validate_random_scenes(seed):
    report = fd_validate(noisy(seed), rtol=1e-4)
    assert report.passed, report


def test_fd_validate_zero_noise_gradients_vanish():
    report = fd_validate(make_scene(2))
    assert np.max(np.abs(report.analytic)) <= 1e-8
    assert np.max(np.abs(report.numeric)) <= 1e-8


def test_fd_validate_catches_sign_flip():
    scene = noisy(8)
    obj = Objective(scene, SolveConfig())

    def flipped(theta):
        val, g = obj.value_and_grad(theta)
        return val, -g

    assert not fd_validate(scene, grad_fn=flipped).passed


def test_nan_loss_reports_iteration():
    scene = noisy(9)
    joints = scene.joints3d.copy()
    joints[3, 0] = np.nan
    with pytest.raises(NumericalError) as info:
        refine_cameras(replace(scene, joints3d=joints))
    assert info.value.iteration == 0


def test_needs_two_crops():
    scene = make_scene(0)
    with pytest.raises(NotEnoughCrops):
        refine_cameras(replace(scene, bboxes=scene.bboxes[:1], local_cams=scene.local_cams[:1]))


def test_config_validation_and_json():
    with pytest.raises(InvalidSpec):
        refine_cameras(make_scene(0), SolveConfig(optimizer="lbfgs"))
    with pytest.raises(InvalidSpec):
        SolveConfig(step=0).validate()
    with pytest.raises(SchemaError, match=r"config\.momentum"):
        SolveConfig.from_dict({"momentum": 0.9})
    cfg = SolveConfig(max_iters=10, optimizer="gd", lambda_2d=0.5)
    assert SolveConfig.from_dict(cfg.to_dict()) == cfg


def test_spread_metric():
    assert spread([[0, 0, 0], [3, 4, 0], [1, 1, 1]]) == 5.0
    assert spread([[1, 2, 3]]) == 0.0
