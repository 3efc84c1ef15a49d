"""Command-line interface.

Every command prints one JSON document on stdout and diagnostics on stderr.
Exit codes: 0 success, 1 validation error (bad flags, bad input files),
2 numerical error (degenerate cameras, joints behind the camera, NaN losses).
Scene inputs default to stdin so commands can be piped::

    multicrop make-scene --seed 7 | multicrop check-consistency
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .consistency import (
    ConsistencyWeights,
    all_pair_residuals,
    cam_loss,
    cam_loss_arrays,
    loss_2d,
    loss_2d_arrays,
    loss_3d,
    stack_bboxes,
    stack_cameras,
)
from .crops import CropSpec, exceeds_image, make_crops, rng
from .errors import NumericalError, SchemaError, ValidationError
from .features import (
    ContrastNet,
    FusionNet,
    clm_project,
    contrastive_loss,
    contrastive_loss_grad,
    fuse,
    fuse_backward,
    fused_mean,
)
from .geometry import (
    BBox,
    CropIntrinsics,
    LocalCamera,
    crop_pixel_map,
    local_to_full,
    project_crop,
    project_full,
)
from .gradcheck import grad_check
from .solver import SolveConfig, fd_validate, refine_cameras
from .synth import Scene, SceneConfig, dumps, make_scene, perturb


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def _floats(text, n, name):
    parts = text.split(",")
    if len(parts) != n:
        raise ValidationError(f"--{name} expects {n} comma-separated numbers, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ValidationError(f"--{name} expects numbers, got {text!r}") from None


def _image(text):
    try:
        w, h = text.lower().split("x")
        w, h = float(w), float(h)
    except ValueError:
        raise ValidationError(f"--image expects WIDTHxHEIGHT, got {text!r}") from None
    if not (w > 0 and h > 0):
        raise ValidationError(f"--image must be positive, got {text!r}")
    return w, h


def _read_text(path):
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None


def _read_json(path, what):
    try:
        return json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise SchemaError(what, f"invalid JSON: {exc}") from None


def _read_scene(path):
    return Scene.from_dict(_read_json(path, "scene"))


def _emit(obj, out=None):
    text = dumps(obj) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _weights(args):
    return ConsistencyWeights(args.lambda_x, args.lambda_y, args.lambda_s)


def _add_weight_flags(p):
    p.add_argument("--lambda-x", type=float, default=1.0)
    p.add_argument("--lambda-y", type=float, default=1.0)
    p.add_argument("--lambda-s", type=float, default=1e-4)


def cmd_gen_crops(args):
    base = BBox(*_floats(args.bbox, 3, "bbox"))
    spec = CropSpec(
        mode=args.mode,
        m=args.m if args.m is not None else 5,
        seed=args.seed,
        shift=not args.no_shift,
        scale=not args.no_scale,
    )
    boxes = make_crops(base, spec)
    if args.image:
        img = _image(args.image)
        for i, b in enumerate(boxes):
            if exceeds_image(b, img):
                print(f"warning: crop {i} extends past the {args.image} image", file=sys.stderr)
    _emit([b.to_dict() for b in boxes])


def cmd_make_scene(args):
    w, h = _image(args.image)
    cfg = SceneConfig(width=w, height=h, m=args.m, crop_mode=args.mode)
    scene = make_scene(args.seed, cfg)
    if args.sigma_s or args.sigma_t:
        noise_seed = args.noise_seed if args.noise_seed is not None else args.seed
        scene = perturb(scene, args.sigma_s, args.sigma_t, noise_seed)
    _emit(scene.to_dict(), args.out)


def cmd_project(args):
    scene = _read_scene(args.scene)
    intr = CropIntrinsics(args.crop_f, args.crop_res)
    crops = []
    for cam, box in zip(scene.local_cams, scene.bboxes):
        full = local_to_full(cam, box, scene.img)
        uv_full = project_full(scene.joints3d, full)
        crops.append(
            {
                "full_cam": full.to_dict(),
                "joints2d_full": uv_full.tolist(),
                "joints2d_crop": project_crop(scene.joints3d, cam, intr).tolist(),
                "joints2d_full_in_crop": crop_pixel_map(uv_full, box, scene.img, intr).tolist(),
            }
        )
    _emit({"crops": crops, "gt2d_full": np.asarray(scene.gt2d_full).tolist()})


def cmd_check_consistency(args):
    scene = _read_scene(args.scene)
    w = _weights(args)
    pairs = [
        {"i": i, "j": j, "r_x": rx, "r_y": ry, "r_s": rs}
        for i, j, rx, ry, rs in all_pair_residuals(scene.local_cams, scene.bboxes)
    ]
    _emit(
        {
            "pairs": pairs,
            "L_cam": cam_loss(scene.local_cams, scene.bboxes, w),
            "L_2D": loss_2d(scene.joints3d, scene.gt2d_full, scene.local_cams, scene.bboxes, scene.img),
        }
    )


def _config(args):
    cfg = SolveConfig.from_dict(_read_json(args.config, "config")) if args.config else SolveConfig()
    overrides = {}
    for name in ("max_iters", "step", "optimizer", "lambda_cam", "lambda_2d"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if overrides:
        cfg = SolveConfig.from_dict({**cfg.to_dict(), **overrides})
    return cfg


def cmd_recover_camera(args):
    scene = _read_scene(args.scene)
    cfg = _config(args)
    cams, report = refine_cameras(scene, cfg)
    if args.plot_data:
        with open(args.plot_data, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "total_loss"])
            for i, v in enumerate(report.history):
                writer.writerow([i, repr(v)])
    _emit({"config": cfg.to_dict(), "report": report.to_dict(), "local_cams": [c.to_dict() for c in cams]}, args.out)


def _random_camera_setup(gen, m):
    base = BBox(*gen.uniform([-200, -150, 150], [200, 150, 400]))
    boxes = make_crops(base, CropSpec(mode="random", m=m, seed=int(gen.integers(2**32))))
    cams = [LocalCamera(*v) for v in gen.uniform([0.5, -0.3, -0.3], [1.5, 0.3, 0.3], size=(m, 3))]
    return boxes, cams


def _grad_report(target, seed, trials):
    """Gradient checks for library losses on seeded random configurations."""
    gen = rng(seed)
    worst = None
    for _ in range(trials):
        if target == "contrastive":
            z = gen.normal(size=(3, 3, 4))
            r = grad_check(lambda x: contrastive_loss(x), z, contrastive_loss_grad(z), rtol=1e-5)
        elif target == "fusion":
            net = FusionNet.init(m=3, d=4, L=2, seed=int(gen.integers(2**32)), hidden=(8,), reduce_dim=6)
            h = gen.normal(size=(3, 4))
            boxes = [BBox(*v) for v in gen.uniform([-1, -1, 0.5], [1, 1, 1.5], size=(3, 3))]
            c = gen.normal(size=(3, 4))
            grads, _ = fuse_backward(h, boxes, net, c)
            r = grad_check(
                lambda p: float(np.sum(c * fuse(h, boxes, net.with_flat(p))[0])),
                net.flat(),
                net.flatten_grads(grads),
                rtol=1e-4,
            )
        elif target == "loss_3d":
            a, b = gen.normal(size=(2, 24, 3))
            r = grad_check(lambda x: loss_3d(x, b), a, 2.0 * (a - b), rtol=1e-5)
        else:
            boxes, cams = _random_camera_setup(gen, int(gen.integers(2, 6)))
            params, bx = stack_cameras(cams), stack_bboxes(boxes)
            if target == "cam_loss":
                _, g = cam_loss_arrays(params, bx, grad=True)
                r = grad_check(lambda p: cam_loss_arrays(p, bx), params, g, rtol=1e-5)
            else:
                img = (1920.0, 1080.0)
                j = gen.normal(scale=0.3, size=(24, 3))
                gt = gen.uniform([0, 0], [1920, 1080], size=(24, 2))
                _, g, _ = loss_2d_arrays(j, gt, params, bx, img, grad=True)
                r = grad_check(lambda p: loss_2d_arrays(j, gt, p, bx, img), params, g, rtol=1e-5)
        if worst is None or r.max_rel_err > worst.max_rel_err:
            worst = r
    out = worst.to_dict()
    out.update({"target": target, "trials": trials, "seed": seed})
    return out


def cmd_grad_check(args):
    if args.target == "total":
        if args.scene is None and sys.stdin.isatty():
            raise ValidationError("grad-check --target total needs --scene (or a scene on stdin)")
        scene = _read_scene(args.scene)
        report = fd_validate(scene, _config(args)).to_dict()
        report["target"] = "total"
    else:
        report = _grad_report(args.target, args.seed, args.trials)
    _emit(report)
    if not report["passed"]:
        return 2
    return 0


def cmd_demo_contrastive(args):
    gen = rng(args.seed)
    net = ContrastNet.init(args.d, seed=args.seed, tau=args.tau)
    # each sample gets a prototype; its crops are noisy copies of it
    proto = gen.normal(size=(args.n, 1, args.d))
    h = proto + args.crop_noise * gen.normal(size=(args.n, args.m, args.d))
    z = clm_project(h, net)
    shuffled = z[gen.permutation(args.n)]
    g = contrastive_loss_grad(z, args.tau)
    check = grad_check(lambda x: contrastive_loss(x, args.tau), z, g, rtol=1e-5)
    mixed = gen.normal(size=z.shape)
    mixed /= np.linalg.norm(mixed, axis=-1, keepdims=True)
    nm = args.n * args.m
    _emit(
        {
            "n": args.n,
            "m": args.m,
            "d": args.d,
            "tau": args.tau,
            "loss": contrastive_loss(z, args.tau),
            "loss_sample_permuted": contrastive_loss(shuffled, args.tau),
            "loss_random_unit_features": contrastive_loss(mixed, args.tau),
            "loss_identical_features": contrastive_loss(np.broadcast_to(z[:1, :1], z.shape), args.tau),
            "identical_closed_form": nm * float(np.log(nm - 1)),
            "grad_check": check.to_dict(),
        }
    )


def cmd_demo_fusion(args):
    scene = _read_scene(args.scene)
    gen = rng(args.seed)
    h = gen.normal(size=(scene.m, args.d))
    net = FusionNet.init(
        m=scene.m, d=args.d, L=args.L, seed=args.seed, variant=args.variant, coord_scale=args.coord_scale
    )
    u, w = fuse(h, scene.bboxes, net)
    c = gen.normal(size=u.shape)
    grads, _ = fuse_backward(h, scene.bboxes, net, c)
    flat = net.flat()
    idx = np.sort(gen.choice(flat.size, size=min(args.fd_coords, flat.size), replace=False))
    check = grad_check(
        lambda p: float(np.sum(c * fuse(h, scene.bboxes, net.with_flat(p))[0])),
        flat,
        net.flatten_grads(grads),
        indices=idx,
        rtol=1e-4,
    )
    _emit(
        {
            "variant": args.variant,
            "d": args.d,
            "L": args.L,
            "weights": w.tolist(),
            "row_sums": w.sum(axis=1).tolist(),
            "u_mean": fused_mean(u).tolist(),
            "grad_check": check.to_dict(),
        }
    )


def build_parser():
    parser = _Parser(prog="multicrop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-crops", help="generate the multi-crop bounding boxes")
    p.add_argument("--bbox", required=True, help="base box as cx,cy,b (pixels)")
    p.add_argument("--mode", choices=("fixed", "random"), default="fixed")
    p.add_argument("--m", type=int, default=None, help="number of crops (random mode; fixed is always 5)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--image", help="WIDTHxHEIGHT; warns about crops past the border")
    p.add_argument("--no-shift", action="store_true", help="zero the crop offsets")
    p.add_argument("--no-scale", action="store_true", help="keep every crop at the base size")
    p.set_defaults(func=cmd_gen_crops)

    p = sub.add_parser("make-scene", help="write a synthetic scene")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--mode", choices=("fixed", "random"), default="fixed")
    p.add_argument("--image", default="1920x1080")
    p.add_argument("--sigma-s", type=float, default=0.0, help="std of noise added to each s")
    p.add_argument("--sigma-t", type=float, default=0.0, help="std of noise added to each t_x, t_y (m)")
    p.add_argument("--noise-seed", type=int, default=None, help="defaults to --seed")
    p.add_argument("--out")
    p.set_defaults(func=cmd_make_scene)

    p = sub.add_parser("project", help="project scene joints through every crop camera")
    p.add_argument("--scene", default=None, help="scene JSON (default: stdin)")
    p.add_argument("--crop-f", type=float, default=5000.0)
    p.add_argument("--crop-res", type=float, default=224.0)
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("check-consistency", help="pairwise residuals and L_cam of a scene")
    p.add_argument("--scene", default=None, help="scene JSON (default: stdin)")
    _add_weight_flags(p)
    p.set_defaults(func=cmd_check_consistency)

    def solver_flags(p):
        p.add_argument("--scene", default=None, help="scene JSON (default: stdin)")
        p.add_argument("--config", help="solver config JSON")
        p.add_argument("--max-iters", type=int)
        p.add_argument("--step", type=float)
        p.add_argument("--optimizer", choices=("adam", "gd"))
        p.add_argument("--lambda-cam", type=float)
        p.add_argument("--lambda-2d", type=float)

    p = sub.add_parser("recover-camera", help="refine noisy local cameras")
    solver_flags(p)
    p.add_argument("--out")
    p.add_argument("--plot-data", metavar="CSV", help="write loss-vs-iteration series to this file")
    p.set_defaults(func=cmd_recover_camera)

    p = sub.add_parser("grad-check", help="finite-difference gradient checks")
    solver_flags(p)
    p.add_argument(
        "--target",
        choices=("total", "cam_loss", "loss_2d", "loss_3d", "contrastive", "fusion"),
        default="total",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("demo-contrastive", help="contrastive loss on seeded synthetic features")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--d", type=int, default=32)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--crop-noise", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_demo_contrastive)

    p = sub.add_parser("demo-fusion", help="crop-aware fusion weights for a scene's crops")
    p.add_argument("--scene", default=None, help="scene JSON (default: stdin)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--d", type=int, default=32)
    p.add_argument("--L", type=int, default=32)
    p.add_argument("--variant", choices=("mlp", "linear"), default="mlp")
    p.add_argument("--coord-scale", type=float, default=1.0)
    p.add_argument("--fd-coords", type=int, default=50, help="number of weights checked by finite differences")
    p.set_defaults(func=cmd_demo_fusion)
    return parser


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args) or 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run())
