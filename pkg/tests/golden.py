"""CLI invocations whose outputs are stored under ``tests/fixtures``.

Each case is ``(name, argv, stdin_fixture)``. Scene arguments name files in the
fixture directory; they are resolved at run time so outputs never embed paths.
Run ``python3 tests/golden.py`` to rewrite the fixtures after a verified change.
"""

import contextlib
import io
import sys
from pathlib import Path

FIXTURES = Path(__file__).parent / "fixtures"

# scene files are produced first so later cases can read them
CASES = [
    ("scene_7.json", ["make-scene", "--seed", "7"], None),
    ("noisy_11.json", ["make-scene", "--seed", "11", "--sigma-s", "0.05", "--sigma-t", "0.05"], None),
    ("random_scene_5.json", ["make-scene", "--seed", "5", "--mode", "random", "--m", "4", "--image", "1280x720"], None),
    ("gen_crops_fixed.json", ["gen-crops", "--bbox", "10,20,100", "--mode", "fixed"], None),
    ("gen_crops_random.json", ["gen-crops", "--bbox", "0,0,300", "--mode", "random", "--m", "7", "--seed", "3"], None),
    ("project_7.json", ["project", "--scene", "@scene_7.json"], None),
    ("consistency_7.json", ["check-consistency"], "scene_7.json"),
    ("consistency_11.json", ["check-consistency", "--scene", "@noisy_11.json"], None),
    ("recover_11.json", ["recover-camera", "--scene", "@noisy_11.json"], None),
    ("recover_11_gd.json", ["recover-camera", "--optimizer", "gd", "--max-iters", "200"], "noisy_11.json"),
    ("recover_11_ablation.json", ["recover-camera", "--scene", "@noisy_11.json", "--lambda-cam", "0"], None),
    ("grad_cam_loss.json", ["grad-check", "--target", "cam_loss", "--trials", "5"], None),
    ("grad_loss_2d.json", ["grad-check", "--target", "loss_2d", "--trials", "5"], None),
    ("grad_loss_3d.json", ["grad-check", "--target", "loss_3d", "--trials", "5"], None),
    ("grad_contrastive.json", ["grad-check", "--target", "contrastive", "--trials", "5"], None),
    ("grad_fusion.json", ["grad-check", "--target", "fusion", "--trials", "3"], None),
    ("grad_total_11.json", ["grad-check", "--target", "total", "--scene", "@noisy_11.json"], None),
    ("demo_contrastive.json", ["demo-contrastive", "--n", "4", "--m", "5", "--d", "32", "--seed", "0"], None),
    ("demo_fusion_7.json", ["demo-fusion", "--scene", "@scene_7.json", "--seed", "0"], None),
    ("demo_fusion_linear_5.json", ["demo-fusion", "--variant", "linear", "--coord-scale", "0.001"], "random_scene_5.json"),
]


def resolve(argv):
    return [str(FIXTURES / a[1:]) if a.startswith("@") else a for a in argv]


def invoke(argv, stdin_text=None):
    """Run the CLI in-process; returns ``(exit_code, stdout, stderr)``."""
    from multicrop.cli import run

    out, err = io.StringIO(), io.StringIO()
    old_stdin = sys.stdin
    sys.stdin = io.StringIO(stdin_text or "")
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = run(resolve(argv))
    finally:
        sys.stdin = old_stdin
    return code, out.getvalue(), err.getvalue()


def regenerate():
    FIXTURES.mkdir(exist_ok=True)
    for name, argv, stdin_name in CASES:
        stdin_text = (FIXTURES / stdin_name).read_text() if stdin_name else None
        code, out, err = invoke(argv, stdin_text)
        if code != 0:
            raise SystemExit(f"{name}: exit {code}\n{err}")
        (FIXTURES / name).write_text(out)
        print(f"wrote {name}")


if __name__ == "__main__":
    regenerate()
