import csv
import json
import subprocess
import sys

import pytest

from golden import CASES, FIXTURES, invoke
from multicrop.synth import Scene


@pytest.mark.parametrize("name, argv, stdin_name", CASES, ids=[c[0] for c in CASES])
def test_golden_output(name, argv, stdin_name):
    stdin_text = (FIXTURES / stdin_name).read_text() if stdin_name else None
    code, out, _ = invoke(argv, stdin_text)
    assert code == 0
    assert out == (FIXTURES / name).read_text()


def test_gen_crops_example():
    code, out, _ = invoke(["gen-crops", "--bbox", "10,20,100", "--mode", "fixed"])
    assert code == 0
    assert json.loads(out)[1] == {"c_x": 20.0, "c_y": 20.0, "b": 150.0}


def test_gen_crops_flags():
    _, out, _ = invoke(["gen-crops", "--bbox", "0,0,100", "--no-scale"])
    assert {b["b"] for b in json.loads(out)} == {100.0}
    _, out, _ = invoke(["gen-crops", "--bbox", "0,0,100", "--no-shift"])
    assert {(b["c_x"], b["c_y"]) for b in json.loads(out)} == {(0.0, 0.0)}
    code, _, err = invoke(["gen-crops", "--bbox", "900,0,300", "--image", "1920x1080"])
    assert code == 0 and "warning" in err


def test_piped_scene_is_consistent():
    _, scene, _ = invoke(["make-scene", "--seed", "7"])
    code, out, _ = invoke(["check-consistency"], scene)
    report = json.loads(out)
    assert code == 0
    assert report["L_cam"] == 0.0
    assert all(abs(p[k]) <= 1e-12 for p in report["pairs"] for k in ("r_x", "r_y", "r_s"))


def test_emitted_scene_round_trips():
    _, text, _ = invoke(["make-scene", "--seed", "3", "--sigma-s", "0.1", "--sigma-t", "0.02"])
    assert Scene.from_json(text).to_json() + "\n" == text


def test_out_file_matches_stdout(tmp_path):
    target = tmp_path / "scene.json"
    _, out, _ = invoke(["make-scene", "--seed", "2", "--out", str(target)])
    assert target.read_text() == out


def test_recover_camera_plot_data(tmp_path):
    series = tmp_path / "loss.csv"
    code, out, _ = invoke(["recover-camera", "--scene", "@noisy_11.json", "--plot-data", str(series)])
    assert code == 0
    rows = list(csv.reader(series.open()))
    assert rows[0] == ["iteration", "total_loss"]
    report = json.loads(out)["report"]
    assert float(rows[1][1]) == report["initial"]["total"]
    assert [int(r[0]) for r in rows[1:]] == list(range(len(rows) - 1))


def test_recover_camera_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"optimizer": "gd", "max_iters": 20}))
    code, out, _ = invoke(["recover-camera", "--scene", "@noisy_11.json", "--config", str(cfg), "--step", "0.001"])
    assert code == 0
    used = json.loads(out)["config"]
    assert (used["optimizer"], used["max_iters"], used["step"]) == ("gd", 20, 0.001)


@pytest.mark.parametrize(
    "argv",
    [
        ["gen-crops", "--bbox", "1,2"],
        ["gen-crops", "--bbox", "0,0,-5"],
        ["gen-crops", "--bbox", "0,0,5", "--bogus"],
        ["make-scene", "--image", "1920by1080"],
        ["make-scene", "--sigma-s", "-1"],
        ["nonsense"],
        [],
        ["recover-camera", "--scene", "/nonexistent/scene.json"],
        ["demo-contrastive", "--n", "1"],
    ],
)
def test_validation_errors_exit_1(argv):
    code, out, err = invoke(argv)
    assert code == 1
    assert out == ""
    assert err


def test_schema_error_names_field():
    scene = json.loads((FIXTURES / "scene_7.json").read_text())
    scene["bboxes"][2]["b"] = "wide"
    code, _, err = invoke(["check-consistency"], json.dumps(scene))
    assert code == 1
    assert "scene.bboxes[2].b" in err


def test_numerical_error_exits_2():
    scene = json.loads((FIXTURES / "noisy_11.json").read_text())
    scene["joints3d"][0][2] = -1e6
    code, _, err = invoke(["project"], json.dumps(scene))
    assert code == 2
    assert "numerical" in err


def test_help_for_every_command():
    for cmd in ("gen-crops", "make-scene", "project", "check-consistency", "recover-camera", "grad-check", "demo-contrastive", "demo-fusion"):
        proc = subprocess.run([sys.executable, "-m", "multicrop", cmd, "--help"], capture_output=True, text=True)
        assert proc.returncode == 0
        assert proc.stdout.startswith("usage:")


def test_module_entry_point_pipes():
    scene = subprocess.run(
        [sys.executable, "-m", "multicrop", "make-scene", "--seed", "7"], capture_output=True, text=True, check=True
    ).stdout
    proc = subprocess.run(
        [sys.executable, "-m", "multicrop", "check-consistency"], input=scene, capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout == (FIXTURES / "consistency_7.json").read_text()
