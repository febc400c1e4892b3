import json
import subprocess
import sys

import numpy as np
import pytest

from lfdeblur import io as lfio
from lfdeblur.cli import main
from lfdeblur.forward import MotionPath


@pytest.fixture
def work(tmp_path):
    assert main(["synth", "--kind", "two-plane", "--dims", "16", "16", "4", "4",
                 "--depths", "0.6", "1.2", "--seed", "3", "-o", str(tmp_path / "s.lfz")]) == 0
    lfio.write_path_json(tmp_path / "p.json", MotionPath([[0, 0, 0], [0.6, 0.2, 0], [1.0, 0.5, 0]]))
    lfio.write_path_json(tmp_path / "z.json", MotionPath.zero(2))
    return tmp_path


def metrics(capsys, a, b, *extra):
    capsys.readouterr()
    assert main(["metrics", "--a", str(a), "--b", str(b), *extra]) == 0
    return json.loads(capsys.readouterr().out)


def test_metrics_self_is_zero(work, capsys):
    assert metrics(capsys, work / "s.lfz", work / "s.lfz") == {"rmse": 0.0}


def test_zero_path_blur_is_identity(work, capsys):
    assert main(["blur", "-i", str(work / "s.lfz"), "--path", str(work / "z.json"),
                 "-o", str(work / "b.lfz")]) == 0
    assert metrics(capsys, work / "b.lfz", work / "s.lfz") == {"rmse": 0.0}


def test_blur_then_deconvolve(work, capsys):
    s, b, d = work / "s.lfz", work / "b.lfz", work / "d.lfz"
    assert main(["blur", "-i", str(s), "--path", str(work / "p.json"), "--time-samples", "16",
                 "-o", str(b)]) == 0
    assert main(["deconv-inplane", "-i", str(b), "--path", str(work / "p.json"),
                 "--time-samples", "16", "--wiener-eps", "1e-3", "-o", str(d)]) == 0
    before = metrics(capsys, b, s, "--central-view")["rmse"]
    assert before > 0
    assert lfio.read_lfz(d).dims == lfio.read_lfz(s).dims


def test_view_outputs(work):
    for extra in (["--sub", "1", "2"], ["--epi", "3", "0"], ["--refocus", "0.5"]):
        out = work / "v.png"
        assert main(["view", "-i", str(work / "s.lfz"), *extra, "-o", str(out)]) == 0
        assert lfio.read_png(out).ndim == 3


def test_recover_texture_outputs(work):
    assert main(["recover-texture", "-i", str(work / "s.lfz"), "--zmin", "0.5", "--zmax", "1.5",
                 "--slopes", "5", "-o", str(work / "t.png"), "--weights", str(work / "w.json")]) == 0
    doc = json.loads((work / "w.json").read_text())
    assert len(doc["weights"]) == 5 and abs(sum(doc["weights"]) - 1) < 1e-9


def test_deblur_blind_outputs_and_report(work):
    cfg = work / "cfg.json"
    cfg.write_text(json.dumps({"iters_stage1": 5, "iters_stage2": 3, "T": 4, "seed": 1}))
    args = ["deblur-blind", "-i", str(work / "s.lfz"), "--config", str(cfg),
            "-o", str(work / "o.lfz"), "--path-out", str(work / "op.json"),
            "--report", str(work / "r.json")]
    assert main(args) == 0
    rep = json.loads((work / "r.json").read_text())
    assert len(rep["loss_trace"]) == 8 and rep["config"]["lambda"] > 0
    lfio.read_path_json(work / "op.json")


def test_divergence_exit_code(work):
    cfg = work / "cfg.json"
    cfg.write_text(json.dumps({"iters_stage1": 20, "iters_stage2": 0, "T": 4,
                               "lr_lightfield": 1e300}))
    with np.errstate(all="ignore"):
        code = main(["deblur-blind", "-i", str(work / "s.lfz"), "--config", str(cfg),
                     "-o", str(work / "o.lfz"), "--report", str(work / "r.json")])
    assert code == 3
    assert json.loads((work / "r.json").read_text())["diverged"] is True
    assert not (work / "o.lfz").exists()


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["synth", "--kind", "plane"],
                                  ["metrics", "--a", "x.lfz"]])
def test_usage_errors(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().out == ""


def test_data_errors(work, capsys):
    (work / "bad.lfz").write_bytes(b"NOPE" + bytes(40))
    assert main(["metrics", "--a", str(work / "bad.lfz"), "--b", str(work / "s.lfz")]) == 2
    assert "not an LFZ file" in capsys.readouterr().err
    assert main(["metrics", "--a", str(work / "missing.lfz"), "--b", str(work / "s.lfz")]) == 2
    cfg = work / "cfg.json"
    cfg.write_text('{"learning_rate": 1}')
    assert main(["deblur-blind", "-i", str(work / "s.lfz"), "--config", str(cfg),
                 "-o", str(work / "o.lfz")]) == 2
    assert main(["view", "-i", str(work / "s.lfz"), "--sub", "9", "0", "-o",
                 str(work / "v.png")]) == 2
    assert main(["recover-texture", "-i", str(work / "s.lfz"), "--zmin", "2", "--zmax", "1",
                 "-o", str(work / "t.png")]) == 1


def test_runs_are_byte_reproducible(tmp_path):
    def pipeline(d):
        d.mkdir()
        lfio.write_path_json(d / "p.json", MotionPath([[0, 0, 0], [0.5, 0.1, 0.01], [0.9, 0.4, 0.02]]))
        (d / "cfg.json").write_text(json.dumps({"iters_stage1": 4, "iters_stage2": 2, "T": 4}))
        steps = [
            ["synth", "--kind", "checker-scene", "--dims", "12", "12", "3", "3", "--seed", "7",
             "-o", "s.lfz"],
            ["blur", "-i", "s.lfz", "--path", "p.json", "-o", "b.lfz"],
            ["deblur-blind", "-i", "b.lfz", "--config", "cfg.json", "-o", "o.lfz",
             "--path-out", "op.json", "--report", "r.json"],
            ["recover-texture", "-i", "b.lfz", "--zmin", "0.5", "--zmax", "2", "--slopes", "4",
             "-o", "t.png", "--weights", "w.json"],
            ["view", "-i", "o.lfz", "--refocus", "0.3", "-o", "v.png"],
        ]
        for argv in steps:
            r = subprocess.run([sys.executable, "-m", "lfdeblur.cli", *argv], cwd=d,
                               capture_output=True)
            assert r.returncode == 0, r.stderr.decode()
        return {p.name: p.read_bytes() for p in sorted(d.iterdir())}

    a = pipeline(tmp_path / "a")
    b = pipeline(tmp_path / "b")
    assert a.keys() == b.keys() and len(a) == 10
    assert all(a[k] == b[k] for k in a)
