import json
import os

import numpy as np
import pytest

from conftest import disc_image
from overlapseg import cli, io
from overlapseg.pipeline import OverlappingObjectSegmenter


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert cli.main(["gen-synth", "--out-dir", str(out), "--images", "2", "--seed", "7"]) == 0
    return out


def write(tmp_path, name, img):
    path = tmp_path / name
    io.write_image(path, img)
    return str(path)


def load(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def test_segment_blank_image(tmp_path):
    src = write(tmp_path, "blank.png", np.full((50, 60), 255, np.uint8))
    out = tmp_path / "r.json"
    assert cli.main(["segment", "--input", src, "--out-json", str(out)]) == 0
    (rec,) = load(out)["images"]
    assert rec["objects"] == [] and rec["concave_points"] == []
    assert (rec["width"], rec["height"]) == (60, 50)


def test_segment_missing_file(tmp_path, capsys):
    code = cli.main(["segment", "--input", str(tmp_path / "nope.png"), "--out-json",
                     str(tmp_path / "r.json")])
    assert code == 1
    assert "nope.png" in capsys.readouterr().err


def test_segment_invalid_config(tmp_path):
    src = write(tmp_path, "a.png", disc_image([(80, 80)], 30))
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("alpha = lots\n")
    assert cli.main(["segment", "--input", src, "--out-json", str(tmp_path / "r.json"),
                     "--config", str(cfg)]) == 2


def test_segment_internal_failure(tmp_path, monkeypatch, capsys):
    src = write(tmp_path, "a.png", disc_image([(80, 80)], 30))

    def boom(self, X):
        raise RuntimeError("kaboom")

    monkeypatch.setattr(OverlappingObjectSegmenter, "predict", boom)
    assert cli.main(["segment", "--input", src, "--out-json", str(tmp_path / "r.json")]) == 3
    assert "kaboom" in capsys.readouterr().err


def test_segment_with_config_and_overlay(tmp_path):
    src = write(tmp_path, "two.png", disc_image([(70, 80), (110, 80)], 30))
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n_samples = 120\nkernel = matern32\n")
    out, overlay = tmp_path / "r.json", tmp_path / "o.png"
    assert cli.main(["segment", "--input", src, "--out-json", str(out), "--config", str(cfg),
                     "--overlay", str(overlay)]) == 0
    (rec,) = load(out)["images"]
    assert len(rec["objects"]) == 2
    obj = rec["objects"][0]
    assert len(obj["contour"]) == 120 and obj["kernel"]["family"] == "matern32"
    assert set(obj["cost"]) == {"concavity", "ellipticity", "symmetry", "total"}
    assert io.read_image(overlay).shape == (160, 200)


def test_segment_directory_matches_ground_truth_count(synth_dir, tmp_path):
    out = tmp_path / "pred.json"
    assert cli.main(["segment", "--input", str(synth_dir), "--out-json", str(out),
                     "--overlay", str(tmp_path / "ov")]) == 0
    pred = load(out)
    gt = load(synth_dir / "ground_truth.json")
    assert [r["image"] for r in pred["images"]] == [r["image"] for r in gt["images"]]
    for p, g in zip(pred["images"], gt["images"]):
        assert abs(len(p["objects"]) - len(g["objects"])) <= 0.1 * len(g["objects"])
    assert sorted(os.listdir(tmp_path / "ov")) == ["image_000_overlay.png", "image_001_overlay.png"]


def test_concave_single_and_two_discs(tmp_path):
    one = write(tmp_path, "one.png", disc_image([(80, 80)], 30))
    two = write(tmp_path, "two.png", disc_image([(70, 80), (110, 80)], 30))
    for src, expected in ((one, 0), (two, 2)):
        out = tmp_path / "c.json"
        assert cli.main(["concave", "--input", src, "--out-json", str(out)]) == 0
        (rec,) = load(out)["images"]
        assert len(rec["concave_points"]) == expected and "objects" not in rec


def test_concave_corrupt_png(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"\x89PNG\r\n\x1a\ngarbage")
    assert cli.main(["concave", "--input", str(bad), "--out-json", str(tmp_path / "c.json")]) == 1


def test_gen_synth_default_flags(tmp_path):
    assert cli.main(["gen-synth", "--out-dir", str(tmp_path)]) == 0
    names = sorted(os.listdir(tmp_path))
    assert "ground_truth.json" in names and len(names) == 51
    assert len([n for n in names if n.endswith(".png")]) == 50
    doc = load(tmp_path / "ground_truth.json")
    assert len(doc["images"]) == 50
    assert all(len(r["objects"]) == 40 for r in doc["images"])
    assert doc["meta"]["generator"] == "numpy.random.PCG64"


def test_gen_synth_repeat_seed_identical_bytes(tmp_path):
    for d in ("a", "b"):
        assert cli.main(["gen-synth", "--out-dir", str(tmp_path / d), "--images", "2",
                         "--objects", "10", "--seed", "3"]) == 0
    for name in ("ground_truth.json", "image_000.png", "image_001.png"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_gen_synth_overlap_validation(tmp_path):
    assert cli.main(["gen-synth", "--out-dir", str(tmp_path), "--overlap", "0.7"]) == 2
    assert cli.main(["gen-synth", "--out-dir", str(tmp_path), "--overlap", "0.7", "--unsafe",
                     "--images", "1", "--objects", "5"]) == 0


def test_eval_pred_equals_truth(synth_dir, tmp_path, capsys):
    gt = str(synth_dir / "ground_truth.json")
    out = tmp_path / "e.json"
    assert cli.main(["eval", "--pred", gt, "--gt", gt, "--out-json", str(out)]) == 0
    report = load(out)
    for key in ("concave_points", "objects"):
        s = report[key]
        assert s["tpr"] == s["ppv"] == s["acc"] == 1.0
    assert report["concave_points"]["ad"] == 0.0 and report["objects"]["ajsc"] == 1.0
    assert "TPR" in capsys.readouterr().out


def test_eval_schema_mismatch(synth_dir, tmp_path):
    gt = str(synth_dir / "ground_truth.json")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"images": [{"image": "other.png", "width": 1, "height": 1,
                                           "concave_points": []}]}))
    assert cli.main(["eval", "--pred", str(bad), "--gt", gt]) == 2
    bad.write_text("[1, 2]")
    assert cli.main(["eval", "--pred", str(bad), "--gt", gt]) == 2
    assert cli.main(["eval", "--pred", str(tmp_path / "none.json"), "--gt", gt]) == 1


def test_eval_sweep_monotone(synth_dir, tmp_path):
    pred = tmp_path / "pred.json"
    assert cli.main(["segment", "--input", str(synth_dir / "image_000.png"),
                     "--out-json", str(pred)]) == 0
    gt_doc = load(synth_dir / "ground_truth.json")
    gt_doc["images"] = gt_doc["images"][:1]
    gt = tmp_path / "gt.json"
    gt.write_text(json.dumps(gt_doc))
    out = tmp_path / "e.json"
    assert cli.main(["eval", "--pred", str(pred), "--gt", str(gt), "--sweep",
                     "--out-json", str(out)]) == 0
    sweep = load(out)["sweep"]
    jsc_tp = [r["tp"] for r in sweep["jsc_threshold"]]
    rho_tp = [r["tp"] for r in sweep["rho1"]]
    assert all(b <= a for a, b in zip(jsc_tp, jsc_tp[1:]))
    assert all(b >= a for a, b in zip(rho_tp, rho_tp[1:]))


def test_eval_concave_only_prediction(synth_dir, tmp_path):
    pred = tmp_path / "c.json"
    assert cli.main(["concave", "--input", str(synth_dir), "--out-json", str(pred)]) == 0
    out = tmp_path / "e.json"
    assert cli.main(["eval", "--pred", str(pred), "--gt", str(synth_dir / "ground_truth.json"),
                     "--out-json", str(out)]) == 0
    report = load(out)
    assert "objects" not in report and report["concave_points"]["tpr"] > 0.8


def test_eval_invalid_threshold(synth_dir):
    gt = str(synth_dir / "ground_truth.json")
    assert cli.main(["eval", "--pred", gt, "--gt", gt, "--jsc-threshold", "0"]) == 2


def test_argparse_errors_exit_two():
    with pytest.raises(SystemExit) as exc:
        cli.main(["segment"])
    assert exc.value.code == 2
