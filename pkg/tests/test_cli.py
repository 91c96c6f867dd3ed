import csv
import json

import cv2
import numpy as np
import pytest

from graypixel.config.settings import settings
from graypixel.main import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, main
from graypixel.services.image_io import load_linear_image, write_pfm
from graypixel.services.synth import bundled_specs, generate_scene


@pytest.fixture(autouse=True)
def no_data_root(monkeypatch):
    monkeypatch.setattr(settings, "data", None)


@pytest.fixture(scope="module")
def scenes(tmp_path_factory):
    """Ten synthetic scenes with their manifest."""
    out = tmp_path_factory.mktemp("scenes")
    assert main(["synth", "--count", "10", "--seed", "0", "--out", str(out)]) == EXIT_OK
    return out


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_synth_writes_scenes_and_manifest(scenes):
    rows = _rows(scenes / "manifest.csv")
    assert len(rows) == 10
    assert rows[0]["image_path"] == "scene_0000.pfm"
    assert sorted(p.name for p in scenes.glob("*.pfm")) == [f"scene_{i:04d}.pfm" for i in range(10)]
    img = load_linear_image(scenes / "scene_0003.pfm")
    assert img.valid.all()


def test_evaluate_recovers_synthetic_lights(scenes, tmp_path):
    out = tmp_path / "eval"
    code = main(["evaluate", "--manifest", str(scenes / "manifest.csv"), "--out", str(out)])
    assert code == EXIT_OK
    records = _rows(out / "evaluate.csv")
    assert len(records) == 10
    assert all(r["status"] == "ok" for r in records)
    assert "runtime_ms" not in records[0]
    summary = _rows(out / "evaluate_summary.csv")
    assert summary[0]["method"] == "msgp"
    assert int(summary[0]["count"]) == 10
    assert float(summary[0]["mean"]) < 1.0


def test_estimate_prints_csv_to_stdout(scenes, capsys):
    code = main(["estimate", str(scenes / "scene_0000.pfm"), "--method", "gray-world"])
    assert code == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("path,status,method,L_r,L_g,L_b")
    assert len(lines) == 2
    assert ",ok,gray-world," in lines[1]


def test_timings_add_a_runtime_column(scenes, tmp_path):
    out = tmp_path / "timed"
    assert main(["estimate", str(scenes / "scene_0001.pfm"), "--timings", "--out", str(out)]) == EXIT_OK
    record = _rows(out / "estimate.csv")[0]
    assert float(record["runtime_ms"]) >= 0.0


def test_gray_map_marks_selected_pixels(scenes, tmp_path):
    out = tmp_path / "maps"
    assert main(["estimate", str(scenes / "scene_0002.pfm"), "--save-gray-map", "--out", str(out)]) == EXIT_OK
    canvas = cv2.imread(str(out / "scene_0002_graymap.png"), cv2.IMREAD_UNCHANGED)
    record = _rows(out / "estimate.csv")[0]
    assert np.count_nonzero(canvas) == int(record["selected_pixels"])
    assert np.count_nonzero(canvas == 255) > 0


def test_empty_manifest_succeeds(tmp_path, capsys):
    manifest = tmp_path / "empty.csv"
    manifest.write_text("image_path,gt_r,gt_g,gt_b\n", encoding="utf-8")
    assert main(["evaluate", "--manifest", str(manifest)]) == EXIT_OK
    assert main(["estimate", "--manifest", str(manifest)]) == EXIT_OK


def test_unreadable_image_is_a_partial_failure(scenes, tmp_path):
    manifest = tmp_path / "mixed.csv"
    manifest.write_text(
        f"image_path,gt_r,gt_g,gt_b\n{scenes / 'scene_0000.pfm'},1,1,1\n{tmp_path / 'missing.png'},1,1,1\n",
        encoding="utf-8",
    )
    out = tmp_path / "partial"
    assert main(["estimate", "--manifest", str(manifest), "--out", str(out)]) == EXIT_PARTIAL
    records = _rows(out / "estimate.csv")
    assert [r["status"] for r in records] == ["ok", "failed"]
    assert records[1]["error"].startswith("ImageDecodeError")


def test_evaluate_requires_ground_truth(scenes, tmp_path):
    manifest = tmp_path / "nogt.csv"
    manifest.write_text(f"image_path,gt_r,gt_g,gt_b\n{scenes / 'scene_0000.pfm'},,,\n", encoding="utf-8")
    assert main(["evaluate", "--manifest", str(manifest)]) == EXIT_CONFIG


def test_bad_manifest_is_a_config_error(tmp_path):
    manifest = tmp_path / "bad.csv"
    manifest.write_text("image_path,gt_r,gt_g,gt_b\na.png,0,0,0\n", encoding="utf-8")
    assert main(["estimate", "--manifest", str(manifest)]) == EXIT_CONFIG


@pytest.mark.parametrize(
    "flags",
    [
        ["--n-percent", "0"],
        ["--bandwidth", "-1"],
        ["--log-size", "4"],
        ["--jobs", "0"],
    ],
)
def test_invalid_parameters_are_config_errors(scenes, flags):
    assert main(["estimate", str(scenes / "scene_0000.pfm"), *flags]) == EXIT_CONFIG


def test_missing_inputs_is_a_config_error():
    assert main(["estimate"]) == EXIT_CONFIG


def test_unknown_method_is_rejected_by_the_parser(scenes):
    with pytest.raises(SystemExit) as info:
        main(["estimate", str(scenes / "scene_0000.pfm"), "--method", "retinex"])
    assert info.value.code == 2


def test_sweep_rows(scenes, tmp_path):
    out = tmp_path / "sweep"
    manifest = str(scenes / "manifest.csv")
    assert main(["sweep", "--manifest", manifest, "--grid-bandwidth", "1e-4,1e-3,1e-2", "--out", str(out)]) == EXIT_OK
    rows = _rows(out / "sweep.csv")
    assert [r["label"] for r in rows] == ["MS hybrid h=0.0001 N=0.1%", "MS hybrid h=0.001 N=0.1%", "MS hybrid h=0.01 N=0.1%"]
    assert all(int(r["count"]) == 10 for r in rows)
    means = [float(r["mean"]) for r in rows]
    assert max(means) - min(means) <= 0.5

    out = tmp_path / "sweep_k"
    args = ["sweep", "--manifest", manifest, "--grid-bandwidth", "1e-4,1e-3,1e-2", "--grid-k", "2,5,9", "--out", str(out)]
    assert main(args) == EXIT_OK
    rows = _rows(out / "sweep.csv")
    assert len(rows) == 6
    assert [r["cluster"] for r in rows[3:]] == ["kmeans"] * 3
    assert rows[3]["label"] == "K=2 N=0.1%"


def test_sweep_follows_a_kmeans_base_run(scenes, tmp_path):
    out = tmp_path / "sweep_base"
    args = ["sweep", "--manifest", str(scenes / "manifest.csv"), "--cluster", "kmeans", "--k", "2", "--out", str(out)]
    assert main(args) == EXIT_OK
    rows = _rows(out / "sweep.csv")
    assert [(r["label"], r["cluster"]) for r in rows] == [("K=2 N=0.1%", "kmeans")]
    assert int(rows[0]["count"]) == 10


def test_sweep_matches_evaluate_at_the_same_point(scenes, tmp_path):
    manifest = str(scenes / "manifest.csv")
    main(["sweep", "--manifest", manifest, "--out", str(tmp_path / "s")])
    main(["evaluate", "--manifest", manifest, "--out", str(tmp_path / "e")])
    sweep = _rows(tmp_path / "s" / "sweep.csv")[0]
    summary = _rows(tmp_path / "e" / "evaluate_summary.csv")[0]
    assert sweep["mean"] == summary["mean"]
    assert sweep["median"] == summary["median"]


def test_json_report_is_stable(scenes, tmp_path):
    manifest = str(scenes / "manifest.csv")
    outputs = []
    for name, jobs in (("a", "1"), ("b", "1"), ("c", "2")):
        out = tmp_path / name
        assert main(["evaluate", "--manifest", manifest, "--format", "json", "--jobs", jobs, "--out", str(out)]) == EXIT_OK
        outputs.append((out / "evaluate.json").read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
    report = json.loads(outputs[0])
    assert report["schema"] == 1
    assert report["summary"]["count"] == 10
    assert len(report["records"]) == 10
    assert "runtime_ms" not in report["records"][0]


def test_group_by_camera(tmp_path, scenes):
    manifest = tmp_path / "cams.csv"
    lines = ["image_path,gt_r,gt_g,gt_b,camera"]
    for row, camera in zip(_rows(scenes / "manifest.csv")[:4], ["canon", "nikon", "canon", "nikon"]):
        lines.append(f"{scenes / row['image_path']},{row['gt_r']},{row['gt_g']},{row['gt_b']},{camera}")
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    out = tmp_path / "groups"
    assert main(["evaluate", "--manifest", str(manifest), "--group-by-camera", "--out", str(out)]) == EXIT_OK
    labels = [r["method"] for r in _rows(out / "evaluate_summary.csv")]
    assert labels == ["msgp", "msgp:canon", "msgp:nikon"]


def test_correct_writes_image_and_sidecar(tmp_path):
    light = np.array([0.8, 1.0, 0.6])
    plane = np.random.default_rng(0).uniform(0.1, 0.9, size=(20, 20))
    source = tmp_path / "warm.pfm"
    write_pfm(source, plane[..., None] * light)
    out = tmp_path / "fixed"
    assert main(["correct", str(source), "--illuminant", "0.8,1.0,0.6", "--out", str(out)]) == EXIT_OK

    corrected = load_linear_image(out / "warm_corrected.png")
    assert np.allclose(corrected.data[..., 0], corrected.data[..., 1], atol=2e-4)
    assert np.allclose(corrected.data[..., 1], corrected.data[..., 2], atol=2e-4)
    sidecar = json.loads((out / "warm_corrected.json").read_text())
    assert sidecar["schema"] == 1
    assert sidecar["source"] == "explicit"
    assert sum(c * c for c in sidecar["illuminant"]) == pytest.approx(1.0)
    assert (out / "correct.csv").is_file()


def test_correct_with_ground_truth(scenes, tmp_path):
    out = tmp_path / "gt"
    args = ["correct", "--manifest", str(scenes / "manifest.csv"), "--use-ground-truth", "--out", str(out)]
    assert main(args) == EXIT_OK
    sidecar = json.loads((out / "scene_0000_corrected.json").read_text())
    assert sidecar["source"] == "ground-truth"


def test_correct_needs_an_existing_parent(scenes, tmp_path):
    out = tmp_path / "missing" / "deeper"
    assert main(["correct", str(scenes / "scene_0000.pfm"), "--out", str(out)]) == EXIT_CONFIG
    assert not out.exists()


def test_correct_needs_an_output_directory(scenes):
    assert main(["correct", str(scenes / "scene_0000.pfm")]) == EXIT_CONFIG


def test_correct_round_trip_recovers_the_reflectance(tmp_path):
    scenes = tmp_path / "scene"
    assert main(["synth", "--count", "1", "--seed", "0", "--out", str(scenes)]) == EXIT_OK
    out = tmp_path / "fixed"
    args = ["correct", "--manifest", str(scenes / "manifest.csv"), "--use-ground-truth", "--out", str(out)]
    assert main(args) == EXIT_OK

    W = generate_scene(bundled_specs(1, seed=0)[0]).W.data
    corrected = load_linear_image(out / "scene_0000_corrected.png").data
    scale = np.median(corrected / W)
    assert np.max(np.abs(corrected - scale * W) / (scale * W)) < 1e-3
