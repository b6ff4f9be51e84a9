import json

import pytest

from det3dkit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def synth_pair(tmp_path, capsys, preset="default", sigma_t=0.0, seed=0, extra=()):
    tmp_path.mkdir(parents=True, exist_ok=True)
    gt = tmp_path / "gt.jsonl"
    pred = tmp_path / "pred.jsonl"
    code, _, _ = run(
        capsys,
        "synth",
        "--preset",
        preset,
        "--sigma-t",
        str(sigma_t),
        "--seed",
        str(seed),
        "--gt-out",
        str(gt),
        "--pred-out",
        str(pred),
        *extra,
    )
    assert code == 0
    return gt, pred


class TestEval:
    def test_perfect_fixture_prints_100(self, tmp_path, capsys):
        gt, pred = synth_pair(tmp_path, capsys)
        code, out, _ = run(capsys, "eval", "--gt", str(gt), "--pred", str(pred))
        assert code == 0
        assert "ODS        100.0" in out

    def test_component_override_mode(self, capsys):
        code, out, _ = run(
            capsys,
            "eval",
            "--ap-dist", "0.086",
            "--mate", "0.903",
            "--mase", "0.867",
            "--maoe", "0.953",
        )
        assert code == 0
        assert out.strip() == "ODS 8.9"

    def test_missing_file_exit_1(self, capsys, tmp_path):
        code, _, err = run(capsys, "eval", "--gt", str(tmp_path / "no.jsonl"), "--pred", str(tmp_path / "no.jsonl"))
        assert code == 1
        assert "no.jsonl" in err

    def test_empty_gt_exit_2(self, tmp_path, capsys):
        gt = tmp_path / "gt.jsonl"
        gt.write_text("")
        code, _, _ = run(capsys, "eval", "--gt", str(gt), "--pred", str(gt))
        assert code == 2

    def test_report_and_csv_outputs(self, tmp_path, capsys):
        gt, pred = synth_pair(tmp_path, capsys, sigma_t=0.1, seed=3)
        report = tmp_path / "report.json"
        code, out, _ = run(
            capsys, "eval", "--gt", str(gt), "--pred", str(pred), "--out", str(report), "--format", "csv"
        )
        assert code == 0
        assert report.exists()
        assert out.startswith("class,ap_dist")

    def test_thread_determinism(self, tmp_path, capsys):
        gt, pred = synth_pair(tmp_path, capsys, sigma_t=0.2, seed=5)
        r1, r8 = tmp_path / "r1.json", tmp_path / "r8.json"
        assert run(capsys, "eval", "--gt", str(gt), "--pred", str(pred), "--out", str(r1), "--threads", "1")[0] == 0
        assert run(capsys, "eval", "--gt", str(gt), "--pred", str(pred), "--out", str(r8), "--threads", "8")[0] == 0
        assert r1.read_bytes() == r8.read_bytes()

    def test_figures_written(self, tmp_path, capsys):
        gt, pred = synth_pair(tmp_path, capsys, sigma_t=0.1, seed=2)
        figdir = tmp_path / "figs"
        code, out, _ = run(
            capsys, "eval", "--gt", str(gt), "--pred", str(pred), "--figures", str(figdir)
        )
        assert code == 0
        assert (figdir / "ap_per_class.png").exists()
        assert (figdir / "ap_vs_threshold.png").exists()


class TestCompareMatching:
    def test_thin_box_tops_table(self, tmp_path, capsys):
        gt, pred = synth_pair(tmp_path, capsys, preset="thin-box", sigma_t=0.2)
        code, out, _ = run(capsys, "compare-matching", "--gt", str(gt), "--pred", str(pred))
        assert code == 0
        assert "thin" in out

    def test_zero_noise_gap_is_zero(self, tmp_path, capsys):
        gt, pred = synth_pair(tmp_path, capsys, preset="large-box")
        code, out, _ = run(capsys, "compare-matching", "--gt", str(gt), "--pred", str(pred))
        assert code == 0
        row = [l for l in out.splitlines() if l.startswith("vehicle")][0]
        assert row.split()[-1] == "0.0"

    def test_deterministic_output(self, tmp_path, capsys):
        gt, pred = synth_pair(tmp_path, capsys, sigma_t=0.3, seed=9)
        _, out1, _ = run(capsys, "compare-matching", "--gt", str(gt), "--pred", str(pred))
        _, out2, _ = run(capsys, "compare-matching", "--gt", str(gt), "--pred", str(pred))
        assert out1 == out2


class TestLiftAndCanon:
    def test_lift_mirrors_library_example(self, capsys):
        code, out, _ = run(
            capsys,
            "lift",
            "--u-off", "0", "--v-off", "0",
            "--d-log", str(__import__("math").log(10)),
            "--dims-log", "0,0,0",
            "--rot6d", "1,0,0,0,1,0",
            "--box2d", "50,60,70,80",
            "--intrinsics", "100,100,50,50,100,100",
        )
        assert code == 0
        result = json.loads(out)
        assert result["center"] == pytest.approx([1, 2, 10])
        assert result["dims"] == pytest.approx([1, 1, 1])

    def test_canon_example(self, capsys):
        code, out, _ = run(
            capsys,
            "canon",
            "--intrinsics", "2000,2000,1000,750,2000,1500",
            "--canon-width", "1000",
            "--canon-height", "800",
        )
        assert code == 0
        result = json.loads(out)
        assert result["transform"]["scale"] == 0.5
        assert result["intrinsics"]["cy"] == 400.0

    def test_default_canonical_size(self, capsys):
        code, out, _ = run(capsys, "canon", "--intrinsics", "500,500,320,240,640,480")
        result = json.loads(out)
        assert result["intrinsics"]["width"] == 1333
        assert result["intrinsics"]["height"] == 800


class TestSynthCommand:
    def test_same_seed_reproducible(self, tmp_path, capsys):
        a_gt, a_pred = synth_pair(tmp_path / "a", capsys, sigma_t=0.2, seed=4, extra=())
        b_gt, b_pred = synth_pair(tmp_path / "b", capsys, sigma_t=0.2, seed=4, extra=())
        assert a_gt.read_bytes() == b_gt.read_bytes()
        assert a_pred.read_bytes() == b_pred.read_bytes()

    def test_spec_file(self, tmp_path, capsys):
        spec = tmp_path / "spec.json"
        spec.write_text(
            json.dumps(
                {
                    "n_frames": 3,
                    "boxes_per_frame": 2,
                    "classes": [{"name": "chair", "dims": [0.5, 0.5, 1.0]}],
                    "depth_range": [2, 10],
                }
            )
        )
        gt = tmp_path / "gt.jsonl"
        pred = tmp_path / "pred.jsonl"
        code, out, _ = run(
            capsys, "synth", "--spec", str(spec), "--gt-out", str(gt), "--pred-out", str(pred)
        )
        assert code == 0
        assert "6 GT boxes" in out

    def test_outputs_valid_schema(self, tmp_path, capsys):
        from det3dkit import io as dio

        gt, pred = synth_pair(tmp_path, capsys, sigma_t=0.1, seed=1)
        gts, intr = dio.read_gt(gt)
        dets, _ = dio.read_pred(pred)
        assert gts and dets and intr


class TestLossCommand:
    def test_silog(self, capsys):
        code, out, _ = run(capsys, "loss", "silog", "--pred", "1,4", "--gt", "1,1", "--lambda-si", "0.5")
        assert code == 0
        assert float(out) == pytest.approx(0.7207, abs=1e-4)

    def test_final(self, capsys):
        code, out, _ = run(capsys, "loss", "final", "--pred", "1", "--gt", "2", "--depth-loss", "0.1")
        assert code == 0
        assert float(out) == pytest.approx(4.0)


class TestConfigFile:
    def test_config_overrides_default(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"canon_width": 1000, "canon_height": 800}))
        code, out, _ = run(
            capsys,
            "--config", str(cfg),
            "canon",
            "--intrinsics", "2000,2000,1000,750,2000,1500",
        )
        assert code == 0
        assert json.loads(out)["transform"]["scale"] == 0.5

    def test_explicit_flag_wins(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"canon_width": 1000}))
        code, out, _ = run(
            capsys,
            "--config", str(cfg),
            "canon",
            "--intrinsics", "500,500,320,240,640,480",
            "--canon-width", "1333",
        )
        assert code == 0
        assert json.loads(out)["intrinsics"]["width"] == 1333


def test_unknown_flag_is_hard_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["canon", "--intrinsics", "1,1,0,0,10,10", "--bogus"])
    assert exc.value.code == 2
