import csv
import json

import pytest

from mespot.cli import main

STATIC = {"n": 52, "size": 48, "videos": [{"video_id": "s1"}, {"video_id": "s2", "sigma": 0.0}]}


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def static_set(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(STATIC))
    out = tmp_path / "data"
    assert main(["synth", "--spec", str(spec), "--out", str(out)]) == 0
    return out


class TestSynth:
    def test_layout(self, static_set):
        frames = sorted((static_set / "frames" / "s1").iterdir())
        assert len(frames) == 52 and frames[0].name == "frame_0001.png"
        assert (static_set / "landmarks" / "s2.csv").is_file()
        assert rows(static_set / "annotations.csv") == []

    def test_repeatable_bytes(self, tmp_path, static_set):
        spec = tmp_path / "spec.json"
        again = tmp_path / "again"
        main(["synth", "--spec", str(spec), "--out", str(again)])
        for name in ("frame_0001.png", "frame_0052.png"):
            assert (again / "frames/s1" / name).read_bytes() == (static_set / "frames/s1" / name).read_bytes()

    def test_event_out_of_range(self, tmp_path, capsys):
        spec = tmp_path / "bad.json"
        spec.write_text(json.dumps({"n": 10, "events": [{"onset": 5, "offset": 30}]}))
        assert main(["synth", "--spec", str(spec), "--out", str(tmp_path / "o")]) == 2
        assert "outside frames" in capsys.readouterr().err


class TestSpot:
    def test_static_no_crop(self, static_set, tmp_path):
        pred = tmp_path / "pred.csv"
        series_dir = tmp_path / "series"
        code = main(["spot", "--frames-root", str(static_set / "frames"), "--no-crop", "--kind", "micro",
                     "--out", str(pred), "--dump-series", str(series_dir)])
        assert code == 0
        assert pred.read_text().splitlines() == ["video_id,start,end,type,k,p"]
        dumped = rows(series_dir / "s1_micro.csv")
        assert len(dumped) == 52 - 24 and all(float(r["dbar"]) == 0 for r in dumped)

    def test_static_with_crop(self, static_set, tmp_path):
        pred = tmp_path / "pred.csv"
        code = main(["spot", "--frames-root", str(static_set / "frames"),
                     "--landmarks-root", str(static_set / "landmarks"), "--kind", "micro",
                     "--out", str(pred)])
        assert code == 0 and rows(pred) == []

    def test_missing_landmarks(self, static_set, tmp_path, capsys):
        (static_set / "landmarks" / "s2.csv").unlink()
        code = main(["spot", "--frames-root", str(static_set / "frames"),
                     "--landmarks-root", str(static_set / "landmarks"), "--kind", "micro",
                     "--out", str(tmp_path / "pred.csv")])
        assert code == 1
        assert "s2: no landmark file" in capsys.readouterr().err

    def test_p_one_gives_no_rows(self, tmp_path):
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({"video_id": "m", "n": 60, "size": 48, "sigma": 1.0,
                                    "events": [{"onset": 26, "offset": 37, "peak": 2.0}]}))
        main(["synth", "--spec", str(spec), "--out", str(tmp_path / "d")])
        pred = tmp_path / "pred.csv"
        code = main(["spot", "--frames-root", str(tmp_path / "d/frames"), "--no-crop", "--kind", "micro",
                     "--p", "1.0", "--out", str(pred)])
        assert code == 0 and rows(pred) == []

    def test_config_file(self, static_set, tmp_path):
        config = tmp_path / "run.toml"
        pred = tmp_path / "pred.csv"
        config.write_text(f'kind = "micro"\nno_crop = true\nframes_root = "{static_set / "frames"}"\n'
                          f'out = "{pred}"\nunrelated = 1\n')
        assert main(["spot", "--config", str(config)]) == 0
        assert pred.is_file()

    def test_missing_required(self):
        with pytest.raises(SystemExit) as exc:
            main(["spot", "--no-crop"])
        assert exc.value.code == 2


def write(path, text):
    path.write_text(text)
    return str(path)


GT = "video_id,onset,apex,offset,type\nv1,10,15,20,macro\nv1,40,44,48,micro\nv2,5,8,0,micro\n"


class TestEval:
    def test_perfect(self, tmp_path, capsys):
        gt = write(tmp_path / "gt.csv", GT)
        pred = write(tmp_path / "pred.csv", "video_id,start,end,type,k,p\n"
                     "v1,10,20,macro,39,0.01\nv1,40,48,micro,12,0.01\nv2,5,8,micro,12,0.01\n")
        out = tmp_path / "report.json"
        assert main(["eval", "--pred", pred, "--gt", gt, "--out", str(out)]) == 0
        report = json.loads(out.read_text())
        assert all(report["dataset"][s]["f1"] == 1.0 for s in ("macro", "micro", "overall"))
        assert "overall F1: 1.0000" in capsys.readouterr().out

    def test_empty_predictions(self, tmp_path):
        gt = write(tmp_path / "gt.csv", GT)
        pred = write(tmp_path / "pred.csv", "video_id,start,end,type,k,p\n")
        out = tmp_path / "report.json"
        main(["eval", "--pred", pred, "--gt", gt, "--out", str(out)])
        overall = json.loads(out.read_text())["dataset"]["overall"]
        assert overall["recall"] == 0 and overall["precision"] is None and overall["f1"] == 0

    def test_bad_prediction_file(self, tmp_path):
        gt = write(tmp_path / "gt.csv", GT)
        pred = write(tmp_path / "pred.csv", "nonsense\n")
        assert main(["eval", "--pred", pred, "--gt", gt]) == 2


class TestSweep:
    def _run(self, static_set, tmp_path, *grid):
        out = tmp_path / "sweep.csv"
        code = main(["sweep", "--frames-root", str(static_set / "frames"), "--no-crop", "--kind", "micro",
                     "--gt", str(static_set / "annotations.csv"), "--out", str(out), *grid])
        return code, out

    def test_twenty_rows_per_kind(self, static_set, tmp_path):
        code, out = self._run(static_set, tmp_path, "--p-start", "0.01", "--p-end", "0.20", "--p-step", "0.01")
        table = rows(out)
        assert code == 0 and len(table) == 60
        assert sum(r["kind"] == "micro" for r in table) == 20
        assert table[-1]["p"] == "0.2"

    def test_single_point(self, static_set, tmp_path):
        code, out = self._run(static_set, tmp_path, "--p-start", "0.01", "--p-end", "0.01")
        assert code == 0 and [r["kind"] for r in rows(out)] == ["macro", "micro", "overall"]

    def test_step_larger_than_range(self, static_set, tmp_path):
        code, _ = self._run(static_set, tmp_path, "--p-start", "0.1", "--p-end", "0.2", "--p-step", "0.5")
        assert code == 2
