import json
import subprocess
import sys

import pytest

from qpfigures import RenderError, render_profile, render_winding


def write_profile_inputs(tmp_path, turning=(0.1, 0.2)):
    csv_path = tmp_path / "prof.csv"
    rows = ["eps,L_measured,L_predicted,stderr"]
    for i in range(17):
        e = 0.5 * i / 16
        rows.append(f"{e},{0.1 + e},{0.1 + e},0.001")
    csv_path.write_text("\n".join(rows) + "\n")
    summary = {
        "turning_points": list(turning),
        "segments": [
            {"lo": 0.0, "hi": 0.1, "slope_integer": 0, "intercept": 0.1},
            {"lo": 0.1, "hi": 0.5, "slope_integer": 1, "intercept": 0.0},
        ],
        "sup_deviation": 1e-4,
    }
    json_path = tmp_path / "prof.json"
    json_path.write_text(json.dumps(summary))
    return csv_path, json_path


class TestProfile:
    def test_renders_and_counts_markers(self, tmp_path):
        csv_path, json_path = write_profile_inputs(tmp_path, turning=(0.1, 0.2, 0.3))
        out = tmp_path / "prof.png"
        meta = render_profile(csv_path, json_path, out)
        assert out.exists() and out.stat().st_size > 0
        assert meta["turning_markers"] == 3

    def test_missing_column(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("eps,L_measured\n0,1\n")
        _, json_path = write_profile_inputs(tmp_path)
        with pytest.raises(RenderError):
            render_profile(bad, json_path, tmp_path / "x.png")

    def test_empty_csv(self, tmp_path):
        bad = tmp_path / "empty.csv"
        bad.write_text("eps,L_measured,L_predicted\n")
        _, json_path = write_profile_inputs(tmp_path)
        with pytest.raises(RenderError):
            render_profile(bad, json_path, tmp_path / "x.png")

    def test_cli_exit_codes(self, tmp_path):
        csv_path, json_path = write_profile_inputs(tmp_path)
        out = tmp_path / "o.png"
        res = subprocess.run(
            [sys.executable, "-m", "qpfigures.cli", str(csv_path),
             str(json_path), str(out)],
            capture_output=True, text=True,
        )
        assert res.returncode == 0, res.stderr
        res = subprocess.run(
            [sys.executable, "-m", "qpfigures.cli", str(tmp_path / "nope.csv"),
             str(json_path), str(out)],
            capture_output=True, text=True,
        )
        assert res.returncode == 1


class TestWinding:
    def test_staircase(self, tmp_path):
        csv_path = tmp_path / "w.csv"
        csv_path.write_text("eps,nu\n0.05,0.0\n0.15,-1.0\n0.35,-2.0\n")
        out = tmp_path / "w.png"
        meta = render_winding(csv_path, out)
        assert out.exists() and out.stat().st_size > 0
        assert not meta["warning_banner"]

    def test_single_row(self, tmp_path):
        csv_path = tmp_path / "w1.csv"
        csv_path.write_text("eps,nu\n0.05,0.0\n")
        meta = render_winding(csv_path, tmp_path / "w1.png")
        assert meta["points"] == 1

    def test_unsnapped_warns_banner(self, tmp_path):
        csv_path = tmp_path / "w2.csv"
        csv_path.write_text("eps,nu\n0.05,0.0\n0.15,-0.62\n0.35,-2.0\n")
        meta = render_winding(csv_path, tmp_path / "w2.png")
        assert meta["warning_banner"]

    def test_missing_column(self, tmp_path):
        csv_path = tmp_path / "w3.csv"
        csv_path.write_text("eps,winding\n0.05,0\n")
        with pytest.raises(RenderError):
            render_winding(csv_path, tmp_path / "w3.png")
