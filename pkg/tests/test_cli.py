import json
import subprocess
import sys

CLI = [sys.executable, "-m", "qpjensen.cli"]


def run_cli(args, **kw):
    return subprocess.run(CLI + args, capture_output=True, text=True, **kw)


def test_lyapunov_free_case(tmp_path):
    vfile = tmp_path / "v0.txt"
    vfile.write_text("1 0 0\n-1 0 0\n")
    out = tmp_path / "out.json"
    res = run_cli([
        "lyapunov", "--potential", str(vfile), "--alpha", "0.6180339887",
        "--energy", "3,0", "--orbit", "20000", "--out-json", str(out),
    ])
    assert res.returncode == 0, res.stdout + res.stderr
    payload = json.loads(out.read_text())
    assert abs(payload["exponents"][0] - 0.9624236501192069) < 1e-4
    assert payload["config"]["version"]
    assert payload["config"]["seed"] == 0x5EED


def test_jensen_csv_and_summary(tmp_path):
    csv_path = tmp_path / "prof.csv"
    json_path = tmp_path / "prof.json"
    res = run_cli([
        "jensen", "--preset", "amo", "--lambda", "2", "--energy", "auto",
        "--eps", "0.02:0.3:16", "--orbit", "6000", "--phases", "16",
        "--out-csv", str(csv_path), "--out-json", str(json_path),
    ])
    assert res.returncode == 0, res.stdout + res.stderr
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "eps,L_measured,L_predicted,stderr"
    assert len(lines) == 17
    summary = json.loads(json_path.read_text())
    assert summary["slope_integers"] == [1]
    assert summary["sup_deviation"] < 5e-2


def test_determinism_byte_identical(tmp_path):
    argsets = []
    for tag in ("a", "b"):
        csv_path = tmp_path / f"{tag}.csv"
        res = run_cli([
            "jensen", "--preset", "amo", "--lambda", "0.5", "--energy", "1,0",
            "--eps", "0:0.25:16", "--orbit", "4000", "--phases", "8",
            "--out-csv", str(csv_path), "--out-json", str(tmp_path / f"{tag}.json"),
        ])
        assert res.returncode == 0, res.stdout + res.stderr
        argsets.append(csv_path.read_bytes())
    assert argsets[0] == argsets[1]


def test_seed_env_override(tmp_path):
    out = tmp_path / "o.json"
    res = run_cli(
        ["spectrum-approx", "--preset", "amo", "--lambda", "0.5",
         "--out-csv", str(tmp_path / "s.csv"), "--out-json", str(out)],
        env={"QPJ_SEED": "0xABCD", "PATH": "/usr/bin:/bin:/usr/local/bin"},
    )
    assert res.returncode == 0, res.stdout + res.stderr
    assert json.loads(out.read_text())["config"]["seed"] == 0xABCD


def test_spectrum_approx_free_band(tmp_path):
    vfile = tmp_path / "v0.txt"
    vfile.write_text("1 0 0\n-1 0 0\n")
    csv_path = tmp_path / "spec.csv"
    res = run_cli([
        "spectrum-approx", "--potential", str(vfile), "--truncation", "400",
        "--out-csv", str(csv_path), "--out-json", str(tmp_path / "s.json"),
    ])
    assert res.returncode == 0, res.stdout + res.stderr
    rows = csv_path.read_text().strip().splitlines()[1:]
    lo = float(rows[0].split(",")[0])
    hi = float(rows[-1].split(",")[1])
    assert abs(lo + 2) < 0.1 and abs(hi - 2) < 0.1


def test_classify_csv_shape(tmp_path):
    csv_path = tmp_path / "cls.csv"
    res = run_cli([
        "classify", "--preset", "amo", "--lambda", "2", "--energy", "10,0",
        "--orbit", "4000", "--phases", "8",
        "--out-csv", str(csv_path), "--out-json", str(tmp_path / "c.json"),
    ])
    assert res.returncode == 0, res.stdout + res.stderr
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "E,L0,Lhat1,regime,omega,h,uniform"
    assert lines[1].split(",")[3] == "OutsideSpectrum"


def test_config_error_exit_code(tmp_path):
    res = run_cli(["jensen", "--preset", "amo", "--lambda", "2",
                   "--energy", "auto", "--eps", "broken"])
    assert res.returncode == 2
    payload = json.loads(res.stdout)
    assert payload["error"] == "ConfigError"


def test_rational_alpha_rejected(tmp_path):
    res = run_cli([
        "lyapunov", "--preset", "amo", "--lambda", "2", "--energy", "1,0",
        "--alpha", "0.5", "--orbit", "2000",
    ])
    assert res.returncode == 2


def test_numerical_error_exit_code(tmp_path):
    # auto energy with a zero potential file is a config error; a coarse
    # winding run is the canonical numerical failure
    res = run_cli([
        "winding", "--preset", "sem", "--lambda1", "0.6", "--lambda2", "0.3",
        "--base-energy", "3,0", "--eps", "0.4", "--sites", "220",
        "--theta-steps", "512", "--orbit", "4000", "--phases", "8",
    ])
    assert res.returncode == 3
    payload = json.loads(res.stdout)
    assert payload["error"] in ("GridTooCoarse", "WindingSlopeMismatch")


def test_missing_model_rejected():
    res = run_cli(["lyapunov", "--energy", "1,0"])
    assert res.returncode == 2
