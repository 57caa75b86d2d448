import csv
import hashlib
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from fourphonon import cli, oracle
from fourphonon.config import ConfigError


def _run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _rows(path):
    with path.open(newline="") as handle:
        return list(csv.reader(handle))


def test_format_number():
    assert cli.format_number(0.5) == "5.0000000000000000e-01"
    assert cli.format_number(-1234.5) == "-1.2345000000000000e+03"
    assert cli.format_number(7) == "7"
    assert cli.format_number(None) == "undefined"
    assert cli.format_number(float("nan")) == "undefined"
    assert cli.format_number(float("inf")) == "undefined"
    # 17 significant digits reproduce the double exactly
    x = 0.1 + 0.2
    assert float(cli.format_number(x)) == x


def test_parse_r_grid():
    assert cli.parse_r_grid(["0,0.5", "1"]) == [0.0, 0.5, 1.0]
    grid = cli.parse_r_grid(["0:2:0.05"])
    assert len(grid) == 41 and grid[-1] == 2.0
    for bad in (["3.5"], ["-1"], ["1:0:0.1"], ["0:1"], ["abc"]):
        with pytest.raises((ConfigError, ValueError)):
            cli.parse_r_grid(bad)


def test_oracle_r0_row(tmp_path, capsys):
    code, out, _ = _run(capsys, "oracle", "--r-grid", "0", "--out", tmp_path)
    assert code == 0
    assert json.loads(out)["command"] == "oracle"
    header, row = _rows(tmp_path / "oracle_summary.csv")
    assert header == ["r", "n_bar", "g2_zero", "dY1", "dY2", "bound"]
    assert row[2] == "undefined"
    values = [float(v) for i, v in enumerate(row) if i != 2]
    assert values == pytest.approx([0, 0, 0.7071068, 0.7071068, 0.5], abs=1e-7)


def test_oracle_r2_populations_and_product(tmp_path, capsys):
    assert _run(capsys, "oracle", "--r-grid", "0.5,1", "2", "--out", tmp_path)[0] == 0
    pops = np.array([[float(v) for v in row] for row in _rows(tmp_path / "oracle_populations_r2.0000.csv")[1:]])
    n, p = pops[:, 0].astype(int), pops[:, 1]
    assert np.all(p[n % 4 != 0] == 0) and np.all(p[n % 4 == 0] > 0)
    for row in _rows(tmp_path / "oracle_summary.csv")[1:]:
        r, nbar, g2, d1, d2, bound = (float(v) for v in row)
        assert d1 * d2 == pytest.approx(bound, abs=1e-10)
        assert g2 > 1


def test_oracle_domain_exit_code(tmp_path, capsys):
    code, _, err = _run(capsys, "oracle", "--r-grid", "3.5", "--out", tmp_path)
    assert code == 2
    assert json.loads(err)["exit_code"] == 2


def test_csv_bytes_deterministic(tmp_path, capsys):
    for sub in ("a", "b"):
        assert _run(capsys, "oracle", "--r-grid", "0:1:0.25", "--out", tmp_path / sub)[0] == 0
    a = (tmp_path / "a" / "oracle_summary.csv").read_bytes()
    assert a == (tmp_path / "b" / "oracle_summary.csv").read_bytes()
    assert b"\r" not in a and b"nan" not in a.lower()
    assert a.endswith(b"\n")


def test_json_format(tmp_path, capsys):
    assert _run(capsys, "oracle", "--r-grid", "0", "--format", "json", "--out", tmp_path)[0] == 0
    payload = json.loads((tmp_path / "oracle_summary.json").read_text())
    assert payload["columns"][2] == "g2_zero"
    assert payload["rows"][0][2] == "undefined"
    assert "NaN" not in (tmp_path / "oracle_summary.json").read_text()


def test_steady_effective_r0(tmp_path, capsys):
    assert _run(capsys, "steady", "--model", "effective", "--r", 0, "--out", tmp_path)[0] == 0
    rows = _rows(tmp_path / "steady_effective_populations.csv")
    assert rows[0] == ["n", "P_n"]
    assert float(rows[1][1]) == pytest.approx(1.0, abs=1e-12)
    obs = json.loads((tmp_path / "steady_effective_observables.json").read_text())
    assert obs["g2_zero"] == "undefined"


def test_steady_effective_r1(tmp_path, capsys):
    assert _run(capsys, "steady", "--model", "effective", "--r", 1, "--out", tmp_path)[0] == 0
    obs = json.loads((tmp_path / "steady_effective_observables.json").read_text())
    assert obs["fidelity_oracle"] >= 0.999
    assert obs["residual"] <= 1e-10
    rho = json.loads((tmp_path / "steady_effective_rho.json").read_text())
    data = np.array(rho["data"])
    assert data.shape == (rho["dim"] ** 2, 2)
    mat = (data[:, 0] + 1j * data[:, 1]).reshape(rho["dim"], rho["dim"])
    assert np.trace(mat).real == pytest.approx(1.0, abs=1e-9)
    regime = json.loads((tmp_path / "steady_effective_regime.json").read_text())
    assert regime


def test_steady_full_g2_zero_cavity_squeezed(tmp_path, capsys):
    argv = ("steady", "--model", "full", "--r", 0.8, "--g2", 0, "--out", tmp_path)
    assert _run(capsys, *argv)[0] == 0
    obs = json.loads((tmp_path / "steady_full_observables.json").read_text())
    assert obs["fidelity_cavity_squeezed_vacuum"] >= 0.999999
    cav = json.loads((tmp_path / "steady_full_rho_cavity.json").read_text())
    assert cav["dim"] == obs["dim_cavity"]


def test_steady_nonconvergence_exit_code(tmp_path, capsys):
    code, _, err = _run(capsys, "steady", "--model", "effective", "--r", 1, "--t-cap", 0.01, "--out", tmp_path)
    assert code == 3
    payload = json.loads(err)
    assert payload["exit_code"] == 3 and payload["residual"] > 1e-10


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"model": {"r": 0.0}, "output": {"directory": str(tmp_path / "from_file")}}))
    assert _run(capsys, "oracle", "--r-grid", "0", "--config", cfg)[0] == 0
    assert (tmp_path / "from_file" / "oracle_summary.csv").exists()
    cfg.write_text(json.dumps({"model": {"r": 0.0, "typo": 1}}))
    assert _run(capsys, "steady", "--model", "effective", "--config", cfg, "--out", tmp_path)[0] == 2


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["steady"])
    assert info.value.code == 2


def test_internal_error_exit_4(monkeypatch, capsys, tmp_path):
    def boom(args):
        raise RuntimeError("unexpected")

    monkeypatch.setattr(cli, "run", boom)
    code, _, err = _run(capsys, "oracle", "--r-grid", "0", "--out", tmp_path)
    assert code == 4 and json.loads(err)["error"] == "RuntimeError"


def test_wigner_oracle_r0_and_r1(tmp_path, capsys):
    assert _run(capsys, "wigner", "--r", 0, "--n-points", 41, "--out", tmp_path / "a")[0] == 0
    meta = json.loads((tmp_path / "a" / "wigner_oracle_meta.json").read_text())
    assert meta["min_W"] >= -1e-12
    assert _run(capsys, "wigner", "--r", 1, "--n-points", 81, "--out", tmp_path / "b")[0] == 0
    meta = json.loads((tmp_path / "b" / "wigner_oracle_meta.json").read_text())
    assert meta["min_W"] < 0
    assert meta["fourfold_defect"] <= 1e-9
    assert meta["contour_levels"] == [0.25, 0.15, 0.05]
    rows = _rows(tmp_path / "b" / "wigner_oracle.csv")
    assert rows[0] == ["x", "p", "W"] and len(rows) == 81 * 81 + 1


def test_wigner_numeric(tmp_path, capsys):
    argv = ("wigner", "--source", "numeric", "--r", 0.5, "--gamma", 0.01, "--n-points", 41, "--out", tmp_path)
    assert _run(capsys, *argv)[0] == 0
    meta = json.loads((tmp_path / "wigner_numeric_meta.json").read_text())
    assert meta["source"] == "numeric" and meta["fourfold_defect"] <= 1e-5


def test_wigner_grid_violation_exit_2(tmp_path, capsys):
    assert _run(capsys, "wigner", "--r", 0.5, "--n-points", 40, "--out", tmp_path)[0] == 2
    assert _run(capsys, "wigner", "--r", 0.5, "--x-max", -1, "--out", tmp_path)[0] == 2


def test_figures(tmp_path, capsys):
    assert _run(capsys, "figures", "--n-points", 41, "--out", tmp_path)[0] == 0
    files = sorted(p.name for p in tmp_path.iterdir())
    assert len(files) == 8 and "manifest.json" in files
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["files"]) == 7
    assert len(manifest["config_sha256"]) == 64
    for entry in manifest["files"]:
        data = (tmp_path / entry["name"]).read_bytes()
        assert hashlib.sha256(data).hexdigest() == entry["sha256"]
        assert len(data) == entry["bytes"]
    rows = _rows(tmp_path / "fig2_variances.csv")[1:]
    for row in rows:
        r, d1, d2, sb, _ = (float(v) for v in row)
        if r > 0:
            assert d1 < sb < d2
    inset = _rows(tmp_path / "fig1_inset_mean_phonon.csv")[1:]
    assert len(inset) == 41
    nbar = [float(row[1]) for row in inset]
    assert all(a < b for a, b in zip(nbar, nbar[1:]))


def test_figures_deterministic(tmp_path, capsys):
    # the manifest embeds the config, output directory included, so rerun in place
    names = ("fig1_populations_r2.csv", "fig3_wigner_r1_thetapi.csv", "manifest.json")
    assert _run(capsys, "figures", "--n-points", 21, "--out", tmp_path)[0] == 0
    first = [(tmp_path / name).read_bytes() for name in names]
    assert _run(capsys, "figures", "--n-points", 21, "--out", tmp_path)[0] == 0
    assert first == [(tmp_path / name).read_bytes() for name in names]


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "fourphonon.cli", "oracle", "--r-grid", "9", "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
