import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from freedecay import make_gaussian_family, to_momentum, Grid
from freedecay.cli import ConfigError, ExperimentConfig, load_grid_file, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def data_rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_survival_row_count(capsys):
    code, out, _ = run(capsys, "survival", "--state", "gaussian", "--m", "0", "--a0", "0.5", "--t-count", "3")
    assert code == 0
    rows = data_rows(out)
    assert len(rows) == 3
    assert list(rows[0]) == ["t", "re_A", "im_A", "abs2_A", "method", "err_est"]


def test_survival_values_match_closed_form(capsys):
    code, out, _ = run(capsys, "survival", "--m", "1", "--t-lo", "1", "--t-hi", "100", "--t-count", "4", "--method", "momentum")
    assert code == 0
    for r in data_rows(out):
        t = float(r["t"])
        assert float(r["abs2_A"]) == pytest.approx((1 + t * t) ** -1.5, rel=1e-8)
        assert r["method"] == "MomentumQuadrature"


def test_survival_t_zero_row(capsys):
    code, out, _ = run(capsys, "survival", "--t-scale", "lin", "--t-lo", "0", "--t-hi", "2", "--t-count", "3")
    assert code == 0
    first = data_rows(out)[0]
    assert float(first["t"]) == 0 and float(first["abs2_A"]) == pytest.approx(1.0, abs=1e-12)


def test_metadata_block(capsys):
    _, out, _ = run(capsys, "survival", "--t-count", "2")
    head = [l for l in out.splitlines() if l.startswith("#")]
    assert head[0].startswith("# freedecay ")
    assert any("config m = 0" in l for l in head)
    assert any(l.startswith("# tolerance") for l in head)


def test_json_survival(capsys):
    code, out, _ = run(capsys, "survival", "--t-count", "2", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and len(doc["rows"]) == 2
    assert doc["metadata"]["tool"] == "freedecay"


@pytest.mark.parametrize("argv", [
    ["survival", "--state", "lorentzian"],
    ["survival", "--t-lo", "5", "--t-hi", "1"],
    ["survival", "--t-count", "1"],
    ["survival", "--order", "13"],
    ["asymptotics", "--format", "csv"],
    ["survival", "--state", "bump", "--d", "1", "--k0", "2"],
    ["survival", "--m", "two"],
])
def test_config_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2


def test_asymptotics_m1(capsys):
    code, out, _ = run(capsys, "asymptotics", "--m", "1", "--a0", "0.5", "--order", "2")
    doc = json.loads(out)
    assert code == 0
    assert doc["detected_m"] == 1 and doc["expected_exponent"] == -3
    assert doc["pass"] is True
    assert doc["fit"]["exponent"] == pytest.approx(-3, abs=0.05)
    assert doc["leading_constant"] == pytest.approx(1.0, rel=1e-12)
    assert len(doc["fit"]["residuals"]) == doc["fit"]["n_points"]
    assert doc["coefficients"][0]["re"] == 0


def test_asymptotics_bump(capsys):
    code, out, _ = run(capsys, "asymptotics", "--state", "bump", "--d", "2", "--k0", "1", "--order", "1")
    doc = json.loads(out)
    assert code == 0
    assert doc["detected_m"] == "beyond range"
    assert doc["pass"] == "super-polynomial"
    assert doc["fit"]["exponent"] < -5


def test_asymptotics_order_clamp_exit_3(capsys):
    # order 7 needs moments through 14
    code, _, err = run(capsys, "asymptotics", "--m", "0", "--order", "7")
    assert code == 3
    assert "order" in err


def test_asymptotics_noisy_grid_clamp(capsys, tmp_path):
    rng = np.random.default_rng(3)
    xg = Grid.centered(25.0, 1024)
    x = xg.points
    s = np.pi ** -0.25 * np.exp(-x * x / 2) + 1e-5 * np.exp(-x * x / 16) * rng.standard_normal(x.size)
    path = tmp_path / "noisy.txt"
    write_grid(path, "position", x, s, xg.step)
    code, _, err = run(capsys, "asymptotics", "--state", "grid", "--input", str(path), "--order", "6")
    assert code == 3
    assert "not certified" in err


def test_timeop_finite(capsys):
    code, out, _ = run(capsys, "timeop", "--m", "2", "--a0", "0.5", "--t-count", "8")
    doc = json.loads(out)
    assert code == 0
    assert doc["finite"] is True
    assert doc["norm_value"] == pytest.approx(1 / math.sqrt(2), abs=1e-8)
    assert doc["bound"]["all_hold"] is True and len(doc["bound"]["points"]) == 8


def test_timeop_infinite(capsys):
    code, out, _ = run(capsys, "timeop", "--m", "0")
    doc = json.loads(out)
    assert code == 0
    assert doc["finite"] is False and doc["norm_value"] == "inf"
    assert doc["bound_status"] == "vacuous"


def test_timeop_empty_grid(capsys):
    code, out, _ = run(capsys, "timeop", "--m", "2", "--t-count", "0")
    doc = json.loads(out)
    assert code == 0 and "bound" not in doc


def test_config_file_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[experiment]\nm = 1\na0 = 2.0\nt-count = 5\n")
    code, out, _ = run(capsys, "survival", "--config", str(cfg), "--t-count", "3")
    assert code == 0
    assert len(data_rows(out)) == 3
    assert "# config a0 = 2.0" in out and "# config m = 1" in out


def test_config_file_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[experiment]\ncolour = red\n")
    assert run(capsys, "survival", "--config", str(cfg))[0] == 2


def write_grid(path, rep, coord, samples, step):
    lines = [f"# representation={rep} spacing={float(step)!r}"]
    lines += [f"{float(c)!r} {float(z.real)!r} {float(z.imag)!r}" for c, z in zip(coord, samples)]
    path.write_text("\n".join(lines) + "\n")


def test_grid_file_momentum(capsys, tmp_path):
    psi = make_gaussian_family(1, 0.5)
    mg = to_momentum(psi, Grid.centered(12.0, 512))
    path = tmp_path / "state.txt"
    write_grid(path, "momentum", mg.grid.points, mg.samples, mg.grid.step)
    loaded = load_grid_file(path)
    assert np.allclose(loaded.samples, mg.samples, rtol=0, atol=0)
    code, out, _ = run(capsys, "survival", "--state", "grid", "--input", str(path),
                       "--t-lo", "1", "--t-hi", "10", "--t-count", "2", "--method", "momentum")
    assert code == 0
    for r in data_rows(out):
        t = float(r["t"])
        assert float(r["abs2_A"]) == pytest.approx((1 + t * t) ** -1.5, rel=1e-6)


@pytest.mark.parametrize("header", ["# spacing=0.1", "# representation=position", "# representation=energy spacing=0.1"])
def test_grid_file_bad_header(tmp_path, header):
    path = tmp_path / "bad.txt"
    path.write_text(header + "\n0 1 0\n0.1 1 0\n")
    with pytest.raises(ConfigError):
        load_grid_file(path)


def test_grid_file_nonuniform(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# representation=position spacing=0.1\n0 1 0\n0.1 1 0\n0.3 1 0\n")
    with pytest.raises(ConfigError, match="uniform"):
        load_grid_file(path)


def test_config_validate_direct():
    with pytest.raises(ConfigError):
        ExperimentConfig("survival", t_count=0, t_lo=5, t_hi=1, order=20).validate()
    assert ExperimentConfig("survival", t_count=0, t_lo=5, t_hi=1).validate().times().size == 0


@pytest.mark.parametrize("argv", [
    ["survival", "--m", "2", "--t-count", "5", "--method", "kernel", "--t-hi", "10"],
    ["asymptotics", "--m", "3"],
    ["timeop", "--m", "3", "--t-count", "4"],
])
def test_byte_identical_runs(tmp_path, argv):
    outs = []
    for i in range(2):
        path = tmp_path / f"out{i}"
        assert main(argv + ["--out", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_parallel_output_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    base = ["survival", "--state", "bump", "--t-count", "6", "--t-hi", "1e3"]
    assert main(base + ["--out", str(a)]) == 0
    assert main(base + ["--workers", "3", "--out", str(b)]) == 0
    strip = lambda p: [l for l in p.read_text().splitlines() if "workers" not in l]
    assert strip(a) == strip(b)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "freedecay", "survival", "--t-count", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert len(data_rows(proc.stdout)) == 2
