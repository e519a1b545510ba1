import math
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from wittenlab.cli import main
from wittenlab.config import load_config, parse_config, parse_number
from wittenlab.errors import ConfigurationError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run(*args, env=None):
    return CliRunner().invoke(main, list(args), env=env, catch_exceptions=False)


def read_body(path):
    return [line for line in Path(path).read_text().splitlines() if not line.startswith("#")]


def test_parse_number():
    assert parse_number("3*pi/2") == pytest.approx(3 * math.pi / 2)
    assert parse_number("-1e-3") == -1e-3
    with pytest.raises(ValueError):
        parse_number("__import__('os')")


def test_minimal_config_fills_defaults():
    cfg = parse_config("[grid]\nmanifold = torus\n")
    assert cfg.n == 32 and cfg.trace_limit == 0.1
    assert cfg.manifest()["manifold"] == "torus"
    assert parse_config("").manifold == "circle"


def test_unknown_key_reports_line():
    with pytest.raises(ConfigurationError, match=r":4: unknown key 'bogus'"):
        parse_config("[grid]\nn = 64\n\nbogus = 1\n")


def test_invariant_violations():
    with pytest.raises(ConfigurationError, match="max admissible k"):
        parse_config("[grid]\nn = 8\n[spectral]\nk_list = 1e9\n")
    with pytest.raises(ConfigurationError):
        parse_config("[spectral]\nt_list = \n")
    with pytest.raises(ConfigurationError):
        parse_config("[tolerances]\ntrace_limit = -1\n")
    with pytest.raises(ConfigurationError):
        parse_config("[grid]\nmanifold = sphere\n")
    with pytest.raises(ConfigurationError):
        parse_config("not an ini file")


def test_shipped_configs_load():
    for name in ("circle.ini", "circle_convergence.ini", "torus.ini"):
        load_config(CONFIGS / name)


def test_missing_config_exit_2(tmp_path):
    res = run("spectrum", "--config", str(tmp_path / "nope.ini"), "--output-dir", str(tmp_path))
    assert res.exit_code == 2
    assert "not found" in res.output


def test_unknown_subcommand_exit_2():
    assert run("frobnicate").exit_code == 2


def test_overflow_guard_exit_2(tmp_path):
    res = run("spectrum", "--n", "8", "--k", "1e9", "--output-dir", str(tmp_path))
    assert res.exit_code == 2
    assert "max admissible k" in res.output


def test_spectrum_circulant(tmp_path):
    res = run("spectrum", "--n", "8", "--k", "0", "--output-dir", str(tmp_path))
    assert res.exit_code == 0, res.output
    rows = read_body(tmp_path / "spectrum.csv")
    assert rows[0] == "k,r,index,eigenvalue[1/length^2]"
    vals = np.array([[float(v) for v in row.split(",")] for row in rows[1:]])
    h = 2 * math.pi / 8
    ref = np.sort(4 / h ** 2 * np.sin(np.pi * np.arange(8) / 8) ** 2)
    for r in (0, 1):
        np.testing.assert_allclose(vals[vals[:, 1] == r, 3], ref, atol=1e-10)


def test_model_check_defaults(tmp_path):
    res = run("model-check", "--output-dir", str(tmp_path))
    assert res.exit_code == 0, res.output
    for name in ("mehler.csv", "trace_integral.csv", "model_trace.csv"):
        assert (tmp_path / name).exists()


def test_output_dir_from_environment(tmp_path):
    out = tmp_path / "env-out"
    res = run("model-check", env={"WITTENLAB_OUTPUT_DIR": str(out)})
    assert res.exit_code == 0
    assert (out / "mehler.csv").exists()


def test_morse_report_torus_verdicts(tmp_path):
    res = run("morse-report", "--manifold", "torus", "--output-dir", str(tmp_path))
    assert res.exit_code == 0, res.output
    lines = [line.split(" (")[0] for line in res.output.splitlines()]
    for expected in ("WEAK r=0 PASS", "WEAK r=1 PASS", "WEAK r=2 PASS", "STRONG r=0 PASS",
                     "STRONG r=1 PASS", "STRONG r=2 PASS", "EULER PASS"):
        assert expected in lines


def test_failed_check_exit_1(tmp_path):
    # a tolerance no discretization can meet
    cfg = tmp_path / "strict.ini"
    cfg.write_text("[grid]\nn = 128\n[morse]\ntrace_k = 16\ntrace_t = 1\n[tolerances]\ntrace_limit = 1e-12\n")
    res = run("heat-trace", "--config", str(cfg), "--output-dir", str(tmp_path))
    assert res.exit_code == 1
    assert "FAIL" in res.output


def test_resolution_error_exit_2(tmp_path):
    res = run("scaled-kernel", "--n", "256", "--output-dir", str(tmp_path))
    assert res.exit_code == 2
    assert "refine the grid" in res.output


def test_deterministic_bodies(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert run("bochner", "--k", "256", "--output-dir", str(out)).exit_code == 0
    assert read_body(a / "bochner.csv") == read_body(b / "bochner.csv")
    manifest = (a / "bochner.csv").read_text().splitlines()[0]
    for key in ('"grid"', '"f"', '"eps"', '"seed"', '"tool_version"', '"D"'):
        assert key in manifest
