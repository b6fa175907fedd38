import csv
import json
import shutil
import subprocess
import sys

import jsonschema
import pytest

from cellid.cli import main
from cellid.config import DEFAULT_CONFIG_DIR

SUMMARY_SCHEMA = {
    "type": "object",
    "required": ["method", "repetitions", "runtime_s", "fitting_rmse_mv", "validation_rmse_mv"],
    "properties": {
        "method": {"enum": ["ls", "pso", "ga"]},
        "repetitions": {"type": "integer", "minimum": 1},
        **{k: {"type": "object", "required": ["mean", "sd"],
               "properties": {"mean": {"type": "number"}, "sd": {"type": "number", "minimum": 0}}}
           for k in ("runtime_s", "fitting_rmse_mv", "validation_rmse_mv")},
    },
}


@pytest.fixture(scope="module")
def suite_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("suite")
    assert main(["generate", "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def small_config(tmp_path_factory):
    """Packaged config with cheap optimizer budgets."""
    d = tmp_path_factory.mktemp("cfg")
    for f in DEFAULT_CONFIG_DIR.glob("*.json"):
        shutil.copy(f, d)
    opt = json.loads((d / "optimizers.json").read_text())
    opt["pso"].update(swarm_size=6, max_iterations=3)
    opt["ga"].update(population=6, generations=2)
    opt["ls"].update(max_iterations=1)
    (d / "optimizers.json").write_text(json.dumps(opt))
    return d


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestSimulate:
    def test_cc(self, tmp_path):
        out = tmp_path / "cc.csv"
        assert main(["simulate", "--profile", "cc:0.5", "--out", str(out)]) == 0
        assert json.loads((tmp_path / "cc.json").read_text())["termination"] == "v_min"
        assert len(read_rows(out)) == 7039 + 1

    def test_zero_rate_rejected(self, tmp_path, capsys):
        out = tmp_path / "x.csv"
        assert main(["simulate", "--profile", "cc:0", "--out", str(out)]) == 2
        assert "positive" in capsys.readouterr().err
        assert not out.exists()

    @pytest.mark.parametrize("spec", ["cv:0.5", "cc:", "cc:fast"])
    def test_bad_profile(self, tmp_path, spec):
        assert main(["simulate", "--profile", spec, "--out", str(tmp_path / "x.csv")]) == 2

    def test_dst(self, tmp_path):
        out = tmp_path / "dst.csv"
        assert main(["simulate", "--profile", "dst", "--reps", "2", "--out", str(out)]) == 0
        assert 1 < len(read_rows(out)) <= 720 + 1


class TestGenerate:
    def test_outputs(self, suite_dir):
        assert len(list(suite_dir.glob("*.csv"))) == 11
        manifest = json.loads((suite_dir / "manifest.json").read_text())
        assert [e["role"] for e in manifest["traces"]].count("fitting") == 1

    def test_byte_identical(self, suite_dir, tmp_path):
        assert main(["generate", "--out", str(tmp_path)]) == 0
        for f in suite_dir.iterdir():
            assert f.read_bytes() == (tmp_path / f.name).read_bytes()


class TestConfig:
    def test_schema_violation_reports_field(self, tmp_path, capsys):
        for f in DEFAULT_CONFIG_DIR.glob("*.json"):
            shutil.copy(f, tmp_path)
        cell = json.loads((tmp_path / "cell.json").read_text())
        cell["fixed"]["L_n"] = -1
        (tmp_path / "cell.json").write_text(json.dumps(cell))
        out = tmp_path / "suite"
        assert main(["generate", "--config", str(tmp_path), "--out", str(out)]) == 2
        assert "fixed/L_n" in capsys.readouterr().err
        assert not out.exists()

    def test_env_fallback(self, tmp_path, monkeypatch, small_config, suite_dir):
        monkeypatch.setenv("CELLID_CONFIG_DIR", str(small_config))
        assert main(["fit", "--method", "pso", "--suite", str(suite_dir), "--out", str(tmp_path)]) == 0
        assert json.loads((tmp_path / "result.json").read_text())["evaluations"] == 6 * 4 + 1

    def test_missing_config_dir(self, tmp_path):
        assert main(["generate", "--config", str(tmp_path / "nope"), "--out", str(tmp_path / "o")]) == 2


class TestFit:
    def test_pso_deterministic(self, suite_dir, small_config, tmp_path):
        args = ["fit", "--method", "pso", "--seed", "1", "--suite", str(suite_dir), "--config", str(small_config)]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        a = json.loads((tmp_path / "a" / "result.json").read_text())
        b = json.loads((tmp_path / "b" / "result.json").read_text())
        a.pop("wall_time_s"), b.pop("wall_time_s")
        assert a == b and a["seed"] == 1

    def test_ls_default_init_index(self, suite_dir, small_config, tmp_path):
        assert main(["fit", "--method", "ls", "--suite", str(suite_dir), "--config", str(small_config),
                     "--out", str(tmp_path)]) == 0
        res = json.loads((tmp_path / "result.json").read_text())
        assert res["init_index"] == 0 and res["method"] == "ls"

    def test_ls_bad_init_index(self, suite_dir, tmp_path):
        assert main(["fit", "--method", "ls", "--init-index", "100", "--suite", str(suite_dir),
                     "--out", str(tmp_path / "o")]) == 2
        assert not (tmp_path / "o").exists()

    def test_ga_truth_data(self, suite_dir, tmp_path):
        # packaged budgets: 300 generations of 50
        assert main(["fit", "--method", "ga", "--seed", "0", "--suite", str(suite_dir), "--out", str(tmp_path)]) == 0
        assert json.loads((tmp_path / "result.json").read_text())["fitting_rmse_mv"] < 50.0

    def test_missing_suite(self, tmp_path, capsys):
        assert main(["fit", "--method", "pso", "--suite", str(tmp_path / "none"), "--out", str(tmp_path / "o")]) == 2
        assert "generate" in capsys.readouterr().err

    def test_unknown_method(self, suite_dir, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["fit", "--method", "sa", "--suite", str(suite_dir), "--out", str(tmp_path)])
        assert exc.value.code == 2

    def test_runtime_failure_exit_code(self, suite_dir, small_config, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["fit", "--method", "pso", "--suite", str(suite_dir), "--config", str(small_config),
                     "--out", str(blocker / "o")]) == 3


class TestBench:
    def test_pso_reps(self, suite_dir, small_config, tmp_path):
        assert main(["bench", "--method", "pso", "--reps", "5", "--suite", str(suite_dir),
                     "--config", str(small_config), "--out", str(tmp_path)]) == 0
        assert len(read_rows(tmp_path / "runs.csv")) == 6
        summary = json.loads((tmp_path / "summary.json").read_text())
        jsonschema.validate(summary, SUMMARY_SCHEMA)
        assert summary["repetitions"] == 5

    def test_ls_hundred_inits(self, suite_dir, small_config, tmp_path):
        assert main(["bench", "--method", "ls", "--reps", "100", "--suite", str(suite_dir),
                     "--config", str(small_config), "--out", str(tmp_path)]) == 0
        rows = read_rows(tmp_path / "runs.csv")
        assert len(rows) == 101
        assert [int(r[1]) for r in rows[1:]] == list(range(100))
        summary = json.loads((tmp_path / "summary.json").read_text())
        jsonschema.validate(summary, SUMMARY_SCHEMA)
        assert summary["hist_bin_mv"] == 10.0


def test_console_script_help():
    proc = subprocess.run([sys.executable, "-m", "cellid.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for cmd in ("simulate", "generate", "fit", "bench"):
        assert cmd in proc.stdout
