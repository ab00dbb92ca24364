import csv
import json

import pytest

from dependent_wigner import __version__
from dependent_wigner.cli import main
from dependent_wigner.experiments import ExperimentConfig, run_convergence
from dependent_wigner.ensembles import GUE
from dependent_wigner.errors import InvalidSpec


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith(f"# dependent-wigner {__version__} config ")
    return list(csv.DictReader(lines[1:]))


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "gue.json").write_text(json.dumps({"kind": "gue", "alpha": 1}))
    (tmp_path / "cfg.json").write_text(json.dumps({
        "ensemble": {"kind": "gue", "alpha": 1},
        "N_grid": [4, 8],
        "samples_per_N": 3,
        "moments": [2, 4],
        "seed": 1,
        "output_dir": "run",
    }))
    return tmp_path


def test_oracle_subcommand(workdir, capsys):
    assert main(["oracle", "--spec", "gue.json", "--N", "2,3,4", "--k", "2,4", "--out", "o"]) == 0
    rows = read_csv(workdir / "o" / "oracle.csv")
    assert [r["exact"] for r in rows if r["k"] == "4"] == ["9/4", "19/9", "33/16"]
    assert {r["extrapolated"] for r in rows if r["k"] == "4"} == {"2"}


def test_budget_exit_code(workdir):
    assert main(["oracle", "--spec", "gue.json", "--N", "30", "--k", "6"]) == 4


def test_invalid_config_exit_code(workdir):
    assert main(["convergence", "--config", "missing.json"]) == 2
    (workdir / "bad.json").write_text(json.dumps({"ensemble": {"kind": "gue"}, "N_grid": [8, 4]}))
    assert main(["convergence", "--config", "bad.json"]) == 2
    (workdir / "weird.json").write_text(json.dumps({"kind": "nope"}))
    assert main(["flow", "--spec", "weird.json"]) == 2


def test_flow_subcommand(workdir, capsys):
    assert main(["flow", "--spec", "gue.json", "--orders", "7", "--out", "f"]) == 0
    rows = read_csv(workdir / "f" / "flow_series.csv")
    assert [r["coefficient"] for r in rows] == ["1", "0", "1", "0", "2", "0", "5"]
    ledger = json.loads((workdir / "f" / "flow_ledger.json").read_text())
    assert ledger["passed"] and ledger["provenance"]["version"] == __version__
    assert main(["flow", "--spec", "gue.json", "--orders", "5", "--truncation", "4,4", "--out", "g"]) == 0
    assert "1/z^5: 2" in capsys.readouterr().out


def test_check_cumulants_subcommand(workdir, capsys):
    (workdir / "noise.json").write_text(json.dumps({"kind": "common_noise", "beta": 0.1, "max_order": 4}))
    assert main(["check-cumulants", "--spec", "noise.json", "--limits", "4,4", "--out", "c"]) == 0
    report = json.loads((workdir / "c" / "condition_report.json").read_text())
    assert not report["all_passed"]
    assert "violate" in capsys.readouterr().out


def test_convergence_is_reproducible(workdir):
    assert main(["convergence", "--config", "cfg.json"]) == 0
    first = {p.name: p.read_bytes() for p in (workdir / "run").iterdir()}
    assert set(first) == {"moments.csv", "histogram.csv", "summary.json"}
    assert main(["convergence", "--config", "cfg.json", "--workers", "3"]) == 0
    second = {p.name: p.read_bytes() for p in (workdir / "run").iterdir()}
    assert first == second
    assert main(["convergence", "--config", "cfg.json", "--seed", "2", "--out", "other"]) == 0
    assert (workdir / "other" / "moments.csv").read_bytes() != first["moments.csv"]
    summary = json.loads(first["summary.json"])
    assert set(summary["results"]) == {"4", "8"}


def test_sample_spectrum_moments_pipeline(workdir):
    assert main(["sample", "--config", "cfg.json", "--N", "6", "--count", "2", "--out", "s"]) == 0
    files = sorted(str(p) for p in (workdir / "s").glob("*.bin"))
    assert len(files) == 2
    assert main(["spectrum", "--input", *files, "--bins", "10", "--out", "s"]) == 0
    eig = read_csv(workdir / "s" / "eigenvalues.csv")
    assert len(eig) == 12
    assert len(read_csv(workdir / "s" / "spectrum_histogram.csv")) == 10
    assert main(["moments", "--input", *files, "--k", "2", "--out", "s"]) == 0
    assert read_csv(workdir / "s" / "moments.csv")[0]["k"] == "2"


def test_output_dir_override(workdir, monkeypatch):
    monkeypatch.setenv("DEPENDENT_WIGNER_OUTPUT_DIR", str(workdir / "env"))
    assert main(["moments", "--config", "cfg.json", "--k", "2"]) == 0
    assert (workdir / "env" / "moments.csv").exists()


def test_degenerate_single_sample(tmp_path):
    cfg = ExperimentConfig(GUE(1.0), [2], samples_per_N=1, moments=[2], output_dir=str(tmp_path))
    summary = run_convergence(cfg)
    assert summary["results"]["2"]["moments"]["2"]["stderr"] == 0.0
    assert (tmp_path / "histogram.csv").exists()


def test_config_validation():
    with pytest.raises(InvalidSpec):
        ExperimentConfig(GUE(1.0), [])
    with pytest.raises(InvalidSpec):
        ExperimentConfig(GUE(1.0), [4], samples_per_N=0)
    with pytest.raises(InvalidSpec):
        ExperimentConfig(GUE(1.0), [4], report_formats=("xml",))
    a = ExperimentConfig(GUE(1.0), [4], output_dir="x")
    b = ExperimentConfig(GUE(1.0), [4], output_dir="y")
    assert a.config_hash() == b.config_hash() != ExperimentConfig(GUE(1.0), [4], seed=9).config_hash()
