import json

from gsprep.cli import main


def test_prepare_known_json(tmp_path, capsys):
    out = tmp_path / "r.json"
    rc = main(["prepare-known", "--dim", "8", "--gap", "0.1", "--overlap", "0.4", "--eps", "0.01", "--format", "json", "--out", str(out)])
    assert rc == 0
    rows = json.loads(out.read_text())
    assert rows[0]["method"] == "lcu-fourier" and rows[0]["success"]


def test_subcommands_exit_zero(capsys):
    assert main(["prepare-unknown", "--dim", "8"]) == 0
    assert main(["prepare-unknown", "--dim", "8", "--kappa", "1"]) == 0
    assert main(["estimate-energy", "--dim", "8", "--xi", "0.02"]) == 0
    assert main(["baseline", "--method", "pea", "--mode", "estimate", "--dim", "8"]) == 0
    assert main(["baseline", "--method", "filter", "--mode", "known", "--dim", "8"]) == 0
    assert main(["chebwalk", "--dim", "4"]) == 0
    out = capsys.readouterr().out
    assert out.count("method,dim") == 6


def test_config_error_exit_one(capsys):
    assert main(["prepare-known", "--model", "nope"]) == 1
    assert main(["baseline", "--method", "pea", "--mode", "combined"]) == 1
    assert main(["bench", "/nonexistent.json"]) == 1


def test_failures_exit_two(capsys):
    assert main(["prepare-known", "--qubit-cap", "3", "--dim", "16", "--gap", "0.2"]) == 2


def test_bench_with_fit(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"method": "lcu-fourier", "axis": "eps", "values": [0.1, 0.01, 0.001, 0.0001], "trials": 2}))
    rc = main(["bench", str(cfg), "--fit", "hamsim_time", "--inverse", "--out", str(tmp_path / "r.csv")])
    assert rc == 0
    summary = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert summary["fit"]["slope"] < 0.5
    assert (tmp_path / "r.csv").read_text().count("\n") == 9
