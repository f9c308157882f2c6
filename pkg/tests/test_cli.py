import csv
import json
import subprocess
import sys

import pytest

from folnerlab.cli import main


def run(tmp_path, name, *args, config=None):
    out = tmp_path / name
    argv = list(args) + ["--out", str(out)]
    if config is not None:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(config))
        argv += ["--config", str(path)]
    return main(argv), out


def read_csv(path):
    with open(path) as fh:
        rows = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(rows))


def test_certify_birkhoff_zero_error(tmp_path):
    status, out = run(tmp_path, "c", "certify", "--map", "birkhoff:const=1", "--error", "zero")
    assert status == 0
    summary = json.loads((out / "summary.json").read_text())
    assert float(summary["max_violation"]) == 0
    rows = read_csv(out / "certify.csv")
    assert rows and set(rows[0]) == {"size", "partition_id", "lhs", "budget", "margin"}
    header = (out / "certify.csv").read_text().splitlines()[0]
    assert header.startswith("#")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["exit_status"] == 0 and "certify.csv" in manifest["tables"]


def test_certify_counterexample_riesz_fails_with_witness(tmp_path):
    status, out = run(tmp_path, "r", "certify", "--map", "counterexample", "--riesz-error", "l1budget=10")
    assert status == 2
    summary = json.loads((out / "summary.json").read_text())
    assert summary["divergence_partial_sum"]["value"] >= 0.9
    assert all("singleton" in json.dumps(c["witness"]) for c in summary["candidates"])


def test_realize_counterexample_reports_infeasible_tile(tmp_path):
    status, out = run(tmp_path, "x", "realize", "--map", "counterexample", "--eps", "0.1")
    assert status == 2
    failure = json.loads((out / "failure.json").read_text())
    assert failure["diagnostics"]["m_cap"] == 64


def test_realize_constant_map_certificate(tmp_path):
    status, out = run(tmp_path, "k", "realize", "--map", "birkhoff:const=1", "--eps", "0.1", "--no-phi-condition",
                      "--n-max", "64", config={"battery": {"n_random": 5}})
    assert status == 0
    cert = json.loads((out / "certificate.json").read_text())
    assert cert["m"] == 1
    assert all(float(r["residual"]) == 0 for r in read_csv(out / "battery.csv"))
    assert read_csv(out / "residuals.csv")


def test_lyapunov_constant_cocycle(tmp_path):
    cfg = {"matrices": [[[2, 1], [1, 1]], [[2, 1], [1, 1]]], "n_max": 1024, "samples": 8, "tolerance": 1e-3}
    status, out = run(tmp_path, "l", "lyapunov", "--seed", "1", config=cfg)
    assert status == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["abs_error_last"] <= 1e-3


def test_gallery_lists_all_maps(tmp_path):
    status, out = run(tmp_path, "g", "gallery")
    assert status == 0
    names = {r["name"] for r in read_csv(out / "gallery.csv")}
    assert {"counterexample", "typewriter", "cocycle", "bernoulli-birkhoff", "weak-gibbs"} <= names


@pytest.mark.parametrize("config, fragment", [
    ({"bogus": 1}, "bogus"),
    ({"battery": {"n_rand": 5}}, "battery"),
    ({"epsilon0": "big"}, "epsilon0"),
    ({"dim": 5}, "dim"),
])
def test_schema_errors_exit_1_with_path(tmp_path, capsys, config, fragment):
    status, _ = run(tmp_path, "s", "realize", "--map", "birkhoff:const=1", config=config)
    assert status == 1
    assert fragment in capsys.readouterr().err


def test_usage_errors_exit_1(tmp_path, capsys):
    assert run(tmp_path, "a", "realize", "--map", "nosuchmap")[0] == 1
    assert run(tmp_path, "b", "converge")[0] == 1  # no seed for a sampled run
    assert "seed" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 1
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["gallery", "--out", str(blocker / "sub")]) == 1


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "folnerlab.cli", "gallery", "--out", str(tmp_path / "o")],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr


def tables(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "manifest.json"}


@pytest.mark.parametrize("args, config", [
    (["certify", "--map", "counterexample", "--error", "valid"], {"family": {"max_side": 12}}),
    (["converge", "--seed", "5", "--trials", "20"], {"n_max": 1000}),
    (["erdos", "--seed", "2", "--samples", "200"], {"schedule": [1, 4, 8, 64]}),
])
def test_outputs_identical_across_runs_and_threads(tmp_path, args, config):
    _, a = run(tmp_path, "t1", *args, "--threads", "1", config=config)
    _, b = run(tmp_path, "t3", *args, "--threads", "3", config=config)
    _, c = run(tmp_path, "t1b", *args, "--threads", "1", config=config)
    ta, tb, tc = tables(a), tables(b), tables(c)
    assert ta == tb == tc
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    assert ma["tables"] == mb["tables"] and ma["config_sha256"] == mb["config_sha256"]
