import json

import numpy as np
import pytest

from eitholes.cli import EXIT_INDETERMINATE, EXIT_INVARIANT, EXIT_IO, EXIT_OK, main
from eitholes.config import ExperimentConfig
from eitholes.errors import FormatError
from eitholes.pipeline import PipelineError, load_report, run_pipeline


def test_config_json_round_trip(tmp_path):
    cfg = ExperimentConfig(flavor="isolated", h=0.05, tol_kernel=0.01, plots=False)
    cfg.to_json(tmp_path / "c.json")
    assert ExperimentConfig.from_json(tmp_path / "c.json") == cfg


@pytest.mark.parametrize("kw", [
    {"flavor": "floating"},
    {"mode": "guess"},
    {"h": 0.0},
    {"tol_mean": -1.0},
    {"tol_kernel": -0.1},
    {"n_modes": 2},
    {"domain": {"kind": "disk", "h": 0.1}},
])
def test_config_rejects_invalid_values(kw):
    with pytest.raises(ValueError):
        ExperimentConfig(**kw)


def test_config_rejects_unknown_keys_and_bad_json(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"flavour": "grounded"})
    p = tmp_path / "bad.json"
    p.write_text('{\n "h": }')
    with pytest.raises(FormatError) as exc:
        ExperimentConfig.from_json(p)
    assert exc.value.line == 2


@pytest.fixture(scope="module")
def annulus_report(tmp_path_factory):
    out = tmp_path_factory.mktemp("ann")
    return out, run_pipeline(ExperimentConfig(h=0.05), out)


def test_pipeline_annulus_report(annulus_report):
    out, rep = annulus_report
    assert rep["status"] == "ok" and rep["verdict"] == "HolesGrounded"
    v = {k: x["value"] for k, x in rep["values"].items()}
    assert abs(v["modulus"] - np.log(2)) / np.log(2) < 0.02
    assert v["seam_recall"] == 1.0
    assert v["components"] == 2
    assert v["dn_mismatch"] < 0.05
    assert all(c["passed"] for c in rep["checks"].values())
    assert load_report(out / "report.json")["schema"] == rep["schema"]


def test_pipeline_writes_csv_and_figures(annulus_report):
    out, rep = annulus_report
    for name in ("mesh.surf2", "dn.csv", "traces.csv", "cloud.csv", "report.json", "spectrum.png", "cloud.png"):
        assert (out / name).exists()
    assert set(rep["artifacts"]) <= {p.name for p in out.iterdir()}


def test_pipeline_is_deterministic(tmp_path):
    cfg = ExperimentConfig(h=0.06, flavor="isolated", plots=False)
    run_pipeline(cfg, tmp_path / "a")
    run_pipeline(cfg, tmp_path / "b")
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
    assert not list((tmp_path / "a").glob("*.png"))


def test_pipeline_disk_skips_reconstruction(tmp_path):
    rep = run_pipeline(ExperimentConfig(domain={"kind": "disk"}, h=0.06, plots=False), tmp_path)
    assert rep["verdict"] == "NoHoles"
    assert "reconstruction" in rep["skipped"]


def test_pipeline_zero_tolerance_is_indeterminate(tmp_path):
    rep = run_pipeline(ExperimentConfig(h=0.06, tol_kernel=0.0, plots=False), tmp_path)
    assert rep["status"] == "indeterminate"
    assert rep["values"]["kernel_dim"]["value"] == 0


def test_pipeline_blind_mode(tmp_path):
    rep = run_pipeline(ExperimentConfig(h=0.06, mode="blind", plots=False), tmp_path)
    assert rep["status"] == "ok"
    assert "seam_recall" not in rep["values"]
    assert rep["values"]["max_criterion_residual"]["value"] <= 1e-2


def test_pipeline_stage_error_keeps_partial_report(tmp_path):
    cfg = ExperimentConfig(domain={"kind": "annulus", "r": 0.05}, h=0.06, plots=False)
    with pytest.raises(PipelineError) as exc:
        run_pipeline(cfg, tmp_path)
    assert exc.value.stage == "mesh"
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["status"] == "error" and rep["error"]["stage"] == "mesh"


# -- command line --------------------------------------------------------------


@pytest.fixture(scope="module")
def cli_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["mesh", "gen", "--kind", "annulus", "--h", "0.06", "--out", str(d)]) == EXIT_OK
    assert main(["dn", "assemble", "--mesh", str(d / "mesh.surf2"), "--flavor", "isolated",
                 "--out", str(d)]) == EXIT_OK
    return d


def test_cli_detect(cli_files, capsys):
    assert main(["detect", "--dn", str(cli_files / "dn.csv")]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["verdict"] == "HolesIsolated"
    assert main(["detect", "--dn", str(cli_files / "dn.csv"), "--tol", "0"]) == EXIT_INDETERMINATE


def test_cli_criteria(cli_files, tmp_path, capsys):
    from eitholes.dn import DNOperator

    op = DNOperator.from_csv(cli_files / "dn.csv")
    th = 2 * np.pi * op.s / op.length
    lines = ["s,value"] + [f"{float(s)!r},{float(v)!r}" for s, v in zip(op.s, np.sin(th))]
    (tmp_path / "t.csv").write_text("\n".join(lines) + "\n")
    assert main(["criteria", "--dn", str(cli_files / "dn.csv"), "--trace", str(tmp_path / "t.csv")]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["residual"] < 0.01 and abs(out["c_h"]) < 1e-6
    (tmp_path / "t.csv").write_text("s,value\n0,abc\n")
    assert main(["criteria", "--dn", str(cli_files / "dn.csv"), "--trace", str(tmp_path / "t.csv")]) == EXIT_IO


def test_cli_traces_and_reconstruct(cli_files, tmp_path, capsys):
    mesh = str(cli_files / "mesh.surf2")
    assert main(["traces", "--dn", str(cli_files / "dn.csv"), "--mesh", mesh, "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "traces.csv").exists()
    capsys.readouterr()
    assert main(["reconstruct", "--mesh", mesh, "--flavor", "isolated", "--out", str(tmp_path)]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["components"] == 2 and out["dn_mismatch"] < 0.05


def test_cli_pipeline_and_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"h": 0.06}))
    assert main(["pipeline", "--config", str(cfg), "--out", str(tmp_path / "o"), "--no-plots"]) == EXIT_OK
    assert not list((tmp_path / "o").glob("*.png"))
    assert main(["pipeline", "--config", str(cfg), "--out", str(tmp_path / "z"), "--tol", "0"]) == EXIT_INDETERMINATE
    assert main(["pipeline", "--config", str(tmp_path / "missing.json")]) == EXIT_IO
    cfg.write_text(json.dumps({"h": 0.06, "colour": 1}))
    assert main(["pipeline", "--config", str(cfg)]) == EXIT_INVARIANT
    cfg.write_text(json.dumps({"h": 0.06, "domain": {"kind": "annulus", "r": 0.05}}))
    assert main(["pipeline", "--config", str(cfg), "--out", str(tmp_path / "e")]) == EXIT_INVARIANT
