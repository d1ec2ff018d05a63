import json
from importlib import resources

import pytest

from radbergman import cli
from radbergman import criteria as cr
from radbergman.weights import Standard


def run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = cli.main([*argv, "--out", str(out)])
    return code, out


def test_parse_weight_shorthand():
    assert cli.parse_weight_arg("log_perturbed:p=-1,q=-2") == {"family": "log_perturbed",
                                                               "p": -1.0, "q": -2.0}
    assert cli.parse_weight_arg('{"family": "standard", "a": 1}')["a"] == 1
    with pytest.raises(cli.ConfigError):
        cli.parse_weight_arg("standard:a")


def test_classify_writes_artifacts(tmp_path):
    code, out = run(tmp_path, "classify", "--weight", "log_perturbed:p=-1,q=-2", "--plot")
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["schema_version"] == "1.0"
    assert report["results"]["dhat"] == "member"
    assert report["results"]["dcheck"] == "non-member"
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["files"]) >= {"report.json", "classify.csv"}
    assert manifest["exit_status"] == 0
    header = (out / "classify.csv").read_text().splitlines()[0]
    assert header.startswith("n,r,tail,R,Q_2")


def test_rerun_is_byte_identical(tmp_path):
    args = ("criteria", "--omega", "standard:a=1", "--nu", "standard:a=0", "--depth", "20")
    _, a = run(tmp_path, *args, name="a")
    _, b = run(tmp_path, *args, name="b")
    for f in ("criteria_tail.csv", "criteria_moment.csv", "report.json", "manifest.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_toml_config_and_flag_precedence(tmp_path):
    cfg = tmp_path / "exp.toml"
    cfg.write_text('M = 3\n[weight]\nfamily = "standard"\na = 1.0\n')
    code, out = run(tmp_path, "szego", "--config", str(cfg), "--M", "2")
    assert code == 0
    res = json.loads((out / "report.json").read_text())["results"]
    assert res["M"] == 2 and res["within_tol"]


def test_kernel_subcommand(tmp_path):
    code, out = run(tmp_path, "kernel", "--weight", "standard:a=0", "--z", "0.3+0.2j",
                    "--zeta", "0.5-0.1j")
    assert code == 0
    row = json.loads((out / "report.json").read_text())["results"]["values"][0]
    t = complex(0.3, -0.2) * complex(0.5, -0.1)
    assert complex(row["re"], row["im"]) == pytest.approx(1 / (1 - t) ** 2, rel=1e-12)


def test_norm_subcommand(tmp_path):
    code, out = run(tmp_path, "norm", "--omega", "standard:a=1", "--nu", "standard:a=0",
                    "--kind", "both", "--depth", "8")
    assert code == 0
    assert (out / "norm_hinf.csv").exists() and (out / "norm_bloch.csv").exists()


def test_expcheck_wzero(tmp_path):
    code, out = run(tmp_path, "expcheck", "--mode", "wzero-check")
    assert code == 0
    assert json.loads((out / "report.json").read_text())["results"]["band_constant"] < 2


def test_bad_family_exits_2(tmp_path, capsys):
    code, out = run(tmp_path, "classify", "--weight", "gaussian:a=1")
    assert code == 2
    assert "weight.family" in capsys.readouterr().err
    assert not out.exists()


def test_bad_config_file_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text("{not json")
    assert run(tmp_path, "classify", "--config", str(cfg))[0] == 2
    assert "bad.json:1:2" in capsys.readouterr().err


def test_missing_weight_exits_2(tmp_path):
    assert run(tmp_path, "criteria", "--omega", "standard:a=1")[0] == 2


def test_matrix_inconsistency_exits_1(tmp_path, monkeypatch):
    real = cr.equivalence_matrix

    def flagged(pairs, depth):
        rows = real(pairs, depth)
        rows[0].inconsistencies.append("injected")
        return rows

    monkeypatch.setattr(cr, "equivalence_matrix", flagged)
    monkeypatch.setattr(cr, "default_pairs", lambda: [(Standard(a=1.0), Standard(a=0.0))])
    code, out = run(tmp_path, "matrix", "--depth", "8")
    assert code == 1
    assert json.loads((out / "manifest.json").read_text())["exit_status"] == 1


def test_schema_files_are_packaged():
    root = resources.files("radbergman") / "schema"
    schema = json.loads((root / "report.schema.json").read_text())
    cols = json.loads((root / "csv_columns.json").read_text())
    assert schema["properties"]["schema_version"]
    assert "classify.csv" in cols["files"]
