import json

import pytest

from ustsle.cli import PRESETS, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_list_presets(capsys):
    code, out, _ = run(capsys, "list-presets")
    assert code == 0
    names = [line.split("\t")[0] for line in out.splitlines()]
    for required in ("thm2.2-N2-square", "pde-thm2.3", "bdry-visit-bijection", "prop3.4-exact"):
        assert required in names
    assert set(names) == set(PRESETS)


@pytest.mark.parametrize(
    "argv",
    [
        ("experiment", "no-such-preset"),
        ("experiment",),
        ("frobnicate",),
        ("sample", "--seed", "-1"),
    ],
)
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "error" in json.loads(err)


def test_malformed_config(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, err = run(capsys, "experiment", "--config", str(bad))
    assert code == 2 and json.loads(err)["error"] == "ConfigError"
    unknown = tmp_path / "unknown.json"
    unknown.write_text('{"colour": "blue"}')
    assert run(capsys, "experiment", "--config", str(unknown))[0] == 2


def test_seed_required(capsys, tmp_path):
    code, _, err = run(capsys, "experiment", "thm2.2-N2-square", "--out-dir", str(tmp_path))
    assert code == 2 and "seed" in json.loads(err)["message"]


def test_convergence_preset_writes_csv(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"samples": 300, "meshes": [8, 16], "seed": 3, "params": {"tolerance": 1.0}}))
    out = tmp_path / "out"
    code, _, _ = run(capsys, "experiment", "thm2.2-N2-square", "--config", str(cfg), "--out-dir", str(out))
    assert code in (0, 1)
    header = (out / "thm2.2-N2-square.csv").read_text().splitlines()[0]
    assert "p_hat" in header and "continuum" in header
    manifest = json.loads((out / "thm2.2-N2-square.manifest.json").read_text())
    assert manifest["seed"] == 3 and len(manifest["config_sha256"]) == 64


def test_same_seed_same_bytes(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"samples": 200, "meshes": [8, 16], "seed": 11, "params": {"tolerance": 1.0}}))
    texts = []
    for k in range(2):
        d = tmp_path / f"r{k}"
        run(capsys, "experiment", "thm2.2-N2-square", "--config", str(cfg), "--out-dir", str(d))
        texts.append((d / "thm2.2-N2-square.csv").read_bytes())
    assert texts[0] == texts[1]


def test_exact_preset_exit_status(capsys, tmp_path):
    code, out, _ = run(capsys, "experiment", "bdry-visit-bijection", "--out-dir", str(tmp_path))
    assert code == 0 and out.startswith("PASS")


def test_sample_independent_of_workers(capsys, tmp_path):
    cfg = tmp_path / "s.json"
    cfg.write_text(json.dumps({"graph": {"unit_square": 6}, "marked": {"positions": [1, 5, 11, 16]}, "samples": 2500}))
    outs = []
    for w in (1, 2):
        d = tmp_path / f"w{w}"
        assert run(capsys, "sample", "--config", str(cfg), "--seed", "4", "--workers", str(w), "--out-dir", str(d))[0] == 0
        outs.append((d / "pattern_estimates.csv").read_text())
    assert outs[0] == outs[1]


def test_oracle_and_zfuncs(capsys, tmp_path):
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"graph": {"square": [3, 3, 1.0]}, "marked": {"positions": [0, 3, 6, 9]}}))
    assert run(capsys, "oracle", "--config", str(cfg), "--out-dir", str(tmp_path))[0] == 0
    assert "True" in (tmp_path / "oracle.csv").read_text()
    assert run(capsys, "zfuncs", "--config", str(cfg), "--exact", "--format", "json", "--out-dir", str(tmp_path))[0] == 0
    rows = json.loads((tmp_path / "zfuncs.json").read_text())
    assert rows[0]["alpha"] == "total"


def test_graph_and_loewner(capsys, tmp_path):
    assert run(capsys, "graph", "--out-dir", str(tmp_path))[0] == 0
    assert (tmp_path / "graph.json").exists()
    curve = tmp_path / "curve.csv"
    curve.write_text("\n".join(f"0.5,{y}" for y in (0, 0.1, 0.2, 0.3)))
    assert run(capsys, "loewner", "--curve", str(curve), "--out-dir", str(tmp_path))[0] == 0
    assert run(capsys, "loewner", "--seed", "1", "--out-dir", str(tmp_path))[0] == 0
    assert (tmp_path / "sle_paths.csv").exists()
