import json
import re

import pytest

from guenterlab import cli
from guenterlab.errors import ConfigError

BASIC = """
[experiment]
seed = 5
levels = 2
n_samples = 12

[[run]]
id = "P_domain"
shape = "interval"
params = { nodes = 33 }
"""

REGIONED = BASIC + """
[[run]]
id = "F_domain"
shape = "box"
params = { shape = [7, 7] }
[run.regions.M0]
kind = "boundary-part"
predicate = "left"
"""

KORN = """
[experiment]
seed = 3
levels = 1
n_samples = 10

[[run]]
id = "KornII"
shape = "box"
params = { shape = [9, 9] }
[run.regions.G0]
kind = "boundary-part"
predicate = "boundary"
"""


def _write(tmp_path, text, name="exp.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _strip_timestamp(text):
    return re.sub(r'"timestamp": "[^"]*"', '"timestamp": "X"', text)


def test_load_config_fills_defaults(tmp_path):
    cfg = cli.load_config(_write(tmp_path, BASIC))
    assert cfg["seed"] == 5
    assert cfg["levels"] == 2
    assert cfg["p"] == 2.0          # default echoed
    assert cfg["n_samples"] == 12
    assert cfg["out"] == "results"  # default echoed
    assert len(cfg["run"]) == 1
    assert cfg["run"][0]["p"] == 2.0


def test_unknown_keys_rejected_everywhere(tmp_path):
    with pytest.raises(ConfigError, match="seeed"):
        cli.load_config(_write(tmp_path, BASIC.replace("seed", "seeed")))
    with pytest.raises(ConfigError, match="shap"):
        cli.load_config(_write(
            tmp_path, BASIC + '\n[[run]]\nid = "P_domain"\nshap = "box"\n'))
    with pytest.raises(ConfigError, match="predicat"):
        cli.load_config(_write(
            tmp_path, REGIONED.replace("predicate", "predicat")))


def test_empty_run_list_rejected(tmp_path):
    with pytest.raises(ConfigError, match="no \\[\\[run\\]\\]"):
        cli.load_config(_write(tmp_path, "[experiment]\nseed = 1\n"))


def test_unknown_id_and_shape_rejected(tmp_path):
    with pytest.raises(ConfigError, match="inequality id"):
        cli.load_config(_write(
            tmp_path, '[[run]]\nid = "None"\nshape = "interval"\n'))
    with pytest.raises(ConfigError, match="unknown shape"):
        cli.load_config(_write(
            tmp_path, '[[run]]\nid = "P_domain"\nshape = "blob"\n'))


def test_region_validation(tmp_path):
    bad = ('[[run]]\nid = "P0_domain"\nshape = "interval"\n'
           '[run.regions.M0]\nkind = "boundary-part"\naxis = 0\n')
    with pytest.raises(ConfigError, match="axis, op, value"):
        cli.load_config(_write(tmp_path, bad))
    bad2 = bad.replace("axis = 0", 'predicate = "north"')
    with pytest.raises(ConfigError, match="predicate"):
        cli.load_config(_write(tmp_path, bad2))


def test_list_subcommand(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    assert "P_domain" in out and "icosphere" in out and "Sup_P" in out


def test_estimate_writes_outputs(tmp_path):
    cfg = _write(tmp_path, REGIONED)
    out = tmp_path / "res"
    assert cli.main(["estimate", "--config", cfg, "--out", str(out),
                     "--quiet"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["all_passed"]
    assert len(report["runs"]) == 2
    assert all(len(r["levels"]) == 2 for r in report["runs"])
    rows = (out / "constants.csv").read_text().strip().splitlines()
    assert rows[0].startswith("id,shape,level")
    assert len(rows) == 1 + 2 * 2
    assert (out / "convergence.txt").exists()


def test_verify_is_reproducible_byte_for_byte(tmp_path):
    cfg = _write(tmp_path, REGIONED)
    texts = []
    for d in ("a", "b"):
        out = tmp_path / d
        assert cli.main(["verify", "--config", cfg, "--out", str(out),
                         "--quiet"]) == 0
        texts.append(_strip_timestamp((out / "report.json").read_text()))
        assert (out / "witnesses" / "00_P_domain_interval.csv").exists()
    assert texts[0] == texts[1]


def test_threads_env_does_not_change_report(tmp_path, monkeypatch):
    cfg = _write(tmp_path, REGIONED)
    out1, out2 = tmp_path / "serial", tmp_path / "threaded"
    monkeypatch.setenv("GUENTERLAB_THREADS", "1")
    assert cli.main(["verify", "--config", cfg, "--out", str(out1),
                     "--quiet"]) == 0
    monkeypatch.setenv("GUENTERLAB_THREADS", "2")
    assert cli.main(["verify", "--config", cfg, "--out", str(out2),
                     "--quiet"]) == 0
    a = _strip_timestamp((out1 / "report.json").read_text())
    b = _strip_timestamp((out2 / "report.json").read_text())
    assert a == b


def test_seed_flag_overrides_config(tmp_path):
    # a sampled-quotient run makes the seed's effect visible in the bound
    text = BASIC + 'p = 3.0\n'
    cfg = _write(tmp_path, text)
    out1, out2 = tmp_path / "s5", tmp_path / "s9"
    assert cli.main(["verify", "--config", cfg, "--out", str(out1),
                     "--quiet"]) == 0
    assert cli.main(["verify", "--config", cfg, "--out", str(out2),
                     "--seed", "9", "--quiet"]) == 0
    r1 = json.loads((out1 / "report.json").read_text())
    r2 = json.loads((out2 / "report.json").read_text())
    assert r1["header"]["config"]["seed"] == 5
    assert r2["header"]["config"]["seed"] == 9
    c1 = r1["runs"][0]["convergence"]["constants"][-1]
    c2 = r2["runs"][0]["convergence"]["constants"][-1]
    assert c1 != c2


def test_levels_flag_overrides_config(tmp_path):
    cfg = _write(tmp_path, BASIC)
    out = tmp_path / "lv"
    assert cli.main(["estimate", "--config", cfg, "--out", str(out),
                     "--levels", "1", "--quiet"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert len(report["runs"][0]["levels"]) == 1


def test_failing_constant_names_check_on_stderr(tmp_path, capsys):
    text = BASIC + "constant = 0.15\n"
    cfg = _write(tmp_path, text)
    out = tmp_path / "bad"
    rc = cli.main(["verify", "--config", cfg, "--out", str(out), "--quiet"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "FAIL: 00_P_domain_interval: suite" in err
    report = json.loads((out / "report.json").read_text())
    assert not report["all_passed"]
    assert not report["runs"][0]["verification"]["passed"]


def test_config_error_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, BASIC.replace("seed", "sneed"))
    assert cli.main(["estimate", "--config", cfg, "--quiet"]) == 2
    assert "config error" in capsys.readouterr().err


def test_kernel_subcommand(tmp_path, capsys):
    cfg = _write(tmp_path, KORN)
    out = tmp_path / "kr"
    assert cli.main(["kernel", "--config", cfg, "--out", str(out),
                     "--quiet"]) == 0
    report = json.loads((out / "report.json").read_text())
    k = report["runs"][0]["kernel"]
    assert k["dimension"] == 3 and k["uc_rank"] == 3 and k["passed"]
    # a config with no deformation ids has nothing to check
    cfg2 = _write(tmp_path, BASIC, name="plain.toml")
    rc = cli.main(["kernel", "--config", cfg2, "--out",
                   str(tmp_path / "kr2"), "--quiet"])
    assert rc == 2
    assert "nothing was checked" in capsys.readouterr().err


def test_report_subcommand_rerenders(tmp_path, capsys):
    cfg = _write(tmp_path, BASIC)
    out = tmp_path / "rr"
    assert cli.main(["verify", "--config", cfg, "--out", str(out),
                     "--quiet"]) == 0
    capsys.readouterr()
    assert cli.main(["report", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "PASS" in text and "P_domain" in text
    assert cli.main(["report", "--out", str(tmp_path / "void")]) == 2


def test_cylinder_config_builds_product_mesh(tmp_path):
    text = """
[experiment]
seed = 0
levels = 1
n_samples = 8

[[run]]
id = "CylFlat_P0"
shape = "interval"
params = { nodes = 17 }
[run.cylinder]
interval = [0.0, 1.0]
layers = 3
[run.regions.M0]
kind = "boundary-part"
predicate = "left"
"""
    cfg = _write(tmp_path, text)
    out = tmp_path / "cyl"
    assert cli.main(["verify", "--config", cfg, "--out", str(out),
                     "--quiet"]) == 0
    report = json.loads((out / "report.json").read_text())
    lv = report["runs"][0]["levels"][0]
    assert lv["n_nodes"] == 17 * 3
    assert lv["mesh"].startswith("cyl[")


def test_point_region_config(tmp_path):
    text = """
[experiment]
seed = 0
levels = 1
n_samples = 10

[[run]]
id = "Sup_P"
shape = "box"
params = { shape = [9, 9] }
[run.regions.M0]
kind = "point"
coords = [0.5, 0.5]
"""
    cfg = _write(tmp_path, text)
    out = tmp_path / "pt"
    assert cli.main(["verify", "--config", cfg, "--out", str(out),
                     "--quiet"]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["runs"][0]["levels"][0]["method"] == "sampled-quotient"
