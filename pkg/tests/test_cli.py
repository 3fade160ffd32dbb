import json
import os
import subprocess
import sys

import pytest

from birat.cli import RunConfig, build_parser, main
from birat.errors import UsageError
from birat.zoo import zoo


def _run(tmp_path, *argv, name="out"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    return code, out


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_degrees_command(tmp_path, capsys):
    code, out = _run(tmp_path, "degrees", "--zoo", "cremona", "--n", "6")
    assert code == 0
    assert "[2, 1, 2, 1, 2, 1]" in capsys.readouterr().out
    doc = json.loads((out / "degrees.json").read_text())
    assert doc["degrees"] == [2, 1, 2, 1, 2, 1]
    m = _manifest(out)
    assert m["command"] == "degrees" and m["exit_code"] == 0
    assert m["artifacts"][0]["path"] == "degrees.json" and len(m["artifacts"][0]["sha256"]) == 64


def test_map_file_source(tmp_path):
    e = zoo("cremona")
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"k": 2, "name": "c", "forward": e.forward.to_json(),
                                "inverse": e.inverse.to_json()}))
    code, out = _run(tmp_path, "degrees", "--map", str(path), "--n", "3")
    assert code == 0
    assert json.loads((out / "degrees.json").read_text())["degrees"] == [2, 1, 2]


def test_exit_codes(tmp_path):
    assert main(["nonsense"]) == 1
    assert main(["degrees", "--zoo", "henon", "--bogus", "1"]) == 1
    assert main(["degrees", "--map", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["degrees", "--map", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert main(["degrees", "--zoo", "henon", "--seed", "-1"]) == 1
    assert main(["degrees", "--zoo", "henon", "--config", str(bad)]) == 2


def test_check_regular_exit_codes(tmp_path):
    code, out = _run(tmp_path, "check-regular", "--zoo", "henon", "--samples", "2000")
    assert code == 0
    doc = json.loads((out / "regularity.json").read_text())
    assert doc["verdict"] and _manifest(out)["exit_code"] == 0
    regions = zoo("henon").regions
    swapped = json.loads(json.dumps(regions))
    for r in swapped["regions"]:
        r["role"] = {"V+": "V-", "V-": "V+", "U+": "U-", "U-": "U+"}[r["role"]]
    path = tmp_path / "swapped.json"
    path.write_text(json.dumps(swapped))
    code, neg = _run(tmp_path, "check-regular", "--zoo", "henon", "--samples", "2000",
                     "--regions", str(path), name="neg")
    assert code == 6 and _manifest(neg)["exit_code"] == 6
    assert not json.loads((neg / "regularity.json").read_text())["verdict"]


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 5, "depth": 7, "res": 16}))
    p = build_parser()
    args = p.parse_args(["degrees", "--zoo", "henon", "--config", str(cfg), "--depth", "9"])
    rc = RunConfig.resolve(args, env={"BIRAT_SEED": "3"})
    assert (rc.seed, rc.depth, rc.resolution) == (5, 9, 16)
    args = p.parse_args(["degrees", "--zoo", "henon"])
    assert RunConfig.resolve(args, env={"BIRAT_SEED": "3"}).seed == 3
    args = p.parse_args(["degrees", "--zoo", "henon", "--seed", "4"])
    assert RunConfig.resolve(args, env={"BIRAT_SEED": "3"}).seed == 4
    with pytest.raises(UsageError):
        RunConfig.resolve(p.parse_args(["degrees", "--zoo", "henon"]), env={"BIRAT_SEED": "x"})


def test_same_seed_gives_identical_artifacts(tmp_path):
    argv = ["mc-degree", "--zoo", "henon", "--samples", "2000", "--nmax", "2", "--seed", "11"]
    assert main([*argv, "--out", str(tmp_path / "a")]) == 0
    assert main([*argv, "--out", str(tmp_path / "b")]) == 0
    ma, mb = _manifest(tmp_path / "a"), _manifest(tmp_path / "b")
    assert [a["sha256"] for a in ma["artifacts"]] == [b["sha256"] for b in mb["artifacts"]]
    for a in ma["artifacts"]:
        assert (tmp_path / "a" / a["path"]).read_bytes() == (tmp_path / "b" / a["path"]).read_bytes()


def test_green_grid_outputs(tmp_path):
    code, out = _run(tmp_path, "green-grid", "--zoo", "henon", "--res", "12", "--depth", "10",
                     "--png")
    assert code == 0
    names = {a["path"] for a in _manifest(out)["artifacts"]}
    assert {"green_grid.csv", "green_grid.pgm", "green_grid.json", "green_grid.png"} <= names


def test_green_points(tmp_path):
    code, out = _run(tmp_path, "green", "--zoo", "power", "--point", "2,1,1", "--point", "1,3,1")
    assert code == 0
    rows = [r.split(",") for r in (out / "green.csv").read_text().splitlines()]
    assert len(rows) == 3
    col = rows[0].index("value")
    # power map: G(z) = log max |z_i|
    assert abs(float(rows[1][col]) - 0.6931471805599453) < 1e-9
    assert abs(float(rows[2][col]) - 1.0986122886681098) < 1e-9


def test_verify_command(tmp_path):
    code, out = _run(tmp_path, "verify", "--zoo", "cremona", "--samples", "4000")
    assert code == 0


def test_entry_point_subprocess(tmp_path):
    env = dict(os.environ, BIRAT_SEED="2")
    r = subprocess.run([sys.executable, "-m", "birat.cli", "degrees", "--zoo", "henon", "--n", "5",
                        "--out", str(tmp_path / "o")], capture_output=True, text=True, env=env)
    assert r.returncode == 0 and "[2, 4, 8, 16, 32]" in r.stdout
    assert _manifest(tmp_path / "o")["config"]["seed"] == 2
    r = subprocess.run([sys.executable, "-m", "birat.cli", "degrees", "--zoo", "nope"],
                       capture_output=True, text=True)
    assert r.returncode == 1 and "error" in r.stderr.lower()
