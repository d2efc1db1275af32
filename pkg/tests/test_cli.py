import json
import subprocess
import sys

import pytest

from appersist.cli import run
from appersist.config import ConfigError, load_system, system_from_dict, system_to_dict
from appersist.model import ValidationReport
from appersist.persistence import PersistenceVerdict
from appersist.structure import BlockStructure

NICHOLSON = """\
n = 1
delays = [1.0]
d = [1.0]
a = [[0.0]]
beta = [2.0]
c = [1.0]
"""

SOURCE_SINK = """\
n = 2
delays = [1.0, 1.0]
d = [1.0, 1.0]
a = [[0.0, 0.0], [0.5, 0.0]]
beta = [2.0, {constant = 0.5, terms = [{kind = "sin", amplitude = 0.1, frequency = 1.0}]}]
c = [1.0, 1.0]
nonlinearity = "nicholson"
"""

BAD = """\
n = 2
delays = [1.0, 1.0]
d = [{constant = 1.0, terms = [{kind = "sin", amplitude = 0.5, frequency = 1.0}]}, 3.0]
a = [[0.0, 0.0], [0.6, 0.0]]
beta = [2.0, 2.0]
c = [1.0, 1.0]
"""


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, text in (("nich", NICHOLSON), ("ss", SOURCE_SINK), ("bad", BAD)):
        p = tmp_path / f"{name}.toml"
        p.write_text(text)
        out[name] = p
    return out


def test_oracle_char_root(capsys):
    assert run(["oracle", "char-root", "1", "2", "1"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(0.3748, abs=1e-4)


def test_validate_exit_codes(files, capsys):
    assert run(["validate", str(files["nich"])]) == 0
    assert run(["validate", str(files["bad"])]) == 2
    out = capsys.readouterr().out
    assert "(a6) patch 1: FAIL" in out and "witness t = 4.7" in out


def test_classify_strict(files, capsys):
    assert run(["classify", str(files["nich"]), "--strict"]) == 0
    assert "u0=yes s0=yes" in capsys.readouterr().out
    assert run(["classify", str(files["ss"]), "--strict"]) == 0
    text = capsys.readouterr().out
    assert "I = {1}  J = {2}" in text and "u0=yes s0=no" in text


def test_classify_uncertain_strict(tmp_path):
    p = tmp_path / "balance.toml"
    p.write_text(NICHOLSON.replace("beta = [2.0]", "beta = [1.0]"))
    assert run(["classify", str(p), "--strict"]) == 3
    assert run(["classify", str(p)]) == 0


def test_invalid_system_blocks_downstream(files):
    for cmd in ("structure", "exponents", "classify", "simulate"):
        assert run([cmd, str(files["bad"])]) == 2


def test_usage_errors(files, tmp_path, capsys):
    assert run([]) == 1
    assert run(["frobnicate"]) == 1
    assert run(["classify", str(tmp_path / "missing.toml")]) == 1
    assert run(["classify", str(files["nich"]), "--margin-tol", "-1"]) == 1
    assert run(["hull-demo", "--N", "0"]) == 1
    assert run(["hull-demo", "--shifts", "1", "--scan", "3", "4"]) == 1
    typo = tmp_path / "typo.toml"
    typo.write_text(NICHOLSON + "bta = [2.0]\n")
    assert run(["validate", str(typo)]) == 1
    assert "bta" in capsys.readouterr().err


def test_config_strictness():
    with pytest.raises(ConfigError):
        system_from_dict({"n": 1, "delays": [1.0], "d": [1.0], "a": [[0.0]]})
    with pytest.raises(ConfigError):
        system_from_dict({"n": 1, "delays": [1.0], "d": [{"constant": 1, "term": []}], "a": [[0.0]],
                          "beta": [1.0], "c": [1.0]})
    with pytest.raises(ConfigError):
        system_from_dict({"n": 1.5, "delays": [1.0], "d": [1.0], "a": [[0.0]], "beta": [1.0], "c": [1.0]})


def test_system_file_roundtrip(files, tmp_path):
    sys_ = load_system(files["ss"])
    p = tmp_path / "copy.json"
    p.write_text(json.dumps(system_to_dict(sys_)))
    assert load_system(p) == sys_


def test_json_records_roundtrip(files, tmp_path, capsys):
    out = tmp_path / "o"
    assert run(["validate", str(files["bad"]), "--out", str(out)]) == 2
    rep = ValidationReport.from_dict(json.loads((out / "validate.json").read_text()))
    assert not rep.ok
    assert run(["structure", str(files["ss"]), "--out", str(out)]) == 0
    b = BlockStructure.from_dict(json.loads((out / "structure.json").read_text()))
    assert b.I == {0} and b.J == {1}
    capsys.readouterr()
    assert run(["classify", str(files["ss"]), "--out", str(out), "--json"]) == 0
    printed = json.loads(capsys.readouterr().out)
    record = json.loads((out / "classify.json").read_text())
    assert printed == record
    v = PersistenceVerdict.from_dict(record)
    assert PersistenceVerdict.from_dict(v.to_dict()) == v
    assert v.to_dict() == record


def test_csv_outputs_deterministic(files, tmp_path):
    runs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert run(["exponents", str(files["ss"]), "--out", str(out)]) == 0
        assert run(["simulate", str(files["ss"]), "--T", "20", "--history", "0.5", "2", "--out", str(out)]) == 0
        assert run(["hull-demo", "--N", "4", "--T", "500", "--scan", "20", "5", "--out", str(out)]) == 0
        runs.append(out)
    names = sorted(p.name for p in runs[0].iterdir())
    assert {"exponents.csv", "window_slopes.csv", "trajectory_0.csv", "trajectory_1.csv",
            "hull_demo.csv", "base_F.csv"} <= set(names)
    for name in names:
        assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes()
    header = (runs[0] / "hull_demo.csv").read_text().splitlines()[0]
    assert header == "shift,minF_secondhalf,recurrent"


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "appersist", "oracle", "char-root", "1", "1", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert float(proc.stdout) == 0.0


def test_shipped_system_files_validate():
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent / "systems"
    files = sorted(root.glob("*.toml"))
    assert files
    for f in files:
        assert run(["validate", str(f)]) == 0
