import json

import pytest

import Involutor
from utils.csv_utils import load_csv_rows

CFG_W = """\
mode: build
builder:
  F: {kind: dyadics, lo: "0", hi: "1"}
  Q: {kind: odd-denominator, lo: "0", hi: "1"}
caps:
  oracle_depth: 30
  witness_points: 3
"""

SIGMA = """\
mode: sigma
sigma:
  X: {kind: all-rationals, lo: "0", hi: "1"}
  chain: {recipe: interval, u: "1/4", w: "3/4"}
samples: 60
"""


@pytest.fixture(autouse=True)
def quiet_logging(monkeypatch):
    monkeypatch.setattr(Involutor, "setup_logging", lambda *args, **kwargs: None)


def write_config(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_build_writes_csv(tmp_path, capsys):
    out = tmp_path / "records.csv"
    code = Involutor.main(["build", "--config", write_config(tmp_path, CFG_W),
                           "--steps", "5", "--out", str(out), "--format", "csv"])
    assert code == 0
    rows = load_csv_rows(str(out))
    assert len(rows) == 6
    assert (rows[0]["primary"], rows[0]["partner"]) == ("1/2", "3/4")
    assert capsys.readouterr().out.strip() == str(out.resolve())


def test_eval_prints_image(tmp_path, capsys):
    config = write_config(tmp_path, CFG_W)
    assert Involutor.main(["eval", "--config", config, "--point", "1/3"]) == 0
    assert capsys.readouterr().out == "1/3\n"
    assert Involutor.main(["eval", "--config", config, "--point", "1/8"]) == 0
    assert capsys.readouterr().out == "1/4\n"


def test_eval_outside_domain(tmp_path):
    code = Involutor.main(["eval", "--config", write_config(tmp_path, CFG_W), "--point", "3/2"])
    assert code == 23


def test_eval_needs_point(tmp_path):
    assert Involutor.main(["eval", "--config", write_config(tmp_path, CFG_W)]) == 3


def test_overlapping_sets_exit_code(tmp_path):
    text = CFG_W.replace("kind: odd-denominator", "kind: dyadics")
    assert Involutor.main(["build", "--config", write_config(tmp_path, text), "--steps", "1"]) == 10


def test_eval_rejects_overlapping_sets(tmp_path):
    text = CFG_W.replace("kind: odd-denominator", "kind: dyadics")
    config = write_config(tmp_path, text)
    assert Involutor.main(["eval", "--config", config, "--point", "1/2"]) == 10


def test_build_rejects_json_format(tmp_path):
    code = Involutor.main(["build", "--config", write_config(tmp_path, CFG_W), "--format", "json"])
    assert code == 2


def test_float_literal_exit_code(tmp_path):
    text = CFG_W.replace('lo: "0", hi: "1"}', 'lo: 0.0, hi: "1"}', 1)
    assert Involutor.main(["build", "--config", write_config(tmp_path, text)]) == 2


def test_missing_config_exit_code(tmp_path):
    assert Involutor.main(["build", "--config", str(tmp_path / "absent.yaml")]) == 3


def test_verify_report(tmp_path):
    out = tmp_path / "verify.json"
    code = Involutor.main(["verify", "--config", write_config(tmp_path, CFG_W),
                           "--steps", "30", "--out", str(out)])
    report = json.loads(out.read_text(encoding="utf-8"))
    assert code == 0
    assert report["passed"] is True
    assert [c["name"] for c in report["checks"]][-1] == "naive_reference"


def test_witness_report(tmp_path):
    out = tmp_path / "witness.json"
    code = Involutor.main(["witness", "--config", write_config(tmp_path, CFG_W),
                           "--steps", "60", "--out", str(out)])
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert [c["x"] for c in payload["certificates"]] == ["1/2", "1/4", "3/8"]
    assert all(c["valid"] and len(c["samples"]) == 20 for c in payload["certificates"])
    assert [r["y"] for r in payload["continuity"]] == ["1/3", "2/3", "1/5"]
    assert [r["verdict"] for r in payload["continuity"]] == ["Continuous"] * 3
    assert all(len(r["envelope"]) == 3 for r in payload["continuity"])
    assert payload["passed"] is True
    assert code == 0


def test_witness_fails_without_an_envelope(tmp_path):
    out = tmp_path / "witness.json"
    text = CFG_W.replace("  witness_points: 3\n", "  witness_points: 1\n  envelope_cap: 5\n")
    code = Involutor.main(["witness", "--config", write_config(tmp_path, text),
                           "--steps", "60", "--out", str(out)])
    payload = json.loads(out.read_text(encoding="utf-8"))
    assert payload["continuity"][0]["verdict"] == "CapExceeded"
    assert payload["passed"] is False
    assert code == 1


def test_sigma_outputs(tmp_path):
    out = tmp_path / "sigma.csv"
    code = Involutor.main(["sigma", "--config", write_config(tmp_path, SIGMA), "--out", str(out)])
    assert code == 0
    assert load_csv_rows(str(out))[0] == {"x": "1/2", "class": "A", "level": "1", "value": "1/1"}
    suite = json.loads((tmp_path / "sigma_suite.json").read_text(encoding="utf-8"))
    assert suite["passed"] is True


def test_export_plot_data(tmp_path):
    out = tmp_path / "plot.csv"
    code = Involutor.main(["export", "--config", write_config(tmp_path, CFG_W),
                           "--steps", "3", "--out", str(out)])
    assert code == 0
    rows = load_csv_rows(str(out))
    assert {"x": "1/8", "fx": "1/4"} in rows
    assert len(rows) == 3 + 3 * 3
