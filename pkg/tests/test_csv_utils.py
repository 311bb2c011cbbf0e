import json
from fractions import Fraction

import pytest

from utils.builder_utils import init, run, step
from utils.csv_utils import (PLOT_HEADERS, RECORD_HEADERS, export,
                             export_records, load_csv_rows, plot_rows,
                             save_export, save_plot_data, save_sigma_table)
from utils.error_utils import ConfigValidationError
from utils.sigma_utils import sigma_table


def test_jsonl_first_records(seeded):
    lines = export(step(seeded)).decode("utf-8").splitlines()
    assert len(lines) == 2
    seed = json.loads(lines[0])
    assert seed == {
        "step": 0, "primary": "1/2", "primary_index": 0, "partner": "3/4", "partner_index": 2,
        "level": 0, "lo": "-1/1+1/1*sqrt2", "hi": "+inf", "evidence": "TopLevel",
    }
    first = json.loads(lines[1])
    assert (first["primary"], first["partner"], first["level"]) == ("1/4", "1/8", 1)
    assert (first["lo"], first["hi"]) == ("-inf", "1/3")


def test_export_is_byte_stable(cfg_w):
    assert export(run(init(cfg_w), 25)) == export(run(init(cfg_w), 25))
    assert export(run(init(cfg_w), 25), "csv") == export(run(init(cfg_w), 25), "csv")


def test_unknown_format(seeded):
    with pytest.raises(ConfigValidationError):
        export_records(seeded.records, "xml")


def test_evidence_detail_in_jsonl(finite_f_config):
    state = run(init(finite_f_config), 1)
    second = json.loads(export(state).decode("utf-8").splitlines()[1])
    assert second["evidence"] == "NextLevelExhausted"
    assert second["evidence_detail"] == "1/5"


def test_csv_export_round_trips_through_reader(tmp_path, seeded):
    path = save_export(run(seeded, 4), "csv", str(tmp_path / "out" / "records.csv"))
    rows = load_csv_rows(path)
    assert list(rows[0]) == RECORD_HEADERS
    assert [r["step"] for r in rows] == ["0", "1", "2", "3", "4"]
    assert rows[1]["partner"] == "1/8"


def test_plot_data(tmp_path, seeded):
    rows = plot_rows(seeded)
    assert {"x": "1/3", "fx": "1/3"} in rows
    assert {"x": "3/4", "fx": "1/2"} in rows
    assert len(rows) == 3
    path = save_plot_data(seeded, str(tmp_path / "plot.csv"))
    loaded = load_csv_rows(path)
    assert list(loaded[0]) == PLOT_HEADERS
    assert loaded == rows


def test_sigma_table_csv(tmp_path, sigma_config):
    path = save_sigma_table(sigma_table(sigma_config, 4), str(tmp_path / "sigma.csv"))
    rows = load_csv_rows(path)
    assert rows[0] == {"x": "1/2", "class": "A", "level": "1", "value": "1/1"}
    assert Fraction(rows[1]["x"]) == Fraction(1, 3)


def test_load_missing_file(tmp_path):
    assert load_csv_rows(str(tmp_path / "missing.csv")) == []
