import csv
import io
import json

import numpy as np
import pytest

from direct_image_lab.errors import ConfigError
from direct_image_lab.report import CSV_COLUMNS, Report, plain


@pytest.fixture
def report():
    r = Report(scenario_id="demo", config_hash="abc123", code_version="0.1.0")
    r.quadrature.append({"domain": "p1_chart", "nodes": 12})
    r.add("nakano", 0.5, 0.64, 1e-4, True, theta_norm=np.float64(0.64))
    r.add("hormander_31", [0.3, 0.2j], -0.5, 1e-4, False, "worst tuple", worst_tuple=np.int64(2))
    r.add("quantization", None, 1e-9, 1e-5, True, "l=4", l=4)
    return r


def test_pass_state(report):
    assert not report.passed
    assert report.failed_count == 1
    assert Report("empty", "", "0").passed


def test_json_layout(report):
    data = json.loads(report.to_json())
    assert data["provenance"] == {
        "scenario_id": "demo",
        "config_hash": "abc123",
        "code_version": "0.1.0",
        "quadrature": [{"domain": "p1_chart", "nodes": 12}],
    }
    assert data["passed"] is False
    first, second, third = data["records"]
    assert first["t"] == [[0.5, 0.0]]
    assert first["extra"] == {"theta_norm": 0.64}
    assert second["t"] == [[0.3, 0.0], [0.0, 0.2]]
    assert second["extra"]["worst_tuple"] == 2
    assert third["t"] is None


def test_json_is_deterministic(report):
    assert report.to_json() == report.to_json()


def test_csv_rows(report):
    rows = list(csv.reader(io.StringIO(report.to_csv())))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert rows[1] == ["demo", "nakano", "0.5", "0.0", "0.64", "0.0001", "true"]
    assert rows[2][2:4] == ["0.3;0.0", "0.0;0.2"]
    assert rows[2][-1] == "false"
    assert rows[3][2:4] == ["", ""]


def test_save(report, tmp_path):
    report.save(tmp_path / "out" / "demo.csv", "csv")
    assert (tmp_path / "out" / "demo.csv").read_text().startswith("scenario_id,")
    with pytest.raises(ConfigError):
        report.save(tmp_path / "demo.xml", "xml")


def test_plain():
    value = plain({1: np.array([1j, 2]), "x": (np.bool_(True), np.int32(3))})
    assert value == {"1": [[0.0, 1.0], [2.0, 0.0]], "x": [True, 3]}
