import json

import pytest

from rboxlib import InvalidInputError, __version__
from rboxlib.reports import emit_report, render_report


ROWS = [
    {"name": "a", "value": 1.0 / 3.0, "count": 2, "flag": True, "note": None},
    {"name": "b", "value": 0.25, "count": 7, "flag": False, "note": "x"},
]


def test_json_envelope():
    text = render_report(ROWS, fmt="json", config={"omega": 1.0})
    assert text.endswith("\n")
    doc = json.loads(text)
    assert doc["tool_version"] == __version__
    assert doc["config"] == {"omega": 1.0}
    assert doc["rows"][0]["name"] == "a"
    assert doc["rows"][1]["count"] == 7


def test_json_keys_sorted():
    text = render_report(ROWS, fmt="json")
    assert text.index('"config"') < text.index('"rows"') < text.index('"tool_version"')


def test_json_byte_deterministic():
    a = render_report(ROWS, fmt="json", config={"b": 2, "a": 1})
    b = render_report(ROWS, fmt="json", config={"a": 1, "b": 2})
    assert a == b


def test_json_empty_rows():
    doc = json.loads(render_report([], fmt="json"))
    assert doc["rows"] == []


def test_csv_rendering():
    text = render_report(ROWS, fmt="csv")
    lines = text.splitlines()
    assert lines[0] == "name,value,count,flag,note"
    assert lines[1] == "a,0.333333333,2,true,"
    assert lines[2] == "b,0.25,7,false,x"
    assert text.endswith("\n")


def test_csv_empty_rows():
    assert render_report([], fmt="csv") == ""


def test_csv_byte_deterministic():
    assert render_report(ROWS, fmt="csv") == render_report(ROWS, fmt="csv")


def test_mismatched_row_keys_rejected():
    rows = [{"a": 1}, {"b": 2}]
    for fmt in ("json", "csv"):
        with pytest.raises(InvalidInputError):
            render_report(rows, fmt=fmt)
    with pytest.raises(InvalidInputError):
        render_report([{"a": 1}, {"a": 2, "b": 3}], fmt="csv")


def test_bad_format_rejected():
    with pytest.raises(InvalidInputError):
        render_report(ROWS, fmt="yaml")


def test_emit_writes_file(tmp_path):
    out = tmp_path / "report.json"
    text = emit_report(ROWS, fmt="json", destination=out)
    assert out.read_text() == text


def test_emit_stdout_markers_do_not_write(tmp_path):
    emit_report(ROWS, fmt="csv", destination=None)
    emit_report(ROWS, fmt="csv", destination="-")
    assert list(tmp_path.iterdir()) == []
