"""Tests for CSV and JSON report writers."""

import io
import json
import sys
from pathlib import Path

import numpy as np
import pytest

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from smoothcheck import __version__
from smoothcheck.reports import (
    csv_text,
    file_sha256,
    format_value,
    json_text,
    provenance,
    read_csv,
    write_csv,
    write_json,
)

ABC_SHA256 = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


@pytest.fixture
def input_file(tmp_path):
    path = tmp_path / "input.txt"
    path.write_bytes(b"abc")
    return path


@pytest.mark.parametrize(
    "value,expected",
    [
        (None, ""),
        (True, "true"),
        (False, "false"),
        (3, "3"),
        (0.5, "0.5"),
        (0.1, "0.10000000000000001"),
        (float("inf"), "inf"),
        (float("-inf"), "-inf"),
        (float("nan"), "nan"),
        ([1, 0.25], "1 0.25"),
        ("PASS", "PASS"),
    ],
)
def test_format_value(value, expected):
    """Test scalar formatting with 17 significant digits."""
    assert format_value(value) == expected


def test_format_value_numpy_scalars():
    """Test numpy scalars format like their Python counterparts."""
    assert format_value(np.int64(7)) == "7"
    assert format_value(np.float64(0.25)) == "0.25"
    assert format_value(np.bool_(True)) == "true"


def test_file_sha256(input_file):
    """Test the digest of a known file."""
    assert file_sha256(input_file) == ABC_SHA256


def test_provenance(input_file):
    """Test the provenance block lists tool, inputs and sorted options."""
    info = provenance(
        "indicator",
        ["indicator", "--s", "2"],
        {"s": "2", "median_factor": 10.0},
        [input_file],
        timestamp=False,
    )
    assert info["tool"] == f"smoothcheck {__version__}"
    assert info["command"] == "indicator"
    assert info["argv"] == "indicator --s 2"
    assert info["inputs"] == {str(input_file): ABC_SHA256}
    assert list(info["options"]) == ["median_factor", "s"]
    assert "timestamp" not in info


def test_provenance_timestamp():
    """Test a UTC timestamp is added by default."""
    info = provenance("cp-table")
    assert info["timestamp"].endswith("+00:00")


def test_csv_text_without_header_block():
    """Test plain CSV output when no provenance is given."""
    text = csv_text(["n", "C_p"], [[1, 0.125], [2, None]])
    assert text == "n,C_p\n1,0.125\n2,\n"


def test_csv_round_trip(tmp_path, input_file):
    """Test read_csv recovers metadata, header and rows."""
    info = provenance("cp-table", ["cp-table"], {"n": [1, 2]}, [input_file], timestamp=False)
    path = tmp_path / "table.csv"
    write_csv(path, ["n", "C_p"], [[1, 0.125], [2, float("inf")]], info)

    metadata, header, rows = read_csv(path)
    assert metadata["tool"] == f"smoothcheck {__version__}"
    assert metadata["command"] == "cp-table"
    assert metadata["option n"] == "1 2"
    assert metadata[f"input {input_file}"] == f"sha256 {ABC_SHA256}"
    assert header == ["n", "C_p"]
    assert rows == [["1", "0.125"], ["2", "inf"]]


def test_csv_identical_without_timestamp(tmp_path):
    """Test repeated writes give byte-identical files."""
    info = provenance("cp-table", options={"p": [0]}, timestamp=False)
    texts = [csv_text(["x"], [[1.0 / 3.0]], info) for _ in range(2)]
    assert texts[0] == texts[1]
    assert "0.33333333333333331" in texts[0]


def test_write_csv_to_stream():
    """Test writing to an open text stream."""
    stream = io.StringIO()
    write_csv(stream, ["a"], [[1]])
    assert stream.getvalue() == "a\n1\n"


def test_json_text():
    """Test sorted keys, numpy arrays and non-finite floats."""
    data = {"b": np.array([1.0, 2.0]), "a": float("inf"), "c": {"d": np.float64(0.5)}}
    text = json_text(data, {"tool": "smoothcheck"})
    loaded = json.loads(text)
    assert loaded["a"] == "inf"
    assert loaded["b"] == [1.0, 2.0]
    assert loaded["c"]["d"] == 0.5
    assert loaded["provenance"] == {"tool": "smoothcheck"}
    assert text.index('"a"') < text.index('"b"')


def test_write_json(tmp_path):
    """Test writing a JSON report to disk and to a stream."""
    path = tmp_path / "report.json"
    write_json(path, {"verdict": "PASS"})
    assert json.loads(path.read_text()) == {"verdict": "PASS"}

    stream = io.StringIO()
    write_json(stream, {"verdict": "FAIL"})
    assert json.loads(stream.getvalue())["verdict"] == "FAIL"


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
