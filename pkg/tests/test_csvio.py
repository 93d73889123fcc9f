"""Tests for deterministic report CSVs and schema-checked input CSVs."""

import filecmp
import hashlib

import numpy as np
import pandas as pd
import pytest

from fcmir.csvio import read_input_csv, write_report_csv
from fcmir.errors import InputSchemaError


@pytest.fixture
def report():
    return pd.DataFrame(
        {
            "id": ["traj_2", "traj_1", "mean"],
            "rouge1": [0.5, 1 / 3, np.nan],
            "note": ["杭州酒店", "Offshore – wind", ""],
        }
    )


class TestWriteReportCsv:
    def test_byte_identical_across_writes(self, tmp_path, report):
        """Writing the same table twice gives identical files and digests."""
        first = write_report_csv(report, tmp_path / "a.csv")
        second = write_report_csv(report, tmp_path / "b.csv")

        assert first == second
        assert filecmp.cmp(tmp_path / "a.csv", tmp_path / "b.csv", shallow=False)

    def test_exact_formatting(self, tmp_path, report):
        path = tmp_path / "out.csv"
        write_report_csv(report.sort_values("id")[["id", "rouge1"]], path)

        assert path.read_text(encoding="utf-8") == (
            "id,rouge1\nmean,\ntraj_1,0.333333\ntraj_2,0.500000\n"
        )

    def test_lf_newlines_and_utf8_without_bom(self, tmp_path, report):
        path = tmp_path / "nested" / "out.csv"
        write_report_csv(report, path)
        content = path.read_bytes()

        assert b"\r\n" not in content
        assert not content.startswith(b"\xef\xbb\xbf")
        assert "杭州酒店" in content.decode("utf-8")

    def test_digest_matches_file(self, tmp_path, report):
        path = tmp_path / "out.csv"
        digest = write_report_csv(report, path)
        assert digest == hashlib.sha256(path.read_bytes()).hexdigest()


class TestReadInputCsv:
    def test_numeric_columns_are_converted(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("x,y,label\n1,2.5,a\n3,4,b\n", encoding="utf-8")

        df = read_input_csv(path, required=["x", "y"], numeric=["x", "y"])

        assert df["x"].tolist() == [1, 3]
        assert df["y"].tolist() == [2.5, 4.0]
        assert df["label"].tolist() == ["a", "b"]

    def test_missing_column(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("prediction\nhello\n", encoding="utf-8")
        with pytest.raises(InputSchemaError, match="missing column") as excinfo:
            read_input_csv(path, required=["prediction", "reference"])
        assert excinfo.value.line == 1

    def test_empty_cell_reports_its_line(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("prediction,reference\na,b\nc,\n", encoding="utf-8")
        with pytest.raises(InputSchemaError, match="empty value in column 'reference'") as excinfo:
            read_input_csv(path, required=["prediction", "reference"])
        assert excinfo.value.line == 3
        assert str(excinfo.value).startswith(f"{path}:3:")

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "in.csv"
        path.write_text("rater_a,rater_b\n1,2\n2,two\n", encoding="utf-8")
        with pytest.raises(InputSchemaError, match="non-numeric") as excinfo:
            read_input_csv(path, required=["rater_a", "rater_b"], numeric=["rater_a", "rater_b"])
        assert excinfo.value.line == 3

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputSchemaError, match="file not found"):
            read_input_csv(tmp_path / "absent.csv", required=["x"])

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(InputSchemaError, match="cannot parse"):
            read_input_csv(path, required=["x"])
