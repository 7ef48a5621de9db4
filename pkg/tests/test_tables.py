"""
Kriging Measures - Table Tests
Every published cell must be reproduced within its tolerance.
"""

import csv

import pytest

from src.errors import ConfigError
from src.reference import REFERENCE, TABLE_IDS, TRUNCATED_NOTE, reference_cell
from src.tables import (IdentityCheck, TableCell, TableResult, compute_table, format_table, leans_on_widened_tolerance,
                        resolve_table_id, write_table_csv)


@pytest.fixture(scope="module")
def ou_line():
    return compute_table("ou-line")


class TestTableIds:

    @pytest.mark.parametrize("alias, key", [("1", "exp-square"), ("2", "matern-line"), (3, "matern-square"),
                                            ("4", "ou-line"), ("OU-Line", "ou-line")])
    def test_aliases(self, alias, key):
        assert resolve_table_id(alias) == key

    def test_unknown(self):
        with pytest.raises(ConfigError):
            resolve_table_id("table-9")

    def test_reference_lookup(self):
        assert reference_cell("ou-line", "sqrt(mse)", "N=inf").value == 1.164262
        with pytest.raises(KeyError):
            reference_cell("ou-line", "sqrt(mse)", "N=3")


class TestCells:

    def test_cell_deviation(self):
        cell = TableCell("ou-line", "r", "N=2", 1.0, 1.1, 0.05)
        assert cell.abs_dev == pytest.approx(0.1)
        assert not cell.passed

    def test_result_failures(self):
        result = TableResult("ou-line", "title")
        result.identities.append(IdentityCheck("same", 1e-3))
        assert not result.passed
        assert len(result.failures()) == 1

    @pytest.mark.parametrize("deviation, widened", [(1e-6, False), (1e-4, True), (1e-3, False)])
    def test_widened_tolerance(self, deviation, widened):
        cell = TableCell("exp-square", "T=(2,2)", "N=inf", 1.0, 1.0 + deviation, 2.5e-4, "note")
        assert leans_on_widened_tolerance(cell) is widened


class TestReproduction:
    """Recomputed tables against their references"""

    def test_ou_line(self, ou_line):
        assert len(ou_line.cells) == len(REFERENCE["ou-line"])
        assert ou_line.failures() == []

    def test_matern_line(self):
        result = compute_table("matern-line")
        assert len(result.cells) == len(REFERENCE["matern-line"])
        assert result.failures() == []
        assert len(result.identities) == 4

    def test_exp_square(self):
        result = compute_table("exp-square")
        assert result.failures() == []

    def test_truncated_cells_carry_note(self):
        short = [ref for ref in REFERENCE["exp-square"] if ref.col in ("N=2", "N=3", "N=4", "N=8")]
        assert len(short) == 8
        assert all(ref.note == TRUNCATED_NOTE and ref.tolerance == 1e-4 for ref in short)

    def test_matern_square(self):
        result = compute_table("matern-square")
        assert len(result.cells) == len(REFERENCE["matern-square"])
        assert result.failures() == []

    def test_all_ids_have_builders(self):
        assert set(TABLE_IDS) == set(REFERENCE)


class TestOutput:

    def test_format(self, ou_line):
        text = format_table(ou_line)
        assert text.splitlines()[0] == ou_line.title
        assert "N=inf" in text

    def test_csv(self, tmp_path, ou_line):
        path = write_table_csv(tmp_path / "t.csv", [ou_line])
        with path.open() as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["row_label", "col_label", "value", "paper_value", "abs_dev"]
        assert len(rows) == len(ou_line.cells)
        assert rows[-1]["col_label"] == "N=inf"
