"""
Kriging Measures - PDF Report Tests
"""

from src.report_pdf import generate_table_sheet
from src.tables import IdentityCheck, TableCell, TableResult


def _result(rows: int) -> TableResult:
    result = TableResult("ou-line", "Synthetic table")
    for n in range(rows):
        result.cells.append(TableCell("ou-line", "sqrt(mse)", f"N={n}", 1.0 + n, 1.0 + n, 1e-6,
                                      note="rounded" if n % 7 == 0 else ""))
    result.identities.append(IdentityCheck("a = b", 0.5))
    return result


class TestTableSheet:

    def test_writes_pdf(self, tmp_path):
        out = generate_table_sheet([_result(5)], tmp_path / "sheet.pdf", version="1.0.0",
                                   config_lines=["kernel=ou lambda=2.0"])
        data = (tmp_path / "sheet.pdf").read_bytes()
        assert data.startswith(b"%PDF")
        assert out == tmp_path / "sheet.pdf"

    def test_long_tables_paginate(self, tmp_path):
        generate_table_sheet([_result(120), _result(40)], tmp_path / "long.pdf")
        data = (tmp_path / "long.pdf").read_bytes()
        assert data.count(b"/Type /Page") - data.count(b"/Type /Pages") >= 2
