"""
Kriging Measures - PDF Report
Printable A4 sheet of reproduced tables: value, reference and deviation per cell.
"""

from typing import Sequence

from reportlab.lib import colors
from reportlab.lib.pagesizes import A4
from reportlab.lib.units import mm
from reportlab.lib.utils import simpleSplit
from reportlab.pdfgen import canvas

from src.tables import TableCell, TableResult


FONT = "Helvetica"
SIZE = 8.5
LEAD = 11
ZEBRA = colors.Color(0.97, 0.97, 0.97)

# (heading, x offset from the margin, cell formatter)
COLUMNS = (
    ("row", 0, lambda cell: cell.row_label + (" *" if cell.note else "")),
    ("col", 240, lambda cell: cell.col_label),
    ("value", 290, lambda cell: f"{cell.value:.10g}"),
    ("reference", 365, lambda cell: f"{cell.reference_value:.10g}"),
    ("abs_dev", 440, lambda cell: f"{cell.abs_dev:.2e}"),
)


class TableSheet:
    """Canvas plus a cursor; starts a new page when the cursor reaches the footer"""

    def __init__(self, out_path, version: str):
        self.width, self.height = A4
        self.margin = 14 * mm
        self.version = version
        self.c = canvas.Canvas(str(out_path), pagesize=A4)
        self.c.setTitle("Kriging Measures - Reproduced Tables")
        self.y = self.header("Reproduced tables",
                             "sqrt(MSE) of the BLUP: computed value against the published value")

    @property
    def usable_width(self) -> float:
        return self.width - 2 * self.margin

    def header(self, title: str, subtitle: str = "") -> float:
        c, top = self.c, self.height - self.margin
        c.setFillColor(colors.black)
        c.setFont(FONT + "-Bold", 16)
        c.drawString(self.margin, top - 8, title)
        if subtitle:
            c.setFont(FONT, 9.5)
            c.setFillColor(colors.grey)
            c.drawString(self.margin, top - 24, subtitle)
        return top - 44

    def footer(self):
        c = self.c
        c.setStrokeColor(colors.lightgrey)
        c.line(self.margin, self.margin + 10, self.width - self.margin, self.margin + 10)
        c.setFillColor(colors.grey)
        c.setFont(FONT, SIZE)
        c.drawString(self.margin, self.margin, "Kriging Measures - sqrt(MSE) tables")
        c.drawRightString(self.width - self.margin, self.margin, self.version)

    def reserve(self, need: float = 0.0):
        if self.y - need > self.margin + 30:
            return
        self.footer()
        self.c.showPage()
        self.y = self.header("Reproduced tables (continued)")

    def text(self, line: str, font: str = FONT, color=colors.black):
        for wrapped in simpleSplit(line, font, SIZE, self.usable_width):
            self.reserve()
            self.c.setFont(font, SIZE)
            self.c.setFillColor(color)
            self.c.drawString(self.margin, self.y, wrapped)
            self.y -= LEAD

    def column_heads(self, title: str):
        c = self.c
        self.reserve(need=60)
        c.setFont(FONT + "-Bold", 11.5)
        c.setFillColor(colors.black)
        c.drawString(self.margin, self.y, title)
        self.y -= 16
        c.setFont(FONT + "-Bold", SIZE)
        for name, x, _ in COLUMNS:
            c.drawString(self.margin + x, self.y, name)
        self.y -= 4
        c.setStrokeColor(colors.lightgrey)
        c.line(self.margin, self.y, self.width - self.margin, self.y)
        self.y -= LEAD

    def cell_row(self, cell: TableCell, shaded: bool):
        c = self.c
        self.reserve()
        if shaded:
            c.setFillColor(ZEBRA)
            c.rect(self.margin, self.y - 3, self.usable_width, LEAD, fill=1, stroke=0)
        c.setFillColor(colors.black if cell.passed else colors.red)
        c.setFont(FONT, SIZE)
        for _, x, fmt in COLUMNS:
            c.drawString(self.margin + x, self.y, fmt(cell))
        self.y -= LEAD

    def table(self, result: TableResult):
        self.column_heads(result.title)
        for i, cell in enumerate(result.cells):
            self.cell_row(cell, shaded=i % 2 == 0)
        for check in result.identities:
            self.text(f"{check.label}: deviation {check.deviation:.2e}", FONT + "-Oblique",
                      colors.black if check.passed else colors.red)
        for note in sorted({cell.note for cell in result.cells if cell.note}):
            self.text("* " + note, FONT + "-Oblique", colors.grey)
        self.y -= 14

    def save(self):
        self.footer()
        self.c.save()


def generate_table_sheet(results: Sequence[TableResult], out_path="blup_tables.pdf", version: str = "",
                         config_lines: Sequence[str] = ()):
    """
    One section per table, new page when the current one is full.
    Cells outside tolerance are printed in red.
    """
    sheet = TableSheet(out_path, version)
    for line in config_lines:
        sheet.text(line)
    sheet.y -= 6
    for result in results:
        sheet.table(result)
    sheet.save()
    return out_path
