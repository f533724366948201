"""Row-based reports rendered as an aligned text table and as CSV."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

REPORT_COLUMNS = ("section", "quantity", "value", "unit", "source")
SOURCES = ("config", "default", "computed", "measured")


@dataclass(frozen=True)
class Row:
    section: str
    quantity: str
    value: object
    unit: str
    source: str = "computed"

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if isinstance(self.value, (int, float)) and not isinstance(self.value, bool) and not self.unit:
            raise ValueError(f"numeric row {self.section}/{self.quantity} needs a unit")


@dataclass
class DesignReport:
    title: str
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add(self, section, quantity, value, unit, source="computed"):
        if hasattr(value, "item"):
            value = value.item()
        self.rows.append(Row(section, quantity, value, unit, source))

    def find(self, section, quantity):
        for r in self.rows:
            if r.section == section and r.quantity == quantity:
                return r.value
        raise KeyError(f"{section}/{quantity}")

    def to_text(self):
        cells = [(r.section, r.quantity, _fmt(r.value), r.unit, r.source) for r in self.rows]
        widths = [max(len(h), *(len(c[i]) for c in cells)) if cells else len(h)
                  for i, h in enumerate(REPORT_COLUMNS)]
        lines = [self.title, "=" * len(self.title), ""]
        lines.append("  ".join(h.ljust(w) for h, w in zip(REPORT_COLUMNS, widths)).rstrip())
        lines.append("  ".join("-" * w for w in widths))
        for c in cells:
            lines.append("  ".join(v.ljust(w) for v, w in zip(c, widths)).rstrip())
        if self.notes:
            lines.append("")
            lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_COLUMNS)
        for r in self.rows:
            w.writerow([r.section, r.quantity, _raw(r.value), r.unit, r.source])
        return buf.getvalue()


def _fmt(value):
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return f"{value:.6g}"
    return str(value)


def _raw(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)
