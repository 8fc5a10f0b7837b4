"""Result-row schema and deterministic CSV / aligned-text emission."""
from __future__ import annotations

import io
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

COLUMNS = ("scenario_id", "source", "algorithm", "gamma", "beta", "trials",
           "edd_mean", "edd_stderr", "pfa_hat", "pfa_lo", "pfa_hi",
           "truncated", "seed")


@dataclass(frozen=True)
class ResultRow:
    scenario_id: str
    source: str                 # "simulation" | "analysis" | "calibration"
    algorithm: str
    gamma: float                # local threshold (observation cost for GLR)
    beta: float
    trials: int
    edd_mean: float
    edd_stderr: float
    pfa_hat: float
    pfa_lo: float
    pfa_hi: float
    truncated: int
    seed: int

    def sort_key(self):
        return (self.scenario_id, self.algorithm, self.gamma, self.beta, self.source)


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def render_csv(rows: Sequence[ResultRow]) -> str:
    """Byte-stable CSV: fixed column order, deterministic row order."""
    _check_schema(rows)
    out = io.StringIO()
    out.write(",".join(COLUMNS) + "\n")
    for row in sorted(rows, key=ResultRow.sort_key):
        out.write(",".join(_fmt(getattr(row, c)) for c in COLUMNS) + "\n")
    return out.getvalue()


def render_text(rows: Sequence[ResultRow]) -> str:
    """Aligned fixed-width table for terminals."""
    _check_schema(rows)
    cells = [COLUMNS] + [tuple(_fmt(getattr(r, c)) for c in COLUMNS)
                         for r in sorted(rows, key=ResultRow.sort_key)]
    widths = [max(len(row[i]) for row in cells) for i in range(len(COLUMNS))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in cells]
    return "\n".join(lines) + "\n"


def emit_table(rows: Sequence[ResultRow], csv_path, text_path=None) -> None:
    """Write CSV (and optionally aligned text) artifacts."""
    Path(csv_path).write_text(render_csv(rows), encoding="utf-8")
    if text_path is not None:
        Path(text_path).write_text(render_text(rows), encoding="utf-8")


def _check_schema(rows: Iterable) -> None:
    for row in rows:
        if not isinstance(row, ResultRow):
            raise TypeError(f"mixed row schema: expected ResultRow, got {type(row).__name__}")
