"""Per-iteration diagnostics rows shared by all trainers.

One TraceRecord per update cycle; fields that do not apply to a trainer
(e.g. aux_lag outside the 3-splitting) are NaN.  The CSV schema is
k,objective,aug_lag,aux_lag,delta_x,grad_lag,kkt,b1_margin,b2_ratio,op_count,wall_ns
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields

__all__ = ["TraceRecord", "TRACE_COLUMNS", "write_trace_csv", "read_trace_csv"]

TRACE_COLUMNS = (
    "k",
    "objective",
    "aug_lag",
    "aux_lag",
    "delta_x",
    "grad_lag",
    "kkt",
    "b1_margin",
    "b2_ratio",
    "op_count",
    "wall_ns",
)


@dataclass
class TraceRecord:
    k: int
    objective: float = math.nan
    aug_lag: float = math.nan
    aux_lag: float = math.nan
    delta_x: float = math.nan
    grad_lag: float = math.nan
    kkt: float = math.nan
    b1_margin: float = math.nan
    b2_ratio: float = math.nan
    op_count: int = 0
    wall_ns: int = 0

    def row(self) -> list:
        return [getattr(self, f.name) for f in fields(self)]


def write_trace_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for rec in records:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v for v in rec.row()])


def read_trace_csv(path) -> list[TraceRecord]:
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            out.append(
                TraceRecord(
                    k=int(row[0]),
                    objective=float(row[1]),
                    aug_lag=float(row[2]),
                    aux_lag=float(row[3]),
                    delta_x=float(row[4]),
                    grad_lag=float(row[5]),
                    kkt=float(row[6]),
                    b1_margin=float(row[7]),
                    b2_ratio=float(row[8]),
                    op_count=int(row[9]),
                    wall_ns=int(row[10]),
                )
            )
    return out
