"""CSV writers. Floats use repr(), the shortest round-trip form."""

from __future__ import annotations

import csv
import math
from typing import IO, Iterable, Optional, Sequence

from .schemes import IterationTrace
from .stability import StabilityReport


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float) or hasattr(v, "dtype"):
        v = float(v)
        return "" if math.isnan(v) else repr(v)
    return str(v)


def write_rows(fh: IO[str], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])


def write_trace(fh: IO[str], trace: IterationTrace) -> None:
    """Columns n, x_0..x_{d-1}, err (blank when q is unknown)."""
    d = len(trace.points[0])
    header = ["n"] + [f"x_{j}" for j in range(d)] + ["err"]
    rows = (
        [n, *map(float, p), trace.errors[n] if trace.errors is not None else None]
        for n, p in enumerate(trace.points)
    )
    write_rows(fh, header, rows)


def write_sigma(fh: IO[str], sigmas: Sequence[float], observed: Optional[Sequence[float]] = None) -> None:
    """Columns n, sigma, observed (per-step error ratio when a run was made)."""
    rows = (
        [n, s, observed[n] if observed is not None and n < len(observed) else None]
        for n, s in enumerate(sigmas)
    )
    write_rows(fh, ["n", "sigma", "observed"], rows)


def write_bound(fh: IO[str], bound: Sequence[float], observed: Sequence[float]) -> None:
    write_rows(fh, ["n", "bound", "observed"], ([n, b, o] for n, (b, o) in enumerate(zip(bound, observed))))


def write_stability(fh: IO[str], report: StabilityReport) -> None:
    """Columns n, eps_n, y_err_n, then a ``# summary`` line."""
    n_rows = len(report.y_errors)
    rows = (
        [n, report.eps[n] if n < len(report.eps) else None, report.y_errors[n]]
        for n in range(n_rows)
    )
    write_rows(fh, ["n", "eps_n", "y_err_n"], rows)
    fh.write(f"# summary {report.summary()}\n")
