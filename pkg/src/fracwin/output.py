"""CSV and plain-text report emission.

CSV files carry a ``t,<col>,...`` header and one row per node, values written
with 12 significant digits and ``\\n`` line endings. Reports are plain text
with the sections ``inputs``, ``thresholds``, ``margins`` and ``verdict``, in
that order.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from fracwin.analysis import ComparisonReport, StabilityReport
from fracwin.core import Trajectory, UniformGrid


def fmt(v: float) -> str:
    return format(float(v), ".12g")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def write_trajectory_csv(
    path: Path, traj: Trajectory, extra: Mapping[str, np.ndarray] | None = None, names: Sequence[str] | None = None
) -> Path:
    """Write ``t,x1,...,xn`` (plus optional extra columns) for every node."""
    names = list(names) if names else [f"x{i}" for i in range(1, traj.dim + 1)]
    extra = dict(extra or {})
    cols = [traj.times()] + [traj.values[:, i] for i in range(traj.dim)] + [np.asarray(v) for v in extra.values()]
    rows = ([float(c[j]) for c in cols] for j in range(traj.grid.n_steps + 1))
    return write_csv(path, ["t", *names, *extra], rows)


def read_trajectory_csv(path: Path) -> Trajectory:
    """Read a file written by :func:`write_trajectory_csv` back into a trajectory."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if not header or header[0] != "t":
        raise ValueError(f"{path}: first column must be 't'")
    data = np.array([[float(v) for v in r] for r in body])
    t = data[:, 0]
    n = len(t) - 1
    h = (t[-1] - t[0]) / n if n > 0 else 1.0
    return Trajectory(UniformGrid(float(t[0]), h, n), data[:, 1:], labels=tuple(header[1:]))


def _section(title: str, items: Mapping[str, str]) -> list[str]:
    lines = [f"[{title}]"]
    width = max((len(k) for k in items), default=0)
    lines += [f"{k.ljust(width)} : {v}" for k, v in items.items()]
    return lines + [""]


def stability_sections(report: StabilityReport) -> dict[str, dict[str, str]]:
    thresholds = {f"{report.criterion}.threshold": fmt(report.threshold)}
    margins = {f"{report.criterion}.{c.name}": f"{fmt(c.margin)} ({'ok' if c.passed else 'FAILED'})" for c in report.checks}
    for k, v in report.worst_case.items():
        margins[f"{report.criterion}.worst.{k}"] = fmt(v) if isinstance(v, float) else str(v)
    for i, note in enumerate(report.notes):
        margins[f"{report.criterion}.note{i + 1}"] = note
    return {"thresholds": thresholds, "margins": margins, "verdict": {report.criterion: report.describe()}}


def comparison_sections(report: ComparisonReport, bound_coefficient: float) -> dict[str, dict[str, str]]:
    return {
        "thresholds": {"comparison.delay_coefficient": fmt(bound_coefficient), "comparison.tolerance": fmt(report.tolerance)},
        "margins": {"comparison.max_violation": fmt(report.max_violation)},
        "verdict": {"comparison": report.describe()},
    }


def render_report(title: str, inputs: Mapping[str, str], parts: Sequence[Mapping[str, Mapping[str, str]]]) -> str:
    merged: dict[str, dict[str, str]] = {"thresholds": {}, "margins": {}, "verdict": {}}
    for part in parts:
        for sec, items in part.items():
            merged[sec].update(items)
    lines = [f"# {title}", ""]
    lines += _section("inputs", inputs)
    for sec in ("thresholds", "margins", "verdict"):
        lines += _section(sec, merged[sec])
    return "\n".join(lines).rstrip("\n") + "\n"
