"""CSV ingestion and emission for the two instance formats.

Matrix format: row i holds the distances from point i; an optional first
column carries the point weight; a header row is allowed and skipped.
Points format: columns ``w,x1,...,xd`` (weight, then coordinates).
"""

from __future__ import annotations

import csv

import numpy as np

from .metric import MetricInputError, WeightedMetricSpace


def _read_rows(path) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise MetricInputError(f"empty input file: {path}")
    try:
        float(rows[0][0])
    except ValueError:
        rows = rows[1:]
    if not rows:
        raise MetricInputError(f"no data rows in {path}")
    try:
        return [[float(c) for c in row] for row in rows]
    except ValueError as exc:
        raise MetricInputError(f"non-numeric cell in {path}: {exc}") from None


def read_matrix_csv(path) -> tuple[np.ndarray, np.ndarray | None]:
    rows = _read_rows(path)
    n = len(rows)
    widths = {len(r) for r in rows}
    if widths == {n}:
        return np.array(rows), None
    if widths == {n + 1}:
        data = np.array(rows)
        return data[:, 1:], data[:, 0]
    raise MetricInputError("matrix rows must have n or n+1 (weight-prefixed) columns")


def read_points_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = _read_rows(path)
    widths = {len(r) for r in rows}
    if len(widths) != 1 or widths == {1}:
        raise MetricInputError("points rows must share one width of weight + coordinates")
    data = np.array(rows)
    return data[:, 0], data[:, 1:]


def load_space(path, fmt: str) -> WeightedMetricSpace:
    if fmt == "matrix":
        matrix, weights = read_matrix_csv(path)
        return WeightedMetricSpace.from_matrix(matrix, weights)
    if fmt in ("points-l2", "points-l1"):
        weights, points = read_points_csv(path)
        return WeightedMetricSpace.from_points(points, weights, norm=fmt.split("-")[1])
    raise MetricInputError(f"unknown format {fmt!r}")


def write_matrix_csv(path, matrix: np.ndarray, weights=None) -> None:
    matrix = np.asarray(matrix)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        for i in range(matrix.shape[0]):
            row = [repr(float(v)) for v in matrix[i]]
            if weights is not None:
                row = [repr(float(weights[i]))] + row
            out.writerow(row)


def write_points_csv(path, points: np.ndarray, weights=None) -> None:
    points = np.asarray(points)
    if weights is None:
        weights = np.ones(points.shape[0])
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        for i in range(points.shape[0]):
            out.writerow([repr(float(weights[i]))] + [repr(float(v)) for v in points[i]])
