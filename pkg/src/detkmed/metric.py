"""Weighted metric spaces, distance oracles with query accounting, clustering
objectives, and the brute-force optimum used as the testing oracle."""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# Global comparison tolerances: relative 1e-9 with absolute floor 1e-12.
# The audited inequalities are exact in real arithmetic; the tolerance only
# absorbs float rounding.
REL_TOL = 1e-9
ABS_TOL = 1e-12


def leq(a: float, b: float) -> bool:
    """a <= b up to the global tolerance."""
    return a <= b + max(ABS_TOL, REL_TOL * max(abs(a), abs(b)))


def close(a: float, b: float) -> bool:
    return abs(a - b) <= max(ABS_TOL, REL_TOL * max(abs(a), abs(b)))


class MetricInputError(ValueError):
    """Malformed or non-metric input data."""


class EnumerationBudgetError(RuntimeError):
    """Raised by opt_bruteforce when the subset count exceeds its budget."""


class Objective(str, Enum):
    MEDIAN = "median"
    MEANS = "means"
    NORMALIZED_MEANS = "normalized-means"

    def point_cost(self, d: np.ndarray) -> np.ndarray:
        """Per-point contribution before weighting: d for median, d^2 otherwise."""
        if self is Objective.MEDIAN:
            return d
        return d * d

    def finalize(self, total: float) -> float:
        if self is Objective.NORMALIZED_MEANS:
            return math.sqrt(total)
        return total


def as_objective(obj: "Objective | str") -> Objective:
    return obj if isinstance(obj, Objective) else Objective(obj)


class DistanceOracle:
    """Base distance oracle. The query counter increments once per requested
    pair; caching by callers is their own business. Counter increments are
    lock-guarded so read-only sharing across threads never loses counts."""

    # oracles whose answers depend on query order (a live adversary) refuse
    # whole-space scans like aspect_ratio and exhaustive verification
    stable_metric = True

    def __init__(self, n: int):
        if n < 1:
            raise MetricInputError("space must contain at least one point")
        self._n = int(n)
        self._count = 0
        self._lock = threading.Lock()

    @property
    def n(self) -> int:
        return self._n

    @property
    def query_count(self) -> int:
        return self._count

    def _bump(self, amount: int) -> None:
        with self._lock:
            self._count += amount

    def distance(self, i: int, j: int) -> float:
        self._bump(1)
        return self._dist(int(i), int(j))

    def pairwise(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Distances for every (row, col) pair; counts len(rows)*len(cols)."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        self._bump(rows.size * cols.size)
        return self._pairwise(rows, cols)

    def _dist(self, i: int, j: int) -> float:
        raise NotImplementedError

    def _pairwise(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        out = np.empty((rows.size, cols.size))
        for a, i in enumerate(rows):
            for b, j in enumerate(cols):
                out[a, b] = self._dist(int(i), int(j))
        return out


class MatrixOracle(DistanceOracle):
    """Explicit n x n distance matrix. Must be symmetric with zero diagonal."""

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise MetricInputError("not a metric: distance matrix must be square")
        if np.any(matrix < 0):
            raise MetricInputError("not a metric: negative distance entry")
        if np.any(np.diag(matrix) != 0.0):
            raise MetricInputError("not a metric: nonzero diagonal entry")
        if not np.array_equal(matrix, matrix.T):
            raise MetricInputError("not a metric: asymmetric distance matrix")
        super().__init__(matrix.shape[0])
        self._m = matrix

    def _dist(self, i, j):
        return float(self._m[i, j])

    def _pairwise(self, rows, cols):
        return self._m[np.ix_(rows, cols)]


class PointsOracle(DistanceOracle):
    """Point set under an l1 or l2 norm."""

    def __init__(self, points: np.ndarray, norm: str = "l2"):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim == 1:
            points = points[:, None]
        if norm not in ("l1", "l2"):
            raise MetricInputError(f"unknown norm {norm!r}")
        super().__init__(points.shape[0])
        self._p = points
        self.norm = norm

    def _dist(self, i, j):
        diff = self._p[i] - self._p[j]
        if self.norm == "l1":
            return float(np.abs(diff).sum())
        return float(math.sqrt(np.dot(diff, diff)))

    def _pairwise(self, rows, cols):
        out = np.empty((rows.size, cols.size))
        b = self._p[cols]
        # chunk rows so n^2 requests never materialize a (n, n, dim) tensor
        step = max(1, 8_000_000 // max(1, cols.size * self._p.shape[1]))
        for lo in range(0, rows.size, step):
            a = self._p[rows[lo : lo + step]]
            diff = a[:, None, :] - b[None, :, :]
            if self.norm == "l1":
                out[lo : lo + step] = np.abs(diff).sum(axis=2)
            else:
                out[lo : lo + step] = np.sqrt((diff * diff).sum(axis=2))
        return out


@dataclass
class WeightedMetricSpace:
    """A weighted metric space: points are the indices 0..n-1, weights are
    nonnegative reals, distances come from the oracle."""

    oracle: DistanceOracle
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (self.oracle.n,):
            raise MetricInputError("weight vector length must equal point count")
        if np.any(self.weights < 0):
            raise MetricInputError("weights must be nonnegative")

    @classmethod
    def from_matrix(cls, matrix, weights=None) -> "WeightedMetricSpace":
        oracle = MatrixOracle(matrix)
        w = np.ones(oracle.n) if weights is None else weights
        return cls(oracle, w)

    @classmethod
    def from_points(cls, points, weights=None, norm="l2") -> "WeightedMetricSpace":
        oracle = PointsOracle(points, norm=norm)
        w = np.ones(oracle.n) if weights is None else weights
        return cls(oracle, w)

    @property
    def n(self) -> int:
        return self.oracle.n

    def all_points(self) -> np.ndarray:
        return np.arange(self.n, dtype=np.int64)

    def with_weights(self, weights) -> "WeightedMetricSpace":
        """View of the same points and oracle (shared counter) with new weights."""
        return WeightedMetricSpace(self.oracle, weights)

    def distance(self, i: int, j: int) -> float:
        return self.oracle.distance(i, j)

    def pairwise(self, rows, cols) -> np.ndarray:
        return self.oracle.pairwise(rows, cols)


@dataclass(eq=False)
class Solution:
    """An ordered center set with the nearest-center assignment over the
    universe it was built for and the cached objective value."""

    centers: tuple[int, ...]
    assignment: np.ndarray
    cost: float
    objective: Objective
    universe: np.ndarray


def _index_array(ids, n: int, name: str) -> np.ndarray:
    arr = np.asarray(ids, dtype=np.int64).ravel()
    if arr.size == 0:
        raise MetricInputError(f"{name} must be nonempty")
    if arr.min() < 0 or arr.max() >= n:
        raise MetricInputError(f"{name} contains out-of-range point ids")
    return arr


def cost(space: WeightedMetricSpace, centers, universe=None,
         objective: Objective | str = Objective.MEDIAN) -> float:
    """cost(S, U) = sum over x in U of w(x) * obj(d(x, S)).

    Queries the oracle exactly |S| * |U| times.
    """
    obj = as_objective(objective)
    if centers is None or len(centers) == 0:
        raise MetricInputError("empty solution")
    S = _index_array(centers, space.n, "centers")
    U = space.all_points() if universe is None else _index_array(universe, space.n, "universe")
    D = space.pairwise(U, S)
    dmin = D.min(axis=1)
    return obj.finalize(float(np.dot(space.weights[U], obj.point_cost(dmin))))


def assign_nearest(space: WeightedMetricSpace, centers, universe=None) -> np.ndarray:
    """Nearest center id for each universe point; ties go to the smallest
    point index. Queries |S| * |U|."""
    S = np.sort(np.unique(_index_array(centers, space.n, "centers")))
    U = space.all_points() if universe is None else _index_array(universe, space.n, "universe")
    D = space.pairwise(U, S)
    return S[np.argmin(D, axis=1)]


def build_solution(space: WeightedMetricSpace, centers, objective: Objective | str = Objective.MEDIAN,
                   universe=None) -> Solution:
    """Assemble a Solution (assignment + cached cost) with one |S|*|U| sweep."""
    obj = as_objective(objective)
    if centers is None or len(centers) == 0:
        raise MetricInputError("empty solution")
    given = [int(c) for c in centers]
    S = np.sort(np.unique(np.asarray(given, dtype=np.int64)))
    U = space.all_points() if universe is None else _index_array(universe, space.n, "universe")
    D = space.pairwise(U, S)
    idx = np.argmin(D, axis=1)
    dmin = D[np.arange(U.size), idx]
    total = obj.finalize(float(np.dot(space.weights[U], obj.point_cost(dmin))))
    return Solution(tuple(given), S[idx], total, obj, U)


def project(space: WeightedMetricSpace, A, B) -> tuple[int, ...]:
    """Projection pi(A, B): for each a in A its nearest point of B (ties to the
    smallest index), returned as an ascending tuple without duplicates."""
    A = _index_array(A, space.n, "A")
    B = _index_array(B, space.n, "B")
    return tuple(int(v) for v in np.unique(assign_nearest(space, B, universe=A)))


def opt_bruteforce(space: WeightedMetricSpace, k: int, universe=None, candidates=None,
                   objective: Objective | str = Objective.MEDIAN,
                   budget: int = 10_000_000) -> tuple[float, tuple[int, ...]]:
    """Exact OPT_k(U, X) by enumerating all size-k subsets of X.

    Returns the optimum cost and the lexicographically smallest achieving set.
    """
    obj = as_objective(objective)
    if k < 1:
        raise MetricInputError("k must be at least 1")
    U = space.all_points() if universe is None else _index_array(universe, space.n, "universe")
    X = U if candidates is None else _index_array(candidates, space.n, "candidates")
    X = np.sort(np.unique(X))
    if k > X.size:
        raise MetricInputError("k exceeds the number of candidate centers")
    if math.comb(X.size, k) > budget:
        raise EnumerationBudgetError("instance too large for oracle")
    D = space.pairwise(U, X)
    w = space.weights[U]
    best_cost = math.inf
    best_set: tuple[int, ...] = ()
    for combo in itertools.combinations(range(X.size), k):
        dmin = D[:, combo].min(axis=1)
        c = obj.finalize(float(np.dot(w, obj.point_cost(dmin))))
        if c < best_cost:
            best_cost = c
            best_set = combo
    return best_cost, tuple(int(X[i]) for i in best_set)


def aspect_ratio(space: WeightedMetricSpace) -> float:
    """Ratio of the maximum and minimum nonzero distances."""
    if not space.oracle.stable_metric:
        raise MetricInputError(
            "aspect ratio is only defined on a finalized metric")
    U = space.all_points()
    dmax = 0.0
    dmin = math.inf
    step = max(1, 4_000_000 // space.n)
    for lo in range(0, space.n, step):
        block = space.pairwise(U[lo : lo + step], U)
        nz = block[block > 0]
        if nz.size:
            dmax = max(dmax, float(nz.max()))
            dmin = min(dmin, float(nz.min()))
    if not math.isfinite(dmin) or dmax == 0.0:
        raise MetricInputError("degenerate space")
    return dmax / dmin


@dataclass
class MetricReport:
    n: int
    mode: str
    diagonal_violations: list = field(default_factory=list)
    symmetry_violations: list = field(default_factory=list)
    triangle_violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.diagonal_violations or self.symmetry_violations
                    or self.triangle_violations)


def verify_metric(space: WeightedMetricSpace, mode: str = "exhaustive",
                  samples: int = 2000, seed: int = 0) -> MetricReport:
    """Check symmetry, zero diagonal, and the triangle inequality.

    Exhaustive mode (n <= 1024) checks every pair and triple; sampled mode
    draws `samples` random pairs and triples. Violations are report content,
    not errors.
    """
    n = space.n
    report = MetricReport(n=n, mode=mode)
    if not space.oracle.stable_metric:
        raise MetricInputError(
            "metric verification is only defined on a finalized metric")
    if mode == "exhaustive":
        if n > 1024:
            raise ValueError("exhaustive verification requires n <= 1024")
        U = space.all_points()
        D = space.pairwise(U, U)
        for i in np.nonzero(np.diag(D) != 0.0)[0]:
            report.diagonal_violations.append(int(i))
        asym = np.argwhere(np.abs(D - D.T) > np.maximum(ABS_TOL, REL_TOL * np.maximum(np.abs(D), np.abs(D.T))))
        for i, j in asym:
            if i < j:
                report.symmetry_violations.append((int(i), int(j)))
        for y in range(n):
            rhs = D[:, y][:, None] + D[y, :][None, :]
            slack = np.maximum(ABS_TOL, REL_TOL * np.maximum(D, rhs))
            bad = np.argwhere(D > rhs + slack)
            for x, z in bad:
                report.triangle_violations.append((int(x), int(y), int(z)))
    elif mode == "sampled":
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            i, j = (int(v) for v in rng.integers(0, n, size=2))
            dij = space.distance(i, j)
            dji = space.distance(j, i)
            if i == j and dij != 0.0:
                report.diagonal_violations.append(i)
            if not close(dij, dji):
                report.symmetry_violations.append((i, j))
        for _ in range(samples):
            x, y, z = (int(v) for v in rng.integers(0, n, size=3))
            dxz = space.distance(x, z)
            rhs = space.distance(x, y) + space.distance(y, z)
            if dxz > rhs + max(ABS_TOL, REL_TOL * max(dxz, rhs)):
                report.triangle_violations.append((x, y, z))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return report
