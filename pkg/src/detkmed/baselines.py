"""Comparison algorithms: deterministic single-swap local search (the
constant-factor solver used by the pipelines), plain reverse greedy, and the
branching hierarchical baseline with its sparsifier audit."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .greedy import res_greedy
from .metric import (
    MetricInputError,
    Objective,
    Solution,
    WeightedMetricSpace,
    _index_array,
    as_objective,
    build_solution,
    leq,
    opt_bruteforce,
)

# Swaps must beat the incumbent by this relative factor; guards against
# float-cycling and makes termination deterministic.
IMPROVEMENT_FACTOR = 1.0 + 1e-6


def local_search_kmedian(space: WeightedMetricSpace, k: int,
                         objective: Objective | str = Objective.MEDIAN,
                         universe=None) -> Solution:
    """Deterministic single-swap local search.

    Starts from the k smallest-index points of the universe and repeatedly
    applies the best (center out, non-center in) swap while it improves the
    cost by a factor of at least 1 + 1e-6. Scan order and tie-breaking are
    fixed, so the run is reproducible.
    """
    obj = as_objective(objective)
    if k < 1:
        raise MetricInputError("k must be at least 1")
    U = space.all_points() if universe is None else np.sort(np.unique(
        _index_array(universe, space.n, "universe")))
    if k > U.size:
        raise MetricInputError("k exceeds the number of points")
    w = space.weights[U]
    centers = [int(c) for c in U[:k]]
    if k == U.size:
        return build_solution(space, centers, obj, universe=U)

    def finalize(total: float) -> float:
        return obj.finalize(total)

    D = space.pairwise(U, np.asarray(centers, dtype=np.int64))
    current = finalize(float(np.dot(w, obj.point_cost(D.min(axis=1)))))
    while True:
        order = np.argsort(D, axis=1, kind="stable")
        d1 = D[np.arange(U.size), order[:, 0]]
        d2 = D[np.arange(U.size), order[:, 1]] if k > 1 else np.full(U.size, np.inf)
        nearest_col = order[:, 0]
        outside = [int(p) for p in U if p not in set(centers)]
        Dz = space.pairwise(U, np.asarray(outside, dtype=np.int64))
        best = (None, None, current)
        for col in range(k):
            drop = np.where(nearest_col == col, d2, d1)
            base = obj.point_cost(drop)
            for zi in range(len(outside)):
                dz = Dz[:, zi]
                total = finalize(float(np.dot(w, np.minimum(base, obj.point_cost(dz)))))
                if total < best[2]:
                    best = (col, zi, total)
        col, zi, improved = best
        if col is None or improved * IMPROVEMENT_FACTOR > current:
            break
        centers[col] = outside[zi]
        D[:, col] = Dz[:, zi]
        current = improved
    return build_solution(space, sorted(centers), obj, universe=U)


def plain_reverse_greedy(space: WeightedMetricSpace, k: int,
                         objective: Objective | str = Objective.MEDIAN,
                         universe=None) -> Solution:
    """Reverse greedy over the whole space: res_greedy with X = V, k' = k."""
    U = space.all_points() if universe is None else universe
    sol, _ = res_greedy(space, U, k, objective=objective, universe=universe, k=k)
    return sol


@dataclass
class GuhaLevel:
    parts: list[np.ndarray]
    survivors: np.ndarray | None = None
    sigma: np.ndarray | None = None
    weights_after: np.ndarray | None = None
    centers_per_part: list[list[int]] = field(default_factory=list)


@dataclass
class GuhaHierarchy:
    """Branching-schedule partition hierarchy with per-level mappings."""

    n: int
    k: int
    delta: float
    gamma: float
    depth: int
    q: list[int]
    levels: list[GuhaLevel]

    def part_counts(self) -> list[int]:
        return [len(level.parts) for level in self.levels]

    def structure_violations(self) -> list[str]:
        """Size bound (n/|Q_i| + i) and the product bounds on |Q_i|."""
        out = []
        for i, level in enumerate(self.levels):
            count = len(level.parts)
            if i == 0:
                if count != 1:
                    out.append("level 0 must hold the whole space")
                continue
            expected = 1
            for j in range(1, i + 1):
                expected *= self.q[j - 1]
            if count != expected:
                out.append(f"level {i}: {count} parts, expected prod q_j = {expected}")
            lower = self.gamma ** (1.0 - 1.0 / 2 ** i)
            upper = math.e ** i * lower
            if not (leq(lower, count) and leq(count, upper)):
                out.append(f"level {i}: part count {count} outside "
                           f"[{lower!r}, {upper!r}]")
            bound = self.n / count + i
            for part in level.parts:
                if part.size > bound + 1e-9:
                    out.append(f"level {i}: part of size {part.size} exceeds "
                               f"n/|Q_i| + i = {bound!r}")
        return out


def _split_even(points: np.ndarray, q: int) -> list[np.ndarray]:
    """Order-preserving split into q parts with sizes differing by <= 1."""
    n = points.size
    base, extra = divmod(n, q)
    parts = []
    at = 0
    for j in range(q):
        size = base + (1 if j < extra else 0)
        parts.append(points[at : at + size])
        at += size
    return parts


def build_guha_partitions(n: int, k: int, delta: float) -> GuhaHierarchy:
    if not (2 <= delta <= max(2, n / k)):
        raise MetricInputError("delta must lie in [2, n/k]")
    gamma = n / k
    if gamma <= delta:
        depth = 0
    else:
        depth = max(0, math.ceil(math.log2(math.log(gamma) / math.log(delta))))
    q = [math.ceil(gamma ** (1.0 / 2 ** i)) for i in range(1, depth + 1)]
    levels = [GuhaLevel(parts=[np.arange(n, dtype=np.int64)])]
    for i in range(1, depth + 1):
        parts = []
        for part in levels[i - 1].parts:
            parts.extend(_split_even(part, q[i - 1]))
        levels.append(GuhaLevel(parts=parts))
    return GuhaHierarchy(n=n, k=k, delta=delta, gamma=gamma, depth=depth, q=q,
                         levels=levels)


@dataclass
class GuhaRunMetrics:
    queries: int
    wall_millis: float
    delta: float
    depth: int
    hierarchy: GuhaHierarchy
    mapping: np.ndarray
    mapping_cost: float


def guha_hierarchical(space: WeightedMetricSpace, k: int, delta: float,
                      objective: Objective | str = Objective.MEDIAN
                      ) -> tuple[Solution, GuhaRunMetrics]:
    """Bottom-up hierarchical baseline: split by the branching schedule, solve
    each part on its surviving weighted points with local search, compose the
    mappings. Means inputs are solved under the normalized-means objective and
    reported under the requested one."""
    obj = as_objective(objective)
    solver_obj = Objective.MEDIAN if obj is Objective.MEDIAN else Objective.NORMALIZED_MEANS
    if k < 1 or k > space.n:
        raise MetricInputError("k out of range")
    t0 = time.perf_counter()
    q0 = space.oracle.query_count
    hier = build_guha_partitions(space.n, k, delta)
    n = space.n
    survivors = space.all_points()
    weights_cur = space.weights.copy()
    # composed[x] = current representative of x after the levels applied so far
    composed = np.arange(n, dtype=np.int64)
    for i in range(hier.depth, -1, -1):
        level = hier.levels[i]
        in_level = np.zeros(n, dtype=bool)
        in_level[survivors] = True
        sigma_lvl = np.arange(n, dtype=np.int64)
        new_survivors = []
        next_weights = np.zeros(n)
        for part in level.parts:
            pts = part[in_level[part]]
            if pts.size == 0:
                level.centers_per_part.append([])
                continue
            view = space.with_weights(weights_cur)
            sol = local_search_kmedian(view, min(k, pts.size), solver_obj, universe=pts)
            level.centers_per_part.append(list(sol.centers))
            sigma_lvl[pts] = sol.assignment
            np.add.at(next_weights, sol.assignment, weights_cur[pts])
            new_survivors.extend(int(c) for c in sorted(sol.centers))
        level.survivors = np.asarray(new_survivors, dtype=np.int64)
        level.sigma = sigma_lvl
        level.weights_after = next_weights
        composed = sigma_lvl[composed]
        survivors = level.survivors
        weights_cur = next_weights
    centers = sorted(int(c) for c in np.unique(composed))
    solution = build_solution(space, centers, obj, universe=None)
    d_map = np.array([space.distance(int(x), int(composed[x])) for x in range(n)])
    map_cost = obj.finalize(float(np.dot(space.weights, obj.point_cost(d_map))))
    metrics = GuhaRunMetrics(
        queries=space.oracle.query_count - q0,
        wall_millis=(time.perf_counter() - t0) * 1000.0,
        delta=delta,
        depth=hier.depth,
        hierarchy=hier,
        mapping=composed,
        mapping_cost=map_cost,
    )
    return solution, metrics


@dataclass
class GuhaRecursionAudit:
    opt_full: float
    levels: list[dict] = field(default_factory=list)
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def audit_guha_recursion(space: WeightedMetricSpace, k: int, delta: float,
                         objective: Objective | str = Objective.MEDIAN,
                         budget: int = 2_000_000) -> GuhaRecursionAudit:
    """Run the branching baseline and certify, level by level, that each
    composed mapping stays within (2a + (1 + 2a) b) * OPT with the measured
    per-level solver ratio a and the measured ratio b of the previous
    composition. Brute-force sized instances only."""
    obj = as_objective(objective)
    solver_obj = Objective.MEDIAN if obj is Objective.MEDIAN else Objective.NORMALIZED_MEANS
    _, metrics = guha_hierarchical(space, k, delta, obj)
    hier = metrics.hierarchy
    n = space.n
    opt_full, _ = opt_bruteforce(space, k, objective=solver_obj, budget=budget)
    audit = GuhaRecursionAudit(opt_full=opt_full)
    if opt_full <= 0:
        if metrics.mapping_cost > 0:
            audit.violations.append("OPT = 0 but composed mapping has positive cost")
        return audit

    def mapping_cost(assign, members, weights):
        d = np.array([space.distance(int(x), int(assign[x])) for x in members])
        return solver_obj.finalize(float(np.dot(weights[members],
                                                solver_obj.point_cost(d))))

    composed = np.arange(n, dtype=np.int64)
    beta_prev = 0.0
    for i in range(hier.depth, -1, -1):
        level = hier.levels[i]
        if i == hier.depth:
            members = space.all_points()
            weights = space.weights
        else:
            members = hier.levels[i + 1].survivors
            weights = hier.levels[i + 1].weights_after
        view = space.with_weights(weights)
        opt_level, _ = opt_bruteforce(view, min(k, members.size), universe=members,
                                      candidates=members, objective=solver_obj,
                                      budget=budget)
        level_cost = mapping_cost(level.sigma, members, weights)
        alpha = level_cost / opt_level if opt_level > 0 else 0.0
        if opt_level <= 0 and level_cost > 0:
            audit.violations.append(f"level {i}: zero OPT but solver cost {level_cost!r}")
        composed = level.sigma[composed]
        comp_cost = mapping_cost(composed, space.all_points(), space.weights)
        bound = (2 * alpha + (1 + 2 * alpha) * beta_prev) * opt_full
        audit.levels.append({"level": i, "alpha": alpha, "beta_prev": beta_prev,
                             "composed_cost": comp_cost, "bound": bound})
        if not leq(comp_cost, bound):
            audit.violations.append(
                f"level {i}: composed cost {comp_cost!r} exceeds recursion bound {bound!r}")
        beta_prev = comp_cost / opt_full
    return audit


@dataclass
class SparsifierAudit:
    opt_full: float
    opt_sparse: float
    alpha: float
    beta: float
    composed_cost: float
    bound: float
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def audit_sparsifier(space: WeightedMetricSpace, sigma: np.ndarray, pi: dict | np.ndarray,
                     k: int, objective: Objective | str = Objective.MEDIAN) -> SparsifierAudit:
    """Measure the (alpha, beta) ratios of a sparsifier mapping sigma and an
    inner solution pi, then assert the composed-cost bound
    (2*alpha + (1 + 2*alpha)*beta) * OPT_k. Brute-force sized instances only."""
    obj = as_objective(objective)
    n = space.n
    sigma = np.asarray(sigma, dtype=np.int64)
    targets = np.unique(sigma)
    w_sparse = np.zeros(n)
    np.add.at(w_sparse, sigma, space.weights)
    pi_map = {int(y): int(pi[y]) for y in targets} if not isinstance(pi, dict) else {
        int(y): int(v) for y, v in pi.items()}

    def mapping_cost(assign: np.ndarray, weights: np.ndarray, members: np.ndarray) -> float:
        d = np.array([space.distance(int(x), int(assign[x])) for x in members])
        return obj.finalize(float(np.dot(weights[members], obj.point_cost(d))))

    opt_full, _ = opt_bruteforce(space, k, objective=obj)
    sparse_view = space.with_weights(w_sparse)
    opt_sparse, _ = opt_bruteforce(sparse_view, k, universe=targets, candidates=targets,
                                   objective=obj)
    beta_cost = mapping_cost(sigma, space.weights, space.all_points())
    pi_assign = np.arange(n, dtype=np.int64)
    for y, v in pi_map.items():
        pi_assign[y] = v
    alpha_cost = mapping_cost(pi_assign, w_sparse, targets)
    composed = pi_assign[sigma]
    composed_cost = mapping_cost(composed, space.weights, space.all_points())
    audit = SparsifierAudit(opt_full=opt_full, opt_sparse=opt_sparse,
                            alpha=0.0, beta=0.0, composed_cost=composed_cost, bound=0.0)
    if opt_full <= 0:
        if not leq(composed_cost, 0.0):
            audit.violations.append("degenerate OPT = 0 but composed cost positive")
        return audit
    if opt_sparse <= 0:
        # a zero-cost sparsified optimum forces a zero-cost inner solution
        if not leq(alpha_cost, 0.0):
            audit.violations.append("inner OPT = 0 but inner solution cost positive")
            return audit
        audit.alpha = 0.0
    else:
        audit.alpha = alpha_cost / opt_sparse
    audit.beta = beta_cost / opt_full
    audit.bound = (2 * audit.alpha + (1 + 2 * audit.alpha) * audit.beta) * opt_full
    if not leq(composed_cost, audit.bound):
        audit.violations.append(
            f"composed cost {composed_cost!r} exceeds sparsifier bound {audit.bound!r}")
    return audit
