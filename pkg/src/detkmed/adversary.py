"""Adaptive adversary for stress-testing deterministic clustering algorithms.

The adversary answers distance queries while building a weighted graph whose
shortest-path metric stays consistent with every answer it has given. Nodes
are one vertex per point plus a gate vertex wired to everyone at weight
log_M(n); a vertex closes permanently once its degree reaches M. Queries
between two open vertices cost 1; anything touching a closed vertex is
answered with the exact shortest path through the graph augmented by implicit
weight-1 edges between open pairs (of which a shortest path uses at most one,
so that one edge is materialized when chosen).

Shortest paths are computed exactly without materializing the open clique:
a common-neighbor two-hop scan (which includes the gate route of weight 2L),
a best candidate using one virtual edge anchored at unit-weight open
neighbors, and an enumeration threshold below which those candidates are
provably exhaustive; only candidates above the threshold fall back to a
capped Dijkstra that relaxes the open clique once at the first open vertex
it settles.
"""

from __future__ import annotations

import heapq
import math
import time
from array import array
from dataclasses import dataclass, field

import numpy as np

from .metric import (
    ABS_TOL,
    DistanceOracle,
    MetricInputError,
    Objective,
    REL_TOL,
    Solution,
    WeightedMetricSpace,
    as_objective,
    leq,
)


class QueryBudgetExceededError(RuntimeError):
    """The algorithm under test spent more than its n*k*delta query allowance."""


class AdversarySession:
    """Stateful adversary for one algorithm run. Strictly single-threaded;
    the construction is order-dependent by design."""

    def __init__(self, n: int, k: int, delta: float,
                 objective: Objective | str = Objective.MEDIAN,
                 budget: int | None = None):
        obj = as_objective(objective)
        if obj is Objective.NORMALIZED_MEANS:
            raise MetricInputError("adversary supports median and means objectives")
        if n < 2:
            raise MetricInputError("adversary needs at least two points")
        if k < 1 or delta < 1:
            raise MetricInputError("k and delta must be at least 1")
        self.n = n
        self.k = k
        self.delta = delta
        self.objective = obj
        logn = math.log2(n)
        self.M = 10.0 * k * delta * (logn * logn if obj is Objective.MEANS else logn)
        if self.M > n * n:
            # with M > n^2 the gate route undercuts the weight-1 answers and
            # no consistent metric matches the Case-2 replies
            raise MetricInputError("M exceeds n^2; no consistent metric in this regime")
        self.L = math.log(n) / math.log(self.M)
        self.gate = n
        self._lb = 2.0 * min(1.0, self.L)
        # Point-point edges weigh 1 or >= min(2, 2L); gate edges pair up
        # through the gate vertex. Hence every path value below 3*min(1, L)
        # is produced by the direct edge, a two-edge path, or a one-virtual-
        # edge path anchored at unit neighbors, all of which are enumerated
        # exactly, so candidates at or below this threshold are final.
        self._thr = 3.0 * min(1.0, self.L)
        self.budget = budget
        self.finalized = False
        self.final_centers: list[int] | None = None

        size = n + 1
        self._nbr = [array("i") for _ in range(size)]
        self._wt = [array("d") for _ in range(size)]
        self._unit_nbrs = [array("i") for _ in range(size)]
        self._edge: dict[int, float] = {}
        self.status = bytearray([1]) * size
        self.status[self.gate] = 0
        self.open_count = n
        self._open_unit = array("i", bytes(4 * size))
        self._unit_cursor = array("i", bytes(4 * size))
        for x in range(n):
            self._push_edge(x, self.gate, self.L)
        self._qx = array("i")
        self._qy = array("i")
        self._qa = array("d")
        self.algo_queries = 0
        self.artificial_queries = 0
        # per final center: answers to every point, filled by finalize()
        self._center_rows: dict[int, np.ndarray] = {}

    # -- graph bookkeeping -------------------------------------------------

    def _key(self, u: int, v: int) -> int:
        if u > v:
            u, v = v, u
        return u * (self.n + 1) + v

    def _push_edge(self, u: int, v: int, w: float) -> None:
        self._edge[self._key(u, v)] = w
        self._nbr[u].append(v)
        self._wt[u].append(w)
        self._nbr[v].append(u)
        self._wt[v].append(w)
        if w == 1.0:
            self._unit_nbrs[u].append(v)
            self._unit_nbrs[v].append(u)
            if self.status[u]:
                self._open_unit[v] += 1
            if self.status[v]:
                self._open_unit[u] += 1

    def degree(self, v: int) -> int:
        return len(self._nbr[v])

    def _close_if_due(self, v: int) -> None:
        if v == self.gate or not self.status[v]:
            return
        if len(self._nbr[v]) < self.M:
            return
        self.status[v] = 0
        self.open_count -= 1
        nbrs = self._nbr[v]
        wts = self._wt[v]
        for i in range(len(nbrs)):
            if wts[i] == 1.0:
                self._open_unit[nbrs[i]] -= 1

    def _find_open_unit_nbr(self, v: int, skip: int = -1) -> int:
        """Some open vertex joined to v by a weight-1 edge, or -1.

        Round-robins over v's unit neighbors so that, when this neighbor is
        materialized into a virtual edge over and over (a closed hub gets
        queried against many fresh points), the added degree spreads out
        instead of closing one companion after another.
        """
        if self._open_unit[v] == 0:
            return -1
        lst = self._unit_nbrs[v]
        m = len(lst)
        if m == 0:
            return -1
        i = self._unit_cursor[v]
        if i >= m:
            i = 0
        status = self.status
        for _ in range(m):
            u = lst[i]
            i += 1
            if i == m:
                i = 0
            if status[u] and u != skip:
                self._unit_cursor[v] = i
                return u
        return -1

    # -- exact shortest-path machinery --------------------------------------

    def _two_hop(self, x: int, y: int) -> float:
        """Exact minimum over materialized two-edge paths (gate included)."""
        if len(self._nbr[x]) > len(self._nbr[y]):
            x, y = y, x
        nbrs = self._nbr[x]
        wts = self._wt[x]
        edge = self._edge
        best = math.inf
        lb = self._lb
        wmin = min(1.0, self.L)
        for i in range(len(nbrs)):
            w1 = wts[i]
            if w1 + wmin >= best:
                continue
            w2 = edge.get(self._key(nbrs[i], y))
            if w2 is not None and w1 + w2 < best:
                best = w1 + w2
                if best <= lb:
                    return best
        return best

    def _virtual_candidate(self, x: int, y: int):
        """Best path using exactly one open-open virtual edge: each endpoint
        anchors at itself when open, else at an open unit-weight neighbor.
        Returns (weight, (u, v)) or None."""
        if self.status[x]:
            ax, ua = 0.0, x
        else:
            ua = self._find_open_unit_nbr(x)
            if ua < 0:
                return None
            ax = 1.0
        if self.status[y]:
            by, vb = 0.0, y
        else:
            vb = self._find_open_unit_nbr(y)
            if vb < 0:
                return None
            by = 1.0
        if vb == ua:
            # anchors collide; fall back to a different unit neighbor on
            # whichever side is not pinned to an open endpoint
            if not self.status[y]:
                alt = self._find_open_unit_nbr(y, skip=ua)
                if alt >= 0:
                    vb = alt
                elif not self.status[x]:
                    alt = self._find_open_unit_nbr(x, skip=vb)
                    if alt < 0:
                        return None
                    ua = alt
                else:
                    return None
            else:
                if self.status[x]:
                    return None
                alt = self._find_open_unit_nbr(x, skip=vb)
                if alt < 0:
                    return None
                ua = alt
        return ax + 1.0 + by, (ua, vb)

    def _dijkstra_hat(self, src: int, dst: int, cap: float):
        """Exact dist in the graph plus the implicit open clique, capped.

        Settling the first open vertex relaxes every open vertex once; any
        later open settle is dominated, and a shortest path never needs two
        virtual hops. Returns (dist, virtual edge used or None); dist >= cap
        means nothing beats the caller's candidate.
        """
        dist = {src: 0.0}
        pred: dict[int, tuple[int, bool]] = {}
        heap = [(0.0, src)]
        done = set()
        relaxed_clique = False
        while heap:
            d, u = heapq.heappop(heap)
            if u in done:
                continue
            if d >= cap:
                return math.inf, None
            done.add(u)
            if u == dst:
                virt = None
                node = dst
                while node != src:
                    parent, via_virtual = pred[node]
                    if via_virtual:
                        virt = (parent, node)
                    node = parent
                return d, virt
            if self.status[u] and not relaxed_clique:
                relaxed_clique = True
                nd = d + 1.0
                if nd < cap:
                    for v in range(self.n):
                        if self.status[v] and v != u and v not in done:
                            if nd < dist.get(v, math.inf):
                                dist[v] = nd
                                pred[v] = (u, True)
                                heapq.heappush(heap, (nd, v))
            nbrs = self._nbr[u]
            wts = self._wt[u]
            for i in range(len(nbrs)):
                v = nbrs[i]
                if v in done:
                    continue
                nd = d + wts[i]
                if nd < dist.get(v, math.inf) and nd < cap:
                    dist[v] = nd
                    pred[v] = (u, False)
                    heapq.heappush(heap, (nd, v))
        return math.inf, None

    def _case3(self, x: int, y: int):
        best = self._two_hop(x, y)
        virt = None
        if best > self._lb:
            cand = self._virtual_candidate(x, y)
            if cand is not None and cand[0] < best:
                best, virt = cand
        if best <= self._thr:
            return best, virt
        d, dvirt = self._dijkstra_hat(x, y, best)
        if d < best:
            return d, dvirt
        return best, virt

    # -- query answering -----------------------------------------------------

    def answer_query(self, x: int, y: int) -> float:
        """Answer one algorithm query, updating the graph (Cases 1-3)."""
        if self.finalized:
            raise RuntimeError("session already finalized")
        if self.budget is not None and self.algo_queries >= self.budget:
            raise QueryBudgetExceededError("query budget exceeded")
        ans = self._answer(x, y)
        self.algo_queries += 1
        return ans

    def _answer(self, x: int, y: int) -> float:
        if x == y or not (0 <= x < self.n and 0 <= y < self.n):
            raise MetricInputError("queries must name two distinct points")
        key = self._key(x, y)
        existing = self._edge.get(key)
        if existing is not None:
            ans = existing
        elif self.status[x] and self.status[y]:
            ans = 1.0
            self._push_edge(x, y, 1.0)
            self._close_if_due(x)
            self._close_if_due(y)
        else:
            ans, virt = self._case3(x, y)
            if virt is not None:
                self._push_edge(virt[0], virt[1], 1.0)
            self._push_edge(x, y, ans)
            self._close_if_due(x)
            self._close_if_due(y)
            if virt is not None:
                self._close_if_due(virt[0])
                self._close_if_due(virt[1])
        self._qx.append(x)
        self._qy.append(y)
        self._qa.append(ans)
        return ans

    # -- finalization ---------------------------------------------------------

    def finalize(self, centers) -> "FinalMetric":
        """Pad the returned solution to k centers, issue the artificial
        queries from each center to every point, and freeze the graph."""
        if self.finalized:
            raise RuntimeError("session already finalized")
        S = [int(c) for c in centers]
        if len(S) > self.k:
            raise MetricInputError("solution exceeds k centers")
        used = set(S)
        fill = 0
        while len(S) < self.k:
            if fill not in used:
                S.append(fill)
                used.add(fill)
            fill += 1
        for s in S:
            row = np.empty(self.n)
            row[s] = 0.0
            for x in range(self.n):
                if x != s:
                    row[x] = self._answer(s, x)
                    self.artificial_queries += 1
            self._center_rows[s] = row
        self.finalized = True
        self.final_centers = S
        return FinalMetric(self)

    def transcript(self):
        return (np.asarray(self._qx, dtype=np.int64),
                np.asarray(self._qy, dtype=np.int64),
                np.asarray(self._qa, dtype=np.float64))

    def closed_points(self) -> int:
        return self.n - self.open_count

    def edge_count(self) -> int:
        return len(self._edge)


class FinalMetric:
    """Exact shortest-path metric over the finalized graph, evaluated lazily
    with the same tiered machinery the live adversary uses."""

    def __init__(self, session: AdversarySession):
        if not session.finalized:
            raise RuntimeError("finalize the session first")
        self.session = session
        self.n = session.n

    def distance(self, x: int, y: int) -> float:
        s = self.session
        if x == y:
            return 0.0
        if s.status[x] and s.status[y]:
            return 1.0
        direct = s._edge.get(s._key(x, y), math.inf)
        best = s._two_hop(x, y)
        cand = s._virtual_candidate(x, y)
        if cand is not None and cand[0] < best:
            best = cand[0]
        if direct < best:
            best = direct
        # below the enumeration threshold the candidate set is exhaustive
        if best <= s._thr:
            return best
        d, _ = s._dijkstra_hat(x, y, best)
        return min(best, d)

    def matrix(self) -> np.ndarray:
        """Dense metric via Floyd-Warshall over the augmented graph."""
        s = self.session
        if self.n > 2048:
            raise MetricInputError("dense finalized metric capped at n = 2048")
        size = self.n + 1
        D = np.full((size, size), np.inf)
        np.fill_diagonal(D, 0.0)
        for key, w in s._edge.items():
            u, v = divmod(key, self.n + 1)
            if w < D[u, v]:
                D[u, v] = D[v, u] = w
        open_ids = np.array([v for v in range(self.n) if s.status[v]], dtype=np.int64)
        if open_ids.size > 1:
            block = D[np.ix_(open_ids, open_ids)]
            np.minimum(block, 1.0, out=block)
            D[np.ix_(open_ids, open_ids)] = block
            D[open_ids, open_ids] = 0.0
        for mid in range(size):
            np.minimum(D, D[:, mid, None] + D[None, mid, :], out=D)
        return D[: self.n, : self.n]

    def oracle(self) -> "FinalMetricOracle":
        return FinalMetricOracle(self)


class FinalMetricOracle(DistanceOracle):
    """DistanceOracle view of a finalized adversary metric. Materializes the
    dense matrix when small enough, otherwise evaluates lazily."""

    def __init__(self, metric: FinalMetric):
        super().__init__(metric.n)
        self._metric = metric
        self._dense = metric.matrix() if metric.n <= 2048 else None

    def _dist(self, i, j):
        if self._dense is not None:
            return float(self._dense[i, j])
        return self._metric.distance(i, j)

    def _pairwise(self, rows, cols):
        if self._dense is not None:
            return self._dense[np.ix_(rows, cols)]
        return super()._pairwise(rows, cols)


def _tolerable(a: float, b: float) -> bool:
    return abs(a - b) <= max(ABS_TOL, REL_TOL * max(abs(a), abs(b)))


@dataclass
class AdversaryAudit:
    n: int
    k: int
    delta: float
    objective: Objective
    M: float
    log_m_n: float
    r: int
    trivial_regime: bool
    algo_queries: int
    artificial_queries: int
    nominal_budget: float
    within_budget: bool
    edges_total: int
    closed_nodes: int
    closed_bound: float
    solution_cost: float
    solution_bound: float
    witness: tuple[int, ...]
    witness_cost: float
    witness_bound: float
    ratio: float
    ratio_bound: float
    consistency_pairs: int
    neighbor_profile: dict[int, list[int]]
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations


def _consistency_violations(session: AdversarySession, metric: FinalMetric) -> list[str]:
    """Every answered pair must sit at its answered distance in the final
    metric. Unit edges and gate edges are tight by construction; heavier
    edges are re-derived from the frozen graph."""
    out = []
    n1 = session.n + 1
    for key, w in session._edge.items():
        u, v = divmod(key, n1)
        if u == session.gate or v == session.gate:
            if w != session.L:
                out.append(f"gate edge ({u},{v}) has weight {w!r} != log_M n")
            continue
        if w == 1.0:
            continue
        d = metric.distance(u, v)
        if not _tolerable(d, w):
            out.append(f"pair ({u},{v}): answered {w!r} but final distance {d!r}")
            if len(out) > 20:
                out.append("... consistency check aborted after 20 violations")
                return out
    # logged answers must equal the edge weights they created
    qx, qy, qa = session.transcript()
    sample = range(len(qa))
    for i in sample:
        if session._edge[session._key(int(qx[i]), int(qy[i]))] != qa[i]:
            out.append(f"log entry {i} disagrees with its edge weight")
            break
    return out


def _unit_path_violations(session: AdversarySession, cap: int = 512) -> list[str]:
    """Edges between points no heavier than log_M n must be matched by an
    equal-weight path of unit edges (checked by BFS for small spaces)."""
    if session.n > cap:
        return []
    n = session.n
    unit_adj: list[list[int]] = [[] for _ in range(n)]
    heavy = []
    for key, w in session._edge.items():
        u, v = divmod(key, n + 1)
        if u == session.gate or v == session.gate:
            continue
        if w == 1.0:
            unit_adj[u].append(v)
            unit_adj[v].append(u)
        elif w <= session.L + ABS_TOL:
            heavy.append((u, v, w))
    out = []
    for u, v, w in heavy:
        hops = round(w)
        if abs(w - hops) > ABS_TOL:
            out.append(f"edge ({u},{v}) of weight {w!r} <= log_M n is not integral")
            continue
        frontier = {u}
        seen = {u}
        found = False
        for _ in range(hops):
            nxt = set()
            for a in frontier:
                for b in unit_adj[a]:
                    if b not in seen:
                        seen.add(b)
                        nxt.add(b)
            if v in nxt:
                found = True
                break
            frontier = nxt
        if not found:
            out.append(f"edge ({u},{v},{w!r}) has no equal-weight unit path")
    return out


def audit_session(session: AdversarySession, metric: FinalMetric,
                  solution_centers) -> AdversaryAudit:
    """Run every post-hoc check against the finalized construction."""
    if not session.finalized:
        raise RuntimeError("audit requires a finalized session")
    n, k = session.n, session.k
    obj = session.objective
    S = session.final_centers
    r = int(math.floor(session.L + 1e-12))
    trivial = r < 1
    rows = session._center_rows
    dS = np.min(np.stack([rows[s] for s in S]), axis=0)
    point_cost = dS * dS if obj is Objective.MEANS else dS
    solution_cost = float(point_cost.sum())
    solution_bound = (n / 2.0) * (r * r if obj is Objective.MEANS else r)

    witness_first = next((v for v in range(n) if session.status[v]), None)
    witness: list[int] = [] if witness_first is None else [witness_first]
    fill = 0
    while len(witness) < k and fill < n:
        if fill not in witness:
            witness.append(fill)
        fill += 1
    if witness:
        dW = np.empty(n)
        for x in range(n):
            dW[x] = min(metric.distance(x, w) for w in witness)
        wit_point = dW * dW if obj is Objective.MEANS else dW
        witness_cost = float(wit_point.sum())
    else:
        witness_cost = math.inf
    witness_bound = 5.0 * n if obj is Objective.MEANS else 3.0 * n

    closed = session.closed_points()
    closed_bound = (10.0 * k * session.delta / session.M) * n
    ratio = solution_cost / witness_cost if witness_cost > 0 else math.inf
    ratio_bound = (r * r) / 10.0 if obj is Objective.MEANS else r / 6.0

    nominal = n * k * session.delta
    audit = AdversaryAudit(
        n=n, k=k, delta=session.delta, objective=obj, M=session.M,
        log_m_n=session.L, r=r, trivial_regime=trivial,
        algo_queries=session.algo_queries,
        artificial_queries=session.artificial_queries,
        nominal_budget=nominal,
        within_budget=session.algo_queries <= nominal,
        edges_total=session.edge_count(),
        closed_nodes=closed, closed_bound=closed_bound,
        solution_cost=solution_cost, solution_bound=solution_bound,
        witness=tuple(witness), witness_cost=witness_cost,
        witness_bound=witness_bound, ratio=ratio, ratio_bound=ratio_bound,
        consistency_pairs=len(session._qa),
        neighbor_profile={},
    )
    audit.violations.extend(_consistency_violations(session, metric))
    audit.violations.extend(_unit_path_violations(session))
    if witness_first is None:
        audit.violations.append("no open node survives; witness construction failed")
    if not trivial:
        if not leq(solution_bound, solution_cost):
            audit.violations.append(
                f"solution cost {solution_cost!r} below lower bound {solution_bound!r}")
        if not leq(ratio_bound, ratio):
            audit.violations.append(
                f"implied ratio {ratio!r} below {ratio_bound!r}")
    if witness and not leq(witness_cost, witness_bound):
        audit.violations.append(
            f"witness cost {witness_cost!r} exceeds {witness_bound!r}")
    if not leq(closed, closed_bound):
        audit.violations.append(
            f"{closed} closed nodes exceed bound {closed_bound!r}")
    total_answers = session.algo_queries + session.artificial_queries
    if session.edge_count() > 2 * total_answers + n:
        audit.violations.append("edge count exceeds 2 per answer plus the gate star")
    if audit.within_budget:
        paper_edges = 2 * nominal + 2 * n * k + n
        if session.edge_count() > paper_edges:
            audit.violations.append(
                f"edge count {session.edge_count()} exceeds {paper_edges}")
    # neighbor counts at each exact distance i <= r from every returned center
    for z in S:
        row = rows[z]
        profile = []
        for i in range(1, r + 1):
            cnt = int(np.count_nonzero(np.abs(row - i) <= ABS_TOL))
            profile.append(cnt)
            bound = session.M * (session.M - 1) ** (i - 1)
            if cnt > bound + ABS_TOL:
                audit.violations.append(
                    f"center {z}: {cnt} points at distance {i} exceed {bound!r}")
        audit.neighbor_profile[z] = profile
    return audit


@dataclass
class AdversaryRunResult:
    solution: Solution
    audit: AdversaryAudit
    session: AdversarySession
    metric: FinalMetric
    wall_millis: float


class AdversaryOracle(DistanceOracle):
    """Algorithm-facing oracle: routes distinct pairs through the adversary;
    d(x, x) is 0 by the metric axioms and never reaches the session."""

    stable_metric = False

    def __init__(self, session: AdversarySession):
        super().__init__(session.n)
        self.session = session

    def _dist(self, i, j):
        if i == j:
            return 0.0
        return self.session.answer_query(i, j)


def run_against(algorithm, n: int, k: int, delta: float,
                objective: Objective | str = Objective.MEDIAN,
                enforce_budget: bool = False) -> AdversaryRunResult:
    """Wire `algorithm(space, k, objective) -> Solution` to a fresh adversary,
    capture its output, finalize, and audit. Deterministic end to end."""
    obj = as_objective(objective)
    budget = int(n * k * delta) if enforce_budget else None
    session = AdversarySession(n, k, delta, obj, budget=budget)
    oracle = AdversaryOracle(session)
    space = WeightedMetricSpace(oracle, np.ones(n))
    t0 = time.perf_counter()
    solution = algorithm(space, k, obj)
    metric = session.finalize(solution.centers)
    audit = audit_session(session, metric, solution.centers)
    return AdversaryRunResult(
        solution=solution,
        audit=audit,
        session=session,
        metric=metric,
        wall_millis=(time.perf_counter() - t0) * 1000.0,
    )
