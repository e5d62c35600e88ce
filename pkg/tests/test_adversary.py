import itertools
import math

import numpy as np
import networkx as nx
import pytest

import detkmed as dk
from detkmed.adversary import AdversarySession, AdversaryOracle, run_against
from detkmed.harness import adversary_algorithm
from detkmed.metric import Objective


def build_hat_graph(sess):
    """Materialized auxiliary graph: testing oracle for small sessions."""
    G = nx.Graph()
    n1 = sess.n + 1
    G.add_nodes_from(range(n1))
    for key, w in sess._edge.items():
        u, v = divmod(key, n1)
        G.add_edge(u, v, weight=w)
    opens = [v for v in range(sess.n) if sess.status[v]]
    for i in range(len(opens)):
        for j in range(i + 1, len(opens)):
            u, v = opens[i], opens[j]
            if not G.has_edge(u, v) or G[u][v]["weight"] > 1:
                G.add_edge(u, v, weight=1.0)
    return G


def test_first_query_between_open_nodes_is_one():
    sess = AdversarySession(64, 1, 1.0)
    assert sess.answer_query(3, 9) == 1.0


def test_repeat_query_identical():
    sess = AdversarySession(64, 1, 1.0)
    first = sess.answer_query(5, 6)
    assert sess.answer_query(5, 6) == first
    assert sess.answer_query(6, 5) == first


def test_closed_node_distance_two():
    n = 128
    sess = AdversarySession(n, 1, 1.0)
    hub = 0
    partner = 1
    while sess.status[hub]:
        sess.answer_query(hub, partner)
        partner += 1
    assert sess.degree(hub) >= sess.M
    # fresh pair against the closed hub: shortest route hops through one of
    # the hub's open unit neighbors
    got = sess.answer_query(hub, partner)
    expected = nx.dijkstra_path_length(build_hat_graph(sess), hub, partner)
    assert got == expected == 2.0


def test_statuses_never_reopen_and_m_threshold():
    n = 128
    sess = AdversarySession(n, 1, 1.0)
    was_closed = set()
    rng = np.random.default_rng(0)
    for _ in range(2500):
        x, y = rng.integers(0, n, 2)
        if x == y:
            continue
        sess.answer_query(int(x), int(y))
        now_closed = {v for v in range(n) if not sess.status[v]}
        assert was_closed <= now_closed
        was_closed = now_closed
        for v in range(n):
            if sess.status[v]:
                assert sess.degree(v) < sess.M + 2


def test_answers_match_materialized_oracle_randomized():
    n = 72
    sess = AdversarySession(n, 1, 1.0)
    rng = np.random.default_rng(151)
    pairs = list(itertools.combinations(range(n), 2))
    rng.shuffle(pairs)
    for x, y in pairs[:1800]:
        existing = sess._edge.get(sess._key(x, y))
        expected = existing if existing is not None else \
            nx.dijkstra_path_length(build_hat_graph(sess), x, y)
        assert sess.answer_query(x, y) == pytest.approx(expected, rel=1e-12)


def test_at_most_two_edges_per_answer():
    n = 100
    sess = AdversarySession(n, 1, 1.0)
    rng = np.random.default_rng(3)
    edges_before = sess.edge_count()
    answered = 0
    for _ in range(3000):
        x, y = rng.integers(0, n, 2)
        if x == y:
            continue
        sess.answer_query(int(x), int(y))
        answered += 1
        assert sess.edge_count() - edges_before <= 2 * answered


def test_finalize_consistency_and_metric_axioms():
    n = 96
    sess = AdversarySession(n, 2, 1.0)
    rng = np.random.default_rng(9)
    for _ in range(3500):
        x, y = rng.integers(0, n, 2)
        if x != y:
            sess.answer_query(int(x), int(y))
    metric = sess.finalize([4, 80])
    qx, qy, qa = sess.transcript()
    D = metric.matrix()
    assert np.allclose(D[qx, qy], qa, rtol=1e-12, atol=0)
    # shortest-path metric: symmetric with zero diagonal and no triangle gaps
    space = dk.WeightedMetricSpace(metric.oracle(), np.ones(n))
    assert dk.verify_metric(space).ok
    # every pair sits within the double gate route
    assert D.max() <= 2 * sess.L + 1e-12
    G = build_hat_graph(sess)
    sp = dict(nx.all_pairs_dijkstra_path_length(G))
    for i in range(n):
        for j in range(n):
            if i != j:
                assert D[i, j] == pytest.approx(sp[i][j], rel=1e-12)


def test_lazy_distance_agrees_with_dense():
    n = 80
    sess = AdversarySession(n, 1, 1.0)
    rng = np.random.default_rng(13)
    for _ in range(2600):
        x, y = rng.integers(0, n, 2)
        if x != y:
            sess.answer_query(int(x), int(y))
    metric = sess.finalize([0])
    D = metric.matrix()
    for _ in range(300):
        i, j = (int(v) for v in rng.integers(0, n, 2))
        assert metric.distance(i, j) == pytest.approx(D[i, j], rel=1e-12)


def test_finalize_pads_with_smallest_unused():
    sess = AdversarySession(32, 3, 1.0)
    sess.answer_query(1, 2)
    sess.finalize([2])
    assert sess.final_centers == [2, 0, 1]


def test_budget_enforcement():
    sess = AdversarySession(16, 1, 1.0, budget=5)
    for i in range(5):
        sess.answer_query(0, i + 1)
    with pytest.raises(dk.QueryBudgetExceededError, match="query budget exceeded"):
        sess.answer_query(0, 6)


def test_budget_error_for_reverse_greedy():
    with pytest.raises(dk.QueryBudgetExceededError):
        run_against(adversary_algorithm("reverse-greedy"), 64, 2, 1.0,
                    enforce_budget=True)


def test_rejects_pathological_regimes():
    with pytest.raises(dk.MetricInputError):
        AdversarySession(4, 2, 1.0)  # M = 40 > 16 = n^2
    with pytest.raises(dk.MetricInputError):
        AdversarySession(64, 1, 1.0).answer_query(3, 3)


def test_audit_requires_finalized_session():
    from detkmed.adversary import audit_session

    sess = AdversarySession(64, 1, 1.0)
    sess.answer_query(0, 1)
    with pytest.raises(RuntimeError, match="finalized"):
        audit_session(sess, None, [0])
    metric = sess.finalize([0])
    with pytest.raises(RuntimeError, match="finalized"):
        sess.answer_query(2, 3)
    assert audit_session(sess, metric, [0]).passed


def test_trivial_regime_reported():
    # M > n means floor(log_M n) = 0; only the structural audits fire
    result = run_against(adversary_algorithm("local-search"), 48, 1, 1.0)
    assert result.audit.trivial_regime
    assert result.audit.r == 0
    assert result.audit.passed, result.audit.violations


def test_audit_session_counts_and_gate():
    n = 128
    result = run_against(adversary_algorithm("hierarchical"), n, 1, 1.0)
    audit = result.audit
    sess = result.session
    assert audit.passed, audit.violations
    assert audit.edges_total <= 2 * (audit.algo_queries + audit.artificial_queries) + n
    assert all(w == sess.L for w in sess._wt[sess.gate])
    assert not sess.status[sess.gate]
    assert audit.consistency_pairs == audit.algo_queries + audit.artificial_queries


def test_run_against_deterministic():
    r1 = run_against(adversary_algorithm("hierarchical"), 256, 2, 1.0)
    r2 = run_against(adversary_algorithm("hierarchical"), 256, 2, 1.0)
    assert r1.solution.centers == r2.solution.centers
    for a, b in zip(r1.session.transcript(), r2.session.transcript()):
        assert np.array_equal(a, b)
    assert r1.audit.solution_cost == r2.audit.solution_cost
    assert r1.audit.witness_cost == r2.audit.witness_cost


def test_oracle_counts_and_diagonal():
    sess = AdversarySession(32, 1, 1.0)
    oracle = AdversaryOracle(sess)
    before = oracle.query_count
    assert oracle.distance(4, 4) == 0.0
    assert oracle.query_count == before + 1
    assert sess.algo_queries == 0
    oracle.distance(4, 5)
    assert sess.algo_queries == 1


def test_hierarchical_run_full_audit_small():
    result = run_against(adversary_algorithm("hierarchical"), 256, 2, 1.0)
    audit = result.audit
    assert audit.passed, audit.violations
    assert audit.r == max(0, math.floor(math.log(256, audit.M)))
    space = dk.WeightedMetricSpace(result.metric.oracle(), np.ones(256))
    assert dk.verify_metric(space).ok
    # aspect ratio capped by the gate construction
    assert dk.aspect_ratio(space) <= 2 * result.session.L + 1e-9


def test_means_mode_uses_squared_threshold():
    sess = AdversarySession(4096, 2, 1.0, Objective.MEANS)
    assert sess.M == pytest.approx(10 * 2 * 1 * 144.0)
    result = run_against(adversary_algorithm("local-search"), 128, 1, 1.0, "means")
    assert result.audit.objective is Objective.MEANS
    assert result.audit.passed, result.audit.violations
