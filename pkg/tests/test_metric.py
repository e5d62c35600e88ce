import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import detkmed as dk
from detkmed.metric import ABS_TOL, REL_TOL, leq
from tests.conftest import line_space

settings.register_profile("suite", max_examples=40, deadline=None)
settings.load_profile("suite")


def test_cost_matches_definition_on_line():
    sp = line_space([0, 1, 2])
    assert dk.cost(sp, [0]) == 3.0
    assert dk.cost(sp, [0], objective="means") == 5.0
    assert dk.cost(sp, [0], objective="normalized-means") == math.sqrt(5.0)


def test_cost_zero_when_centers_cover_universe():
    sp = line_space([0, 3, 7, 11], weights=[2.0, 1.0, 5.0, 0.5])
    assert dk.cost(sp, [0, 1, 2, 3]) == 0.0


def test_cost_rejects_empty_solution():
    sp = line_space([0, 1])
    with pytest.raises(dk.MetricInputError, match="empty solution"):
        dk.cost(sp, [])


def test_cost_query_accounting_exact():
    sp = line_space(range(10))
    before = sp.oracle.query_count
    dk.cost(sp, [1, 4, 7], universe=[0, 2, 3, 5, 9])
    assert sp.oracle.query_count - before == 3 * 5


def test_single_distance_counts_once_even_on_diagonal():
    sp = line_space([0, 1])
    before = sp.oracle.query_count
    assert sp.distance(1, 1) == 0.0
    assert sp.oracle.query_count - before == 1


def test_matrix_oracle_rejects_bad_input():
    with pytest.raises(dk.MetricInputError, match="asymmetric"):
        dk.MatrixOracle(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(dk.MetricInputError, match="diagonal"):
        dk.MatrixOracle(np.array([[1.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(dk.MetricInputError, match="negative"):
        dk.MatrixOracle(np.array([[0.0, -1.0], [-1.0, 0.0]]))


def test_project_subset_is_identity():
    sp = line_space([0, 2, 5, 9])
    assert dk.project(sp, [1, 3], [0, 1, 2, 3]) == (1, 3)


def test_project_nearest_on_line():
    sp = line_space([0, 10, 4])
    assert dk.project(sp, [2], [0, 1]) == (0,)


def test_project_tie_goes_to_smallest_index():
    sp = line_space([0, 2, 1])
    # point 2 sits exactly between points 0 and 1
    assert dk.project(sp, [2], [0, 1]) == (0,)


def test_opt_bruteforce_matches_hand_examples():
    sp = line_space([0, 1, 9, 10])
    best, centers = dk.opt_bruteforce(sp, 2)
    assert best == 2.0
    assert centers == (0, 2)  # lexicographically smallest among the ties
    heavy = line_space([0, 2], weights=[3.0, 1.0])
    best, centers = dk.opt_bruteforce(heavy, 1)
    assert best == 2.0 and centers == (0,)


def test_opt_bruteforce_zero_cover():
    sp = line_space([3, 1, 4])
    best, centers = dk.opt_bruteforce(sp, 3)
    assert best == 0.0 and centers == (0, 1, 2)


def test_opt_bruteforce_budget():
    sp = line_space(range(30))
    with pytest.raises(dk.EnumerationBudgetError, match="instance too large"):
        dk.opt_bruteforce(sp, 10, budget=100)


def test_aspect_ratio():
    clique = dk.WeightedMetricSpace.from_matrix(np.ones((4, 4)) - np.eye(4))
    assert dk.aspect_ratio(clique) == 1.0
    assert dk.aspect_ratio(line_space([0, 1, 10])) == 10.0
    zeros = dk.WeightedMetricSpace.from_matrix(np.zeros((3, 3)))
    with pytest.raises(dk.MetricInputError, match="degenerate"):
        dk.aspect_ratio(zeros)


def test_verify_metric_flags_triangle_violation():
    m = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    sp = dk.WeightedMetricSpace.from_matrix(m)
    report = dk.verify_metric(sp)
    assert not report.ok
    assert (0, 1, 2) in report.triangle_violations


def test_verify_metric_passes_on_euclidean_points(mid_spaces):
    for sp in mid_spaces[:6]:
        assert dk.verify_metric(sp).ok


def test_solution_cached_cost_matches_recomputation(mid_spaces):
    for sp in mid_spaces:
        sol = dk.build_solution(sp, [0, sp.n // 2], objective="means")
        again = dk.cost(sp, sol.centers, objective="means")
        assert abs(sol.cost - again) <= max(ABS_TOL, REL_TOL * again)


@given(st.integers(0, 2**31 - 1), st.integers(5, 24))
def test_projection_lemma_holds(seed, n):
    rng = np.random.default_rng(seed)
    sp = dk.WeightedMetricSpace.from_points(rng.uniform(0, 1, (n, 2)),
                                            rng.uniform(0.1, 2.0, n))
    a = rng.choice(n, size=rng.integers(1, n // 2 + 1), replace=False)
    b = rng.choice(n, size=rng.integers(1, n // 2 + 1), replace=False)
    proj = dk.project(sp, a, b)
    assert leq(dk.cost(sp, proj), dk.cost(sp, b) + 2.0 * dk.cost(sp, a))


@given(st.integers(0, 2**31 - 1))
def test_squared_triangle_inequality(seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(0, 1, (3, 3))
    d = lambda i, j: float(np.linalg.norm(p[i] - p[j]))
    for eps in (0.1, 0.25, 0.5):
        lhs = d(0, 2) ** 2
        rhs = (1 + eps) * d(0, 1) ** 2 + (1 + 1 / eps) * d(1, 2) ** 2
        assert leq(lhs, rhs)


def test_improper_centers_corollary(tiny_spaces):
    # optimal centers restricted to U cost at most twice optimal over all of V
    for sp in tiny_spaces[:10]:
        n = sp.n
        rng = np.random.default_rng(n)
        for k in (1, 2, 3):
            u = np.sort(rng.choice(n, size=max(k, n // 2), replace=False))
            if u.size < k:
                continue
            opt_u, _ = dk.opt_bruteforce(sp, k, universe=u, candidates=u)
            opt_uv, _ = dk.opt_bruteforce(sp, k, universe=u, candidates=None)
            assert leq(opt_u, 2.0 * opt_uv)


def test_counter_tolerates_concurrent_increments():
    import threading

    sp = line_space(range(8))
    start = sp.oracle.query_count

    def worker():
        for _ in range(500):
            sp.distance(1, 5)

    threads = [threading.Thread(target=worker) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sp.oracle.query_count - start == 4 * 500


def test_verify_metric_sampled_mode():
    sp = dk.generators.random_matrix(64, seed=2)
    report = dk.verify_metric(sp, mode="sampled", samples=400, seed=1)
    assert report.ok and report.mode == "sampled"
    bad = dk.WeightedMetricSpace.from_matrix(
        np.array([[0, 1, 9], [1, 0, 1], [9, 1, 0]], dtype=float))
    report = dk.verify_metric(bad, mode="sampled", samples=500, seed=1)
    assert report.triangle_violations


def test_bulk_scans_refused_on_live_adversary():
    from detkmed.adversary import AdversaryOracle, AdversarySession

    session = AdversarySession(64, 1, 1.0)
    space = dk.WeightedMetricSpace(AdversaryOracle(session), np.ones(64))
    with pytest.raises(dk.MetricInputError, match="finalized"):
        dk.aspect_ratio(space)
    with pytest.raises(dk.MetricInputError, match="finalized"):
        dk.verify_metric(space)


def test_with_weights_shares_counter():
    sp = line_space([0, 1, 2])
    view = sp.with_weights([5.0, 1.0, 1.0])
    before = sp.oracle.query_count
    dk.cost(view, [1])
    assert sp.oracle.query_count == before + 3
    assert dk.cost(view, [1]) == 5.0 + 0.0 + 1.0
