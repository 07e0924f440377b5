"""Contrast matrix, subgraph scoring, local search vs exhaustive oracle."""

import numpy as np
import pytest

from tgraph.contrast import (
    ContrastProblem,
    brute_force,
    contrast_matrix,
    extract_subgraph,
    local_search,
    read_subgraph_json,
    subgraph_score,
    write_subgraph_json,
)
from tgraph.errors import (
    DataFormatError,
    DimensionMismatch,
    IndexOutOfRange,
    TooLarge,
)


def random_contrast(rng, m, scale=0.3):
    d = rng.normal(0.0, scale, size=(m, m))
    d = (d + d.T) / 2.0
    np.fill_diagonal(d, 0.0)
    return d


def score_oracle(d, nodes, eta):
    total = 0.0
    for i in nodes:
        for j in nodes:
            total += d[i, j]
    return total - eta * len(nodes) ** 2


def test_contrast_matrix_of_identical_templates():
    g = np.ones((4, 4))
    assert np.array_equal(contrast_matrix(g, g), np.zeros((4, 4)))


def test_contrast_matrix_subtracts_entries_and_zeroes_diagonal():
    g_a = np.eye(3)
    g_b = np.eye(3) * 0.2
    g_a[0, 1] = g_a[1, 0] = 0.6
    g_b[0, 1] = g_b[1, 0] = 0.2
    d = contrast_matrix(g_a, g_b)
    assert d[0, 1] == pytest.approx(0.4, abs=1e-15)
    assert np.all(np.diag(d) == 0.0)


def test_contrast_matrix_shape_checks():
    with pytest.raises(DimensionMismatch):
        contrast_matrix(np.zeros((2, 2)), np.zeros((3, 3)))
    with pytest.raises(DimensionMismatch):
        contrast_matrix(np.zeros((2, 3)), np.zeros((2, 3)))


def test_score_empty_set_is_zero():
    d = random_contrast(np.random.default_rng(0), 5)
    assert subgraph_score(d, [], 0.1) == 0.0


def test_score_two_node_closed_form():
    d = np.zeros((4, 4))
    d[1, 2] = d[2, 1] = 0.5
    assert subgraph_score(d, [1, 2], 0.05) == pytest.approx(0.8, abs=1e-15)


def test_score_matches_double_sum_oracle():
    rng = np.random.default_rng(12)
    d = random_contrast(rng, 8)
    nodes = [0, 2, 5, 7]
    got = subgraph_score(d, nodes, 0.03)
    assert got == pytest.approx(score_oracle(d, nodes, 0.03), abs=1e-12)


def test_score_node_validation():
    d = random_contrast(np.random.default_rng(1), 4)
    with pytest.raises(IndexOutOfRange):
        subgraph_score(d, [0, 9], 0.1)
    with pytest.raises(IndexOutOfRange):
        subgraph_score(d, [1, 1], 0.1)


def test_local_search_zero_matrix_returns_empty():
    problem = ContrastProblem(np.zeros((6, 6)), eta=0.1)
    assert local_search(problem, restarts=4, seed=0) == []


def test_brute_force_zero_matrix_returns_empty():
    problem = ContrastProblem(np.zeros((5, 5)), eta=0.1)
    assert brute_force(problem) == []


def test_brute_force_single_positive_pair():
    d = np.zeros((4, 4))
    d[0, 1] = d[1, 0] = 1.0
    problem = ContrastProblem(d, eta=0.1)
    nodes = brute_force(problem)
    assert nodes == [0, 1]
    assert subgraph_score(d, nodes, 0.1) == pytest.approx(1.6, abs=1e-15)


def test_planted_block_recovered():
    d = np.zeros((10, 10))
    block = [2, 4, 5, 8]
    for i in block:
        for j in block:
            if i != j:
                d[i, j] = 0.5
    problem = ContrastProblem(d, eta=0.02)
    assert brute_force(problem) == block
    assert local_search(problem, restarts=16, seed=0) == block


def test_local_search_matches_brute_force_on_random_instances():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        problem = ContrastProblem(random_contrast(rng, 10), eta=0.02)
        found = local_search(problem, restarts=16, seed=seed)
        exact = brute_force(problem)
        s_found = subgraph_score(problem.d, found, problem.eta)
        s_exact = subgraph_score(problem.d, exact, problem.eta)
        assert s_found == s_exact
        assert found == exact


def test_local_search_result_is_single_move_optimal():
    rng = np.random.default_rng(123)
    problem = ContrastProblem(random_contrast(rng, 12), eta=0.05)
    nodes = local_search(problem, restarts=4, seed=9)
    base = subgraph_score(problem.d, nodes, problem.eta)
    inside = set(nodes)
    outside = [v for v in range(12) if v not in inside]
    candidates = []
    for v in outside:
        candidates.append(sorted(inside | {v}))
    for v in nodes:
        candidates.append(sorted(inside - {v}))
    for o in nodes:
        for v in outside:
            candidates.append(sorted((inside - {o}) | {v}))
    for cand in candidates:
        assert subgraph_score(problem.d, cand, problem.eta) <= base + 1e-9


def test_size_penalty_shrinks_optimum():
    rng = np.random.default_rng(7)
    d = random_contrast(rng, 9, scale=0.5)
    sizes = []
    for eta in (0.0, 0.02, 0.1, 0.3):
        sizes.append(len(brute_force(ContrastProblem(d, eta=eta))))
    assert all(a >= b for a, b in zip(sizes, sizes[1:]))


def test_optimum_follows_node_relabeling():
    rng = np.random.default_rng(42)
    d = random_contrast(rng, 8, scale=0.6)
    perm = rng.permutation(8)
    dp = d[np.ix_(perm, perm)]
    base = brute_force(ContrastProblem(d, eta=0.02))
    mapped = sorted(int(np.flatnonzero(perm == v)[0]) for v in base)
    assert brute_force(ContrastProblem(dp, eta=0.02)) == mapped


def test_brute_force_size_guard():
    with pytest.raises(TooLarge):
        brute_force(ContrastProblem(np.zeros((21, 21))))


def test_local_search_restart_count_checked():
    with pytest.raises(ValueError):
        local_search(ContrastProblem(np.zeros((3, 3))), restarts=0)


def test_from_templates_builds_difference():
    g_a = np.eye(3)
    g_b = np.eye(3)
    g_a[0, 1] = g_a[1, 0] = 0.9
    problem = ContrastProblem.from_templates([g_a, g_b], 0, 1, eta=0.07)
    assert problem.eta == 0.07
    assert problem.d[0, 1] == pytest.approx(0.9, abs=1e-15)
    assert np.all(np.diag(problem.d) == 0.0)


def test_extract_subgraph_threshold_filters_edges():
    g_a = np.eye(4)
    g_b = np.eye(4)
    g_a[0, 1] = g_a[1, 0] = 0.4
    g_a[0, 2] = g_a[2, 0] = 0.1
    sub = extract_subgraph([0, 1, 2], g_a, g_b, tau=0.2)
    assert sub.nodes == [0, 1, 2]
    assert sub.edges == [(0, 1, pytest.approx(0.4, abs=1e-15))]
    full = extract_subgraph([0, 1, 2], g_a, g_b, tau=0.0)
    assert len(full.edges) == 2
    none = extract_subgraph([0, 1, 2], g_a, g_b, tau=1.0)
    assert none.edges == []


def test_extract_subgraph_edge_count_bound():
    rng = np.random.default_rng(3)
    g_a = random_contrast(rng, 7) + np.eye(7)
    g_b = np.eye(7)
    sub = extract_subgraph([1, 3, 4, 6], g_a, g_b, tau=0.0)
    assert len(sub.edges) <= 4 * 3 // 2


def test_subgraph_json_roundtrip(tmp_path):
    g_a = np.eye(5)
    g_b = np.eye(5)
    g_a[1, 3] = g_a[3, 1] = 0.7
    sub = extract_subgraph([1, 3], g_a, g_b, tau=0.0, eta=0.02)
    path = tmp_path / "subgraph.json"
    write_subgraph_json(sub, path, 0, 1, restarts=8, seed=4,
                        node_names=["a", "b", "c", "d", "e"])
    doc = read_subgraph_json(path)
    assert doc["nodes"] == [1, 3]
    assert doc["node_names"] == ["b", "d"]
    assert doc["group_a"] == 0 and doc["group_b"] == 1
    assert doc["restarts"] == 8 and doc["seed"] == 4
    assert doc["edges"] == [[1, 3, pytest.approx(0.7, abs=1e-15)]]
    assert doc["score"] == pytest.approx(sub.score, abs=1e-15)


def test_subgraph_json_missing_keys(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"nodes": []}')
    with pytest.raises(DataFormatError):
        read_subgraph_json(path)
    with pytest.raises(DataFormatError):
        read_subgraph_json(tmp_path / "absent.json")
