import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msyds.dynamics import ThresholdSystem, random_thresholds
from msyds.graph import MultilayerNetwork, generate_multi_gnp
from msyds.learner import LearningProblem
from msyds.ndim import (
    GuardExceeded,
    QSet,
    ShatterCandidate,
    all_pairs,
    candidate_text,
    dfs_canonical_set,
    dfs_discovery,
    estimate_full_qset_probability,
    find_shattering,
    is_canonical,
    is_landmark,
    is_nested,
    landmark_sets,
    load_candidate,
    load_qset,
    dump_qset,
    natarajan_dimension,
    nesting_matrix,
    pnn_coloring,
    pnn_lower_bound,
    pnn_set,
    q_set_check,
    qset_proportion_bound,
    shatter_oracle,
    shatterable_from_qset,
    verify_shattering,
)
from msyds.ndim import qset as qset_mod
from oracles import all_configs, brute_shattered

PATH = MultilayerNetwork.from_edges(3, [[(0, 1), (1, 2)]])
DFS_PATH = np.array([[1, 0, 0], [1, 1, 0], [1, 1, 1]], bool)


def complete(n, k=1):
    return generate_multi_gnp(n, k, 1.0, 0)


def edgeless(n, k=1):
    return MultilayerNetwork.from_edges(n, [[] for _ in range(k)])


def random_problem(rng, n_max=5, k_max=2, master=None):
    n = int(rng.integers(1, n_max + 1))
    k = int(rng.integers(1, k_max + 1))
    net = generate_multi_gnp(n, k, float(rng.random()), rng)
    master = master or str(rng.choice(["or", "and"]))
    sigma = int(rng.integers(1, n + 1))
    unknown = np.sort(rng.choice(n, sigma, replace=False))
    target = ThresholdSystem(net, master, random_thresholds(net, rng))
    return LearningProblem.from_target(target, unknown)


def random_subset(rng, n, m):
    allx = all_configs(n)
    m = min(m, len(allx))
    return allx[np.sort(rng.choice(len(allx), m, replace=False))]


# --- landmarks and canonical sets -------------------------------------------

def test_single_configuration_all_landmarks():
    r = [[1, 0, 1]]
    assert all(is_landmark(PATH, r, 0, v) for v in range(3))


def test_path_landmarks():
    assert is_landmark(PATH, DFS_PATH, 0, 0)
    # scores per entry: v0 (1, 2, 2), v1 (1, 2, 3), v2 (0, 1, 2)
    assert landmark_sets(PATH, DFS_PATH, range(3)) == [[0, 1, 2], [1, 2], [1, 2]]
    assert not is_landmark(PATH, DFS_PATH, 1, 0)


def test_edgeless_extremes_all_landmarks():
    net = edgeless(3)
    r = [[0, 0, 0], [1, 1, 1]]
    assert all(is_landmark(net, r, j, v) for j in range(2) for v in range(3))


def test_landmark_rejects_multilayer_and_duplicates():
    with pytest.raises(ValueError):
        is_landmark(generate_multi_gnp(3, 2, 0.5, 0), [[0, 0, 0]], 0, 0)
    with pytest.raises(ValueError):
        is_landmark(PATH, [[1, 0, 0], [1, 0, 0]], 0, 0)


def test_canonical_examples():
    assert is_canonical(PATH, DFS_PATH, range(3)) == {0: 0, 1: 1, 2: 2}
    assert is_canonical(PATH, DFS_PATH, [0, 1]) is None
    assert is_canonical(PATH, np.zeros((0, 3), bool), range(3)) == {}


def test_dfs_examples():
    order, configs = dfs_discovery(PATH, range(3))
    assert order == [0, 1, 2]
    assert np.array_equal(configs, DFS_PATH)
    assert np.array_equal(dfs_canonical_set(edgeless(4), range(4)), np.eye(4, dtype=bool))
    with pytest.raises(ValueError):
        dfs_canonical_set(PATH, [])


def test_dfs_restarts_and_ignores_known():
    net = MultilayerNetwork.from_edges(5, [[(0, 1), (1, 2), (3, 4)]])
    order, configs = dfs_discovery(net, [0, 2, 3, 4])
    # 1 is known, so 0 and 2 are separate components of the induced subgraph
    assert order == [0, 2, 3, 4]
    assert not configs[:, 1].any()
    assert configs[3].tolist() == [False, False, False, True, True]


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12), st.floats(0, 1), st.integers(0, 2**31))
def test_dfs_sets_are_canonical(n, p, seed):
    rng = np.random.default_rng(seed)
    net = generate_multi_gnp(n, 1, p, rng)
    unknown = np.sort(rng.choice(n, int(rng.integers(1, n + 1)), replace=False))
    r = dfs_canonical_set(net, unknown)
    assert len(r) == len(unknown)
    assert not r[:, np.setdiff1d(np.arange(n), unknown)].any()
    mapping = is_canonical(net, r, unknown)
    assert mapping is not None
    assert len(set(mapping.values())) == len(r)
    assert all(is_landmark(net, r, j, v) for j, v in mapping.items())
    order, _ = dfs_discovery(net, unknown)
    for j, v in enumerate(order):
        assert is_landmark(net, r, j, v)


# --- shattering oracle ------------------------------------------------------

def test_oracle_agrees_with_canonical_single_layer():
    rng = np.random.default_rng(11)
    for _ in range(300):
        problem = random_problem(rng, n_max=5, k_max=1, master="or")
        r = random_subset(rng, problem.net.n, int(rng.integers(1, 4)))
        expected = is_canonical(problem.net, r, problem.unknown) is not None
        assert shatter_oracle(problem, r) == expected


def test_oracle_agrees_with_brute_force():
    rng = np.random.default_rng(12)
    positives = 0
    for _ in range(150):
        problem = random_problem(rng, n_max=3, k_max=2)
        r = random_subset(rng, problem.net.n, int(rng.integers(1, 5)))
        got = shatter_oracle(problem, r)
        assert got == brute_shattered(problem, r)
        positives += got
    assert positives > 20


def test_witnesses_verify():
    rng = np.random.default_rng(13)
    checked = 0
    for _ in range(200):
        problem = random_problem(rng, n_max=6, k_max=3)
        r = random_subset(rng, problem.net.n, int(rng.integers(1, 7)))
        cand = find_shattering(problem, r)
        if cand is not None:
            assert verify_shattering(problem, cand)
            assert all(set(c) <= set(problem.unknown.tolist()) for c in cand.contested)
            checked += 1
    assert checked > 20


def test_verify_rejects_bad_witness():
    problem = LearningProblem.all_unknown(PATH, "or")
    good = find_shattering(problem, DFS_PATH)
    a, b = good.assoc[0]
    flipped = a.copy()
    flipped[2] = ~flipped[2]
    bad = ShatterCandidate(DFS_PATH, [(flipped, b)] + good.assoc[1:])
    assert verify_shattering(problem, good)
    assert not verify_shattering(problem, bad)


def test_size_cap():
    rng = np.random.default_rng(14)
    for _ in range(300):
        problem = random_problem(rng, n_max=4, k_max=2)
        cap = problem.net.k * problem.sigma
        if cap + 1 > 2 ** problem.net.n:
            continue
        r = random_subset(rng, problem.net.n, int(rng.integers(cap + 1, min(2 ** problem.net.n, 12) + 1)))
        assert not shatter_oracle(problem, r)


def test_guard():
    problem = LearningProblem.all_unknown(generate_multi_gnp(17, 1, 0.2, 0), "or")
    with pytest.raises(GuardExceeded):
        shatter_oracle(problem, np.zeros((1, 17), bool))
    small = LearningProblem.all_unknown(generate_multi_gnp(5, 1, 0.2, 0), "or")
    with pytest.raises(GuardExceeded):
        shatter_oracle(small, all_configs(5)[:13])
    assert shatter_oracle(small, all_configs(5)[:2], max_configs=2) in (True, False)


def test_empty_set_shattered():
    problem = LearningProblem.all_unknown(PATH, "or")
    assert shatter_oracle(problem, np.zeros((0, 3), bool))


def test_candidate_validation():
    with pytest.raises(ValueError):
        ShatterCandidate([[1, 0]], [([1, 0], [1, 0])])
    with pytest.raises(ValueError):
        ShatterCandidate([[1, 0]], [])


def test_layer_restriction_lifting():
    rng = np.random.default_rng(15)
    lifted = 0
    for _ in range(100):
        n, k = int(rng.integers(2, 5)), 2
        net = generate_multi_gnp(n, k, float(rng.random()), rng)
        i = int(rng.integers(0, k))
        single = MultilayerNetwork(n, [net.layers[i]])
        master = str(rng.choice(["or", "and"]))
        r = random_subset(rng, n, int(rng.integers(1, n + 1)))
        if shatter_oracle(LearningProblem.all_unknown(single, master), r):
            assert shatter_oracle(LearningProblem.all_unknown(net, master), r)
            lifted += 1
    assert lifted > 10


# --- exact dimension --------------------------------------------------------

def test_single_layer_dimension_is_sigma():
    rng = np.random.default_rng(16)
    for _ in range(5):
        problem = random_problem(rng, n_max=4, k_max=1, master="or")
        value, witness = natarajan_dimension(problem)
        assert value == problem.sigma
        assert shatter_oracle(problem, witness)


def test_dimension_between_sigma_and_k_sigma():
    rng = np.random.default_rng(17)
    for _ in range(4):
        problem = random_problem(rng, n_max=3, k_max=2)
        value, _ = natarajan_dimension(problem)
        assert problem.sigma <= value <= problem.net.k * problem.sigma


def test_dimension_guard():
    with pytest.raises(GuardExceeded):
        natarajan_dimension(LearningProblem.all_unknown(generate_multi_gnp(6, 1, 0.5, 0), "or"))


def nested_chain(n, k, rng):
    """Layer i+1 is layer i plus a perfect matching on edges it lacks."""
    layers = [set()]
    for _ in range(1, k):
        prev = layers[-1]
        while True:
            perm = rng.permutation(n)
            match = {tuple(sorted((int(perm[2 * j]), int(perm[2 * j + 1])))) for j in range(n // 2)}
            if not match & prev:
                break
        layers.append(prev | match)
    return MultilayerNetwork.from_edges(n, [sorted(e) for e in layers])


def test_nested_chain_family_has_dimension_sigma():
    rng = np.random.default_rng(18)
    net = nested_chain(4, 2, rng)
    assert np.all(np.diff(net.degrees, axis=0) == 1)
    value, _ = natarajan_dimension(LearningProblem.all_unknown(net, "or"))
    assert value == 4


# --- Q-sets -----------------------------------------------------------------

def test_is_nested():
    assert is_nested(np.array([1, 3]), np.array([0, 1, 3]))
    assert not is_nested(np.array([1, 4]), np.array([0, 1, 3]))
    assert not is_nested(np.array([0, 1, 3]), np.array([1, 3]))
    assert is_nested(np.array([], int), np.array([2]))


def test_q_set_check_examples():
    e = edgeless(4, 2)
    assert q_set_check(e, range(4), [(0, 0), (1, 1), (2, 0)])
    assert not q_set_check(e, range(4), [(0, 0), (0, 1)])
    c = complete(4)
    assert not q_set_check(c, range(4), [(0, 0), (1, 0)])
    with pytest.raises(ValueError):
        q_set_check(e, [1], [(0, 0)])
    with pytest.raises(ValueError):
        q_set_check(e, range(4), [(0, 0), (0, 0)])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 14), st.integers(1, 3), st.floats(0, 1), st.integers(0, 2**31), st.booleans())
def test_nesting_matrix_matches_pairwise_merge(n, k, p, seed, force_sparse):
    net = generate_multi_gnp(n, k, p, np.random.default_rng(seed))
    pairs = all_pairs(net, range(n))
    old = qset_mod._DENSE_LIMIT
    try:
        if force_sparse:
            qset_mod._DENSE_LIMIT = 0
        nested = nesting_matrix(net, pairs)
    finally:
        qset_mod._DENSE_LIMIT = old
    nested = nested.toarray() if hasattr(nested, "toarray") else nested
    for a in range(len(pairs)):
        for b in range(len(pairs)):
            if a != b:
                expected = not q_set_check(net, range(n), [pairs[a], pairs[b]]) and is_nested(
                    *(qset_mod.closed_neighborhood_array(net, *pairs[x]) for x in (a, b)))
                assert bool(nested[a, b]) == expected


def test_qset_construction_examples():
    net = generate_multi_gnp(5, 2, 0.5, 3)
    cand = shatterable_from_qset(net, QSet([(2, 1)]))
    assert cand.R.shape == (1, 5)
    assert cand.R[0].nonzero()[0].tolist() == qset_mod.closed_neighborhood_array(net, 2, 1).tolist()
    e = edgeless(3, 2)
    cand = shatterable_from_qset(e, QSet([(0, 0), (1, 1), (2, 0)]))
    assert np.array_equal(cand.R, np.eye(3, dtype=bool))
    with pytest.raises(ValueError):
        shatterable_from_qset(e, QSet([(0, 0), (0, 1)]))
    with pytest.raises(ValueError):
        QSet([(0, 0), (0, 0)])


def test_qset_outputs_shattered_on_tiny_two_layer_graphs():
    rng = np.random.default_rng(19)
    for _ in range(60):
        n = int(rng.integers(2, 9))
        net = generate_multi_gnp(n, 2, float(rng.random()), rng)
        master = str(rng.choice(["or", "and"]))
        sigma = int(rng.integers(1, n + 1))
        unknown = np.sort(rng.choice(n, sigma, replace=False))
        problem = LearningProblem.from_target(ThresholdSystem(net, master, random_thresholds(net, rng)), unknown)
        q = pnn_set(net, unknown)
        if len(q) > 12:
            q = QSet(q.pairs[:12])
        cand = shatterable_from_qset(net, q, problem)
        assert len(cand) == len(q)
        assert shatter_oracle(problem, cand.R)
        assert verify_shattering(problem, cand)


def test_full_qset_on_n8():
    rng = np.random.default_rng(20)
    for _ in range(3000):
        net = generate_multi_gnp(8, 2, 0.5, rng)
        if q_set_check(net, range(4), all_pairs(net, range(4))):
            break
    else:
        pytest.fail("no full Q-set found")
    problem = LearningProblem.from_target(ThresholdSystem(net, "or", random_thresholds(net, rng)), range(4))
    cand = shatterable_from_qset(net, QSet(all_pairs(net, range(4))), problem)
    assert len(cand) == 8 and shatter_oracle(problem, cand.R)


def test_pnn_examples():
    assert pnn_lower_bound(complete(7), range(7)) == 1
    assert pnn_lower_bound(edgeless(6, 3), range(6)) == 6
    assert pnn_lower_bound(edgeless(6, 1), [1, 4]) == 2
    assert pnn_lower_bound(edgeless(3, 2), []) == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(1, 4), st.floats(0, 1), st.integers(0, 2**31))
def test_pnn_properties(n, k, p, seed):
    rng = np.random.default_rng(seed)
    net = generate_multi_gnp(n, k, p, rng)
    unknown = np.sort(rng.choice(n, int(rng.integers(1, n + 1)), replace=False))
    pairs, color = pnn_coloring(net, unknown)
    nested = nesting_matrix(net, pairs)
    conflict = nested | nested.T
    assert not np.any(conflict & (color[:, None] == color[None, :]))
    bound = pnn_lower_bound(net, unknown)
    assert 1 <= bound <= k * len(unknown)
    for c in np.unique(color):
        assert q_set_check(net, unknown, [pp for pp, cc in zip(pairs, color) if cc == c])


def test_proportion_bound():
    assert qset_proportion_bound(100, 2, 5) == pytest.approx(1 - 400 * 0.75 ** 100, abs=1e-15)
    assert 1 - qset_proportion_bound(100, 2, 5) == pytest.approx(1.2828808e-10, rel=1e-6)
    assert qset_proportion_bound(10, 2, 5) == 0.0
    vals = [qset_proportion_bound(n, 3, 4) for n in range(4, 200)]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    for bad in [(0, 2, 1), (10, 1, 1), (10, 2, 0), (3, 2, 4)]:
        with pytest.raises(ValueError):
            qset_proportion_bound(*bad)


def test_full_qset_probability():
    assert estimate_full_qset_probability(1, 2, 1, 5, 0) == 0.0
    trials = 200
    est = estimate_full_qset_probability(40, 2, 3, trials, np.random.default_rng(21))
    bound = qset_proportion_bound(40, 2, 3)
    assert est >= bound - 3 * math.sqrt(bound * (1 - bound) / trials) - 1e-12
    with pytest.raises(ValueError):
        estimate_full_qset_probability(5, 2, 1, 0, 0)


# --- text formats -----------------------------------------------------------

def test_qset_file_round_trip():
    q = QSet([(3, 0), (1, 1)])
    buf = io.StringIO()
    dump_qset(q, buf)
    assert buf.getvalue() == "3 0\n1 1\n"
    assert load_qset(io.StringIO("# q\n" + buf.getvalue())) == q
    with pytest.raises(ValueError):
        load_qset(io.StringIO("1 2 3\n"))


def test_candidate_file_round_trip():
    problem = LearningProblem.all_unknown(PATH, "or")
    cand = find_shattering(problem, DFS_PATH)
    text = candidate_text(cand)
    assert text.split("\n\n")[0] == "100\n" + "\n".join(
        "".join("1" if b else "0" for b in c) for c in cand.assoc[0]) 
    again = load_candidate(io.StringIO(text))
    assert np.array_equal(again.R, cand.R)
    assert all(np.array_equal(a, b) for x, y in zip(again.assoc, cand.assoc) for a, b in zip(x, y))
    bare = load_candidate(io.StringIO("100\n\n110\n"))
    assert bare.assoc is None and len(bare) == 2
    with pytest.raises(ValueError):
        load_candidate(io.StringIO("100\n010\n"))
