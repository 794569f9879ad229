import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from msas.stats import compare_samples, holm, latin_hypercube, ranksum, spearman, verdict

from oracles import brute_force_ranksum


# --- latin hypercube -------------------------------------------------------


def test_lhs_single_point_in_cube():
    u = latin_hypercube(1, 3, np.random.default_rng(0))
    assert u.shape == (1, 3)
    assert np.all((u >= 0) & (u < 1))


def test_lhs_strata_small():
    u = latin_hypercube(4, 2, np.random.default_rng(1))
    for c in range(2):
        assert sorted(np.floor(4 * u[:, c]).astype(int)) == [0, 1, 2, 3]


@given(n=st.integers(1, 60), d=st.integers(1, 6), seed=st.integers(0, 2**32 - 1))
def test_lhs_strata_exact(n, d, seed):
    u = latin_hypercube(n, d, np.random.default_rng(seed))
    for c in range(d):
        assert sorted(np.floor(n * u[:, c]).astype(int)) == list(range(n))


def test_lhs_marginal_mean():
    u = latin_hypercube(1000, 3, np.random.default_rng(2))
    assert np.all(np.abs(u.mean(axis=0) - 0.5) < 0.03)


def test_lhs_reproducible():
    a = latin_hypercube(20, 4, np.random.default_rng(9))
    b = latin_hypercube(20, 4, np.random.default_rng(9))
    assert np.array_equal(a, b)


def test_lhs_rejects_empty():
    with pytest.raises(ValueError):
        latin_hypercube(0, 2, np.random.default_rng(0))


# --- spearman ---------------------------------------------------------------


def test_spearman_hand_cases():
    a = np.array([3.0, 1.0, 4.0, 1.5, 9.0])
    assert spearman(a, a) == pytest.approx(1.0)
    assert spearman(a, -a) == pytest.approx(-1.0)
    assert spearman([1, 2, 3], [3, 1, 2]) == pytest.approx(-0.5)


def test_spearman_constant_is_zero():
    assert spearman([1, 1, 1, 1], [1, 2, 3, 4]) == 0.0


def test_spearman_length_mismatch():
    with pytest.raises(ValueError):
        spearman([1, 2, 3], [1, 2, 3, 4])


@given(
    data=st.lists(st.tuples(st.integers(-100, 100), st.integers(-100, 100)), min_size=3, max_size=30),
    shift=st.floats(-5, 5),
)
def test_spearman_monotone_invariance(data, shift):
    # integer data keeps the maps strictly increasing in floating point too
    a = np.array([p[0] for p in data], dtype=float)
    b = np.array([p[1] for p in data], dtype=float)
    rho = spearman(a, b)
    assert spearman(np.exp(a / 20.0) + shift, b) == pytest.approx(rho, abs=1e-12)
    assert spearman(a, b**3 + 2 * b) == pytest.approx(rho, abs=1e-12)
    assert -1.0 <= rho <= 1.0


# --- rank-sum ---------------------------------------------------------------


def test_ranksum_separated_small():
    assert ranksum([1, 2, 3], [10, 11, 12]) == pytest.approx(0.1, abs=0)


def test_ranksum_identical_multisets():
    assert ranksum([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(1.0)
    rng = np.random.default_rng(0)
    x = rng.normal(size=15)
    assert ranksum(x, x[::-1]) == pytest.approx(1.0, abs=1e-12)


def test_ranksum_all_equal_is_one():
    assert ranksum([2, 2, 2], [2, 2, 2, 2]) == 1.0


def test_ranksum_exact_matches_enumeration():
    rng = np.random.default_rng(123)
    for _ in range(50):
        n1, n2 = rng.integers(3, 9, size=2)
        # integer values give frequent ties
        a = rng.integers(0, 6, size=n1).astype(float)
        b = rng.integers(0, 6, size=n2).astype(float)
        assert ranksum(a, b) == brute_force_ranksum(a, b)


@given(
    a=st.lists(st.integers(0, 20), min_size=3, max_size=20),
    b=st.lists(st.integers(0, 20), min_size=3, max_size=20),
)
def test_ranksum_symmetric_and_bounded(a, b):
    p = ranksum(a, b)
    assert 0.0 < p <= 1.0
    assert p == pytest.approx(ranksum(b, a), abs=1e-12)


def test_ranksum_normal_branch_close_to_exact_scale():
    # n = 30 per group, clearly separated samples
    p = ranksum(np.arange(30.0), np.arange(30.0) + 100)
    assert p < 1e-9
    rng = np.random.default_rng(5)
    x, y = rng.normal(size=30), rng.normal(size=30)
    assert 0.0 < ranksum(x, y) <= 1.0


def test_ranksum_requires_three():
    with pytest.raises(ValueError):
        ranksum([1, 2], [3, 4, 5])


# --- holm ---------------------------------------------------------------------


def test_holm_hand_case():
    assert holm([0.01, 0.04]) == pytest.approx([0.02, 0.04])
    assert holm([0.3]) == [0.3]


@given(st.lists(st.floats(1e-9, 1.0), min_size=1, max_size=12))
def test_holm_properties(p):
    adj = holm(p)
    assert all(q >= r - 1e-15 for q, r in zip(adj, p))
    assert all(q <= 1.0 for q in adj)
    order = np.argsort(p, kind="stable")
    sorted_adj = [adj[i] for i in order]
    assert all(x <= y + 1e-15 for x, y in zip(sorted_adj, sorted_adj[1:]))


def test_holm_capped():
    assert holm([0.6, 0.7, 0.9]) == pytest.approx([1.0, 1.0, 1.0])


# --- verdicts -----------------------------------------------------------------


def test_verdict_rules():
    assert verdict([1, 2, 3], [5, 6, 7], 0.01) == "win"
    assert verdict([5, 6, 7], [1, 2, 3], 0.01) == "loss"
    assert verdict([5, 6, 7], [1, 2, 3], 0.2) == "tie"


def test_compare_shifted_all_wins():
    rng = np.random.default_rng(3)
    cand = [rng.normal(size=10) for _ in range(4)]
    base = [c + 10.0 for c in cand]
    s = compare_samples([f"t{i}" for i in range(4)], cand, base)
    assert s.wtl() == "4/0/0"
    assert s.wins + s.ties + s.losses == 4


def test_compare_self_all_ties():
    rng = np.random.default_rng(4)
    cand = [rng.normal(size=10) for _ in range(3)]
    s = compare_samples(["a", "b", "c"], cand, [c.copy() for c in cand])
    assert s.verdicts == ["tie"] * 3
    assert all(math.isclose(p, 1.0) for p in s.pvalues)


def test_compare_single_label_skips_holm():
    s = compare_samples(["a"], [[1, 2, 3]], [[10, 11, 12]])
    assert s.adjusted == s.pvalues
