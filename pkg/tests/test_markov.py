import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctlab.graph import C_CRIT, GraphParams, expected_degree_sum, second_moment_sum
from ctlab.markov import (
    KernelSpec,
    dense_kernel,
    kernel_row,
    mixing_profile,
    restricted_walk_endpoints,
    restricted_walk_sample,
    return_probability,
    row_inflation,
    tv_distance,
    two_step_dominance_check,
    two_step_weight,
)
from ctlab.torus import distance_from_ids, point_to_id


def test_row_is_stochastic_and_zero_on_diagonal():
    spec = KernelSpec(7)
    row = kernel_row(spec, (2, 3))
    assert abs(row.sum() - 1) <= 1e-12
    assert row[point_to_id((2, 3), 7)] == 0.0


def test_row_proportional_to_inverse_distance():
    spec = KernelSpec(5)
    row = kernel_row(spec, 0)
    r = distance_from_ids(np.arange(25), 0, 5)
    ratio = row[1:] * r[1:]
    assert np.allclose(ratio, ratio[0])


def test_forbidden_rows():
    spec = KernelSpec(6, forbidden={1, 2, 30})
    row = kernel_row(spec, 0)
    assert row[[1, 2, 30]].sum() == 0.0
    assert abs(row.sum() - 1) <= 1e-12
    with pytest.raises(ValueError):
        kernel_row(spec, 2)
    everyone = KernelSpec(3, forbidden=set(range(1, 9)))
    with pytest.raises(ValueError):
        kernel_row(everyone, 0)


def test_tv_examples():
    mu = np.array([0.2, 0.3, 0.5])
    assert tv_distance(mu, mu) == 0.0
    assert tv_distance([1, 0, 0], [0, 0, 1]) == 1.0
    assert tv_distance([0.5, 0.5], [1.0, 0.0]) == 0.5
    with pytest.raises(ValueError):
        tv_distance([1.0], [0.5, 0.5])
    with pytest.raises(ValueError):
        tv_distance([0.7, 0.7], [0.5, 0.5])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=20), st.data())
def test_tv_is_a_metric_on_simplex(w, data):
    mu = np.array(w) / sum(w)
    nu = np.array(data.draw(st.permutations(w))) / sum(w)
    d = tv_distance(mu, nu)
    assert 0 <= d <= 1
    assert d == pytest.approx(tv_distance(nu, mu))
    u = np.full(mu.size, 1 / mu.size)
    assert d <= tv_distance(mu, u) + tv_distance(u, nu) + 1e-12


@pytest.mark.parametrize("N", [4, 5, 9])
def test_kernel_symmetric_doubly_stochastic(N):
    P = dense_kernel(KernelSpec(N))
    assert np.allclose(P, P.T, atol=0)
    assert np.allclose(P.sum(axis=0), 1, atol=1e-12)
    assert np.allclose(P.sum(axis=1), 1, atol=1e-12)
    pi = np.full(N * N, 1 / (N * N))
    assert np.allclose(pi @ P, pi, atol=1e-15)


def test_dense_cap():
    with pytest.raises(ValueError):
        dense_kernel(KernelSpec(33))


def test_mixing_profile_n25():
    rep = mixing_profile(KernelSpec(25), 40)
    assert rep.passed
    assert rep.bound[9] == pytest.approx(0.4513, abs=1e-4)
    assert rep.max_tv[9] <= rep.bound[9]
    assert np.all(np.diff(rep.max_tv) <= 1e-15)
    assert np.all((rep.max_tv >= 0) & (rep.max_tv <= 1))


def test_mixing_independent_of_start():
    spec = KernelSpec(11)
    a = mixing_profile(spec, 6, start_states=[0])
    b = mixing_profile(spec, 6, start_states=[57, 101])
    assert np.allclose(a.max_tv, b.max_tv, atol=1e-14)


def test_uniform_start_stays_uniform():
    P = dense_kernel(KernelSpec(9))
    mu = np.full(81, 1 / 81)
    for _ in range(5):
        mu = mu @ P
        assert tv_distance(mu, np.full(81, 1 / 81)) < 1e-14


def test_mixing_csv(tmp_path):
    rep = mixing_profile(KernelSpec(7), 5)
    rep.write_csv(tmp_path / "m.csv")
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "k,max_tv,bound"
    assert len(lines) == 6


def test_return_probability_identities():
    for N in (9, 15):
        spec = KernelSpec(N)
        P = dense_kernel(spec)
        assert return_probability(spec) == pytest.approx((P @ P)[0, 0], rel=1e-12)
    spec = KernelSpec(100)
    Z = expected_degree_sum(GraphParams(100, C_CRIT))
    assert return_probability(spec) == pytest.approx(second_moment_sum(GraphParams(100, C_CRIT)) / Z**2, rel=1e-14)
    assert return_probability(KernelSpec(100, c=1e-9)) == pytest.approx(
        return_probability(KernelSpec(100, c=1.0)), rel=1e-12
    )  # c cancels in the normalized kernel


def test_return_offset_band():
    c = C_CRIT
    offs = [N * N * return_probability(KernelSpec(N)) - 4 * c * c * math.log(N) for N in (50, 100, 200, 400)]
    assert all(0.09 <= o <= 0.17 for o in offs)
    assert np.all(np.diff(offs) < 0)
    widths = np.abs(np.diff(offs))
    assert np.all(np.diff(widths) < 0)


def test_dominance_examples():
    rep = two_step_dominance_check(KernelSpec(9, c=0.7))
    assert rep.passed and rep.checked == 81 * 81 * 7
    assert rep.worst_ratio == pytest.approx(1.0, abs=1e-12)  # k = 2, u = v
    rng = np.random.default_rng(0)
    pairs = [tuple(p) for p in rng.integers(0, 225, size=(100, 2))]
    assert two_step_dominance_check(KernelSpec(15), pairs).passed


@pytest.mark.parametrize("N", [50, 80])
def test_two_step_weight_bound(N):
    c = C_CRIT
    rng = np.random.default_rng(N)
    bound = 5 * c * c * math.log(N) / N**2
    for u, v in rng.integers(0, N * N, size=(20, 2)):
        assert two_step_weight(N, c, int(u), int(v)) <= bound
    assert two_step_weight(N, c, 0, 0) == pytest.approx(second_moment_sum(GraphParams(N, c)), rel=1e-12)


def test_row_inflation_ordering():
    N = 20
    rng = np.random.default_rng(1)
    base = kernel_row(KernelSpec(N), 0)
    factors = []
    for k in (5, 20, 80, 200):
        A = set(rng.choice(np.arange(1, N * N), size=k, replace=False).tolist())
        spec = KernelSpec(N, forbidden=A)
        row = kernel_row(spec, 0)
        allowed = np.ones(N * N, dtype=bool)
        allowed[list(A)] = False
        allowed[0] = False
        assert np.all(row[allowed] >= base[allowed] * (1 - 1e-12))
        f = row_inflation(spec, 0)
        assert np.allclose(row[allowed], base[allowed] * f)
        factors.append((f - 1) * N / math.sqrt(k))
    assert max(factors) < 10


def test_restricted_walk_no_repeats():
    spec = KernelSpec(7)
    rng = np.random.default_rng(3)
    for _ in range(50):
        path = restricted_walk_sample(spec, 20, 0, rng, forbidden=lambda i: {1, 2})
        assert len(set(path)) == len(path) == 21
        assert not ({1, 2} & set(path[1:]))


def test_restricted_walk_single_step_law():
    spec = KernelSpec(5)
    rng = np.random.default_rng(4)
    ends = np.array([restricted_walk_sample(spec, 1, 0, rng)[1] for _ in range(40_000)])
    emp = np.bincount(ends, minlength=25) / ends.size
    assert tv_distance(emp, kernel_row(spec, 0)) < 0.02


def test_restricted_walk_exhausted():
    spec = KernelSpec(3)
    with pytest.raises(ValueError):
        restricted_walk_sample(spec, 9, 0, np.random.default_rng(0))


def test_restricted_endpoints_near_uniform():
    N = 31
    L = math.ceil(12 * math.log(N))
    ends = restricted_walk_endpoints(KernelSpec(N), L, 0, 1_000_000, np.random.default_rng(7))
    emp = np.bincount(ends, minlength=N * N) / ends.size
    assert tv_distance(emp, np.full(N * N, 1 / N**2)) <= 0.05
