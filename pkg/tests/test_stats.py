import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from ctlab.exploration import BudgetError
from ctlab.graph import C_CRIT
from ctlab.limit import LimitComponents
from ctlab.stats import (
    component_vs_excursion,
    growth_bound_report,
    ks_two_sample,
    poisson_domination,
    run_campaign,
    sample_limit_threaded,
    walk_moments,
    walker_uniformity,
)


def test_ks_examples():
    assert ks_two_sample([1, 2], [1.5, 2.5]) == 0.5
    assert ks_two_sample([3, 1, 2], [1, 2, 3]) == 0.0
    assert ks_two_sample([0, 1], [5, 6, 7]) == 1.0
    with pytest.raises(ValueError):
        ks_two_sample([], [1.0])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")  # scipy's p-value for tiny samples; only the statistic is used
@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=40), st.lists(st.integers(-5, 5), min_size=1, max_size=40))
def test_ks_matches_scipy(a, b):
    # integer samples force ties, the case where the CDF bookkeeping matters
    ref = stats.ks_2samp(a, b, method="asymp").statistic
    got = ks_two_sample(a, b)
    assert got == pytest.approx(ref, abs=1e-12)
    assert got == ks_two_sample(b, a)
    assert 0.0 <= got <= 1.0


def test_moments_thread_independent():
    a = walk_moments(30, C_CRIT, [0.5, 1.0], 200, seed=4)
    b = walk_moments(30, C_CRIT, [1.0, 0.5], 200, seed=4, threads=3)
    assert np.array_equal(a.samples, b.samples)
    assert a.index.tolist() == [1 + math.floor(900 ** (2 / 3) * s) for s in (0.5, 1.0)]


def test_moments_first_grid_point():
    res = walk_moments(150, C_CRIT, [0.02], 2000, seed=1)
    assert abs(res.mean[0]) <= res.mean_tolerance()[0]
    assert res.checks()["variance"][0]
    lo, hi = res.variance_ci()
    assert lo[0] <= res.variance[0] <= hi[0]


def test_moments_subcritical_fails_mean():
    res = walk_moments(150, 0.5 * C_CRIT, [1.0], 300, seed=2)
    assert not res.checks()["mean"][0]
    assert not res.passed


def test_moments_preconditions():
    with pytest.raises(ValueError):
        walk_moments(30, C_CRIT, [0.0, 1.0], 200, 0)
    with pytest.raises(ValueError):
        walk_moments(30, C_CRIT, [1.0], 50, 0)
    with pytest.raises(ValueError):
        walk_moments(30, C_CRIT, [2.0], 200, 0, T=1.0)
    with pytest.raises(BudgetError):
        walk_moments(10, C_CRIT, [30.0], 200, 0)


def test_moments_csv(tmp_path):
    res = walk_moments(20, C_CRIT, [0.5], 100, seed=0)
    res.write_csv(tmp_path / "m.csv")
    rows = list(csv.reader(open(tmp_path / "m.csv")))
    assert rows[0] == ["s", "index", "mean", "mean_lo", "mean_hi", "mean_target", "variance",
                       "var_lo", "var_hi", "var_target", "mean_ok", "var_ok"]
    assert float(rows[1][2]) == res.mean[0]


def small_limit(M=300, j=3):
    return sample_limit_threaded(2.0, 1e-3, M, j, seed=1)


def test_identical_samples_give_zero_ks():
    first = component_vs_excursion(30, C_CRIT, 2.0, 200, 0, j=3, seed=5, limit=small_limit())
    z = np.zeros_like(first.graph, dtype=bool)
    mirror = LimitComponents(2.0, 1e-3, first.graph.copy(), first.graph.copy(), z)
    again = component_vs_excursion(30, C_CRIT, 2.0, 200, 0, j=3, seed=5, limit=mirror)
    assert again.ks.tolist() == [0.0, 0.0, 0.0]
    assert np.array_equal(again.graph, first.graph)


def test_component_result_fields(tmp_path):
    res = component_vs_excursion(30, C_CRIT, 2.0, 150, 0, j=3, seed=6, limit=small_limit())
    assert res.graph.shape == (150, 3)
    assert np.all(res.graph[:, 0] >= res.graph[:, 1])
    # shortfall counts the runs with a missing coordinate, it never drops them
    assert res.shortfall.tolist() == (res.graph == 0).sum(axis=0).tolist()
    assert np.all(np.diff(res.shortfall) >= 0)
    res.write_components_csv(tmp_path / "c.csv")
    res.write_ks_csv(tmp_path / "k.csv")
    c = list(csv.reader(open(tmp_path / "c.csv")))
    assert c[0] == ["run", "C1", "C2", "C3", "partial"] and len(c) == 151
    k = list(csv.reader(open(tmp_path / "k.csv")))
    assert k[0] == ["coordinate", "ks", "graph_shortfall", "limit_shortfall"] and len(k) == 4


def test_component_preconditions():
    with pytest.raises(ValueError):
        component_vs_excursion(30, C_CRIT, 2.0, 10, 10, j=0)
    with pytest.raises(BudgetError):
        component_vs_excursion(10, C_CRIT, 50.0, 10, 10)
    with pytest.raises(ValueError):
        component_vs_excursion(30, C_CRIT, 2.0, 10, 0, j=3, limit=small_limit(20, j=1))


def test_subcritical_components_far_from_limit():
    lim = small_limit(1000, j=1)
    res = component_vs_excursion(60, 0.5 * C_CRIT, 2.0, 300, 0, j=1, seed=3, limit=lim)
    assert res.ks[0] >= 0.3


def test_limit_threads_do_not_change_sample():
    a = sample_limit_threaded(1.0, 1e-2, 600, 2, seed=9)
    b = sample_limit_threaded(1.0, 1e-2, 600, 2, seed=9, threads=4)
    assert np.array_equal(a.completed, b.completed)
    assert np.array_equal(a.truncated_flag, b.truncated_flag)


def test_growth_rejects_small_C():
    for C in (math.e, 2.0):
        with pytest.raises(ValueError):
            growth_bound_report(20, C_CRIT, 10, 5, C=C)
    with pytest.raises(ValueError):
        growth_bound_report(5, C_CRIT, 10, 26)


def test_growth_small_run():
    rep = growth_bound_report(40, C_CRIT, 4000, 20, seed=3)
    assert rep.passed
    assert rep.bound[0] == pytest.approx(math.exp(-(6 - math.e)))
    assert np.all(rep.hits[9:] == 0)
    # k = 1: |I_1| = 1 + degree of the first root
    rep3 = growth_bound_report(40, C_CRIT, 4000, 3, C=3.0, seed=3)
    assert rep3.hits[0] > 0


def test_domination_small_and_control():
    assert poisson_domination(30, 20_000, seed=1).passed
    # far above criticality the root degree is Poisson-like with mean 4 * c log 2
    assert not poisson_domination(30, 20_000, seed=1, c=3.0).passed


def test_uniformity_preconditions():
    with pytest.raises(ValueError):
        walker_uniformity(15, C_CRIT, 5, 6, 100, 0)  # gap 1 < ceil(225^(1/6)) = 3
    with pytest.raises(ValueError):
        walker_uniformity(15, C_CRIT, 3, 3, 100, 0)
    with pytest.raises(BudgetError):
        walker_uniformity(4, C_CRIT, 10, 17, 100, 0)
    res = walker_uniformity(15, C_CRIT, 5, 6, 1000, 0, enforce_gap=False)
    assert res.counts.sum() == 1000


def test_uniformity_zero_coupling():
    N, j, M = 10, 6, 200_000
    res = walker_uniformity(N, 0.0, 1, j, M, seed=5)
    assert res.tv <= res.noise_floor + j / N**2
    assert res.ci[0] <= res.ci[1]


def test_campaign_files_and_threads(tmp_path):
    kw = dict(s_grid=(0.5, 1.0), M_limit=300, dt=1e-3)
    a = run_campaign(30, C_CRIT, 2.0, 128, 7, **kw)
    b = run_campaign(30, C_CRIT, 2.0, 128, 7, threads=3, **kw)
    fa = a.write(tmp_path / "a")
    b.write(tmp_path / "b")
    assert fa == ["moments.csv", "components.csv", "ks.csv", "result.json"]
    for name in fa:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = json.loads((tmp_path / "a" / "result.json").read_text())
    assert summary["params"]["runs"] == 128
    assert set(summary["suites"]) == {"moments", "ks_coordinate_1"}
