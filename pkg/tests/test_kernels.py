import numpy as np
import pytest
from scipy import stats

from ctlab import _kernels
from ctlab.rng import run_seeds, stream


def binomial_sample(n, p, size, seed=0):
    out = np.empty(size, dtype=np.int64)
    _kernels.binomial_fill(np.uint32(seed), n, p, out)
    return out


def chi2_pvalue(sample, dist):
    lo, hi = dist.ppf(1e-6), dist.ppf(1 - 1e-6)
    ks = np.arange(int(lo), int(hi) + 1)
    obs = np.array([(sample == k).sum() for k in ks], dtype=float)
    exp = dist.pmf(ks) * sample.size
    # pool both tails into the end bins
    obs[0] += (sample < ks[0]).sum()
    obs[-1] += (sample > ks[-1]).sum()
    exp[0] += dist.cdf(ks[0] - 1) * sample.size
    exp[-1] += dist.sf(ks[-1]) * sample.size
    keep = exp >= 5
    o, e = obs[keep], exp[keep]
    o = np.append(o, obs[~keep].sum())
    e = np.append(e, exp[~keep].sum())
    if e[-1] == 0:
        o, e = o[:-1], e[:-1]
    e *= o.sum() / e.sum()
    return stats.chisquare(o, e).pvalue


@pytest.mark.parametrize(
    "n, p",
    [(10, 0.3), (600, 0.0006), (40, 0.9), (1000, 0.05), (10**5, 0.3), (10**6, 0.999), (3, 1.0), (7, 0.0)],
)
def test_binomial_law(n, p):
    x = binomial_sample(n, p, 200_000, seed=n % 97)
    assert x.min() >= 0 and x.max() <= n
    if p in (0.0, 1.0):
        assert np.all(x == n * p)
        return
    assert chi2_pvalue(x, stats.binom(n, p)) > 1e-4


def test_binomial_moments_large_n():
    n, p = 10**9, 1e-3
    x = binomial_sample(n, p, 50_000, seed=3)
    m, v = n * p, n * p * (1 - p)
    assert abs(x.mean() - m) <= 4 * np.sqrt(v / x.size)
    assert x.var() == pytest.approx(v, rel=0.03)


def test_distinct_uniform_is_uniform_without_replacement():
    # numba keeps its own generator; any seeded kernel call resets it
    _kernels.binomial_fill(np.uint32(0), 1, 0.5, np.empty(1, dtype=np.int64))
    m, k = 9, 4
    out = np.empty(k, dtype=np.int64)
    subsets = {}
    for _ in range(60_000):
        _kernels.distinct_uniform(k, m, out)
        key = tuple(out.tolist())
        assert len(set(key)) == k
        subsets[key] = subsets.get(key, 0) + 1
    assert len(subsets) == 126  # C(9, 4)
    assert stats.chisquare(list(subsets.values())).pvalue > 1e-4


def test_offspring_sums_mean():
    sizes = np.array([4, 8, 12], dtype=np.int64)
    probs = np.array([0.1, 0.05, 0.02])
    out = np.empty(100_000, dtype=np.int64)
    _kernels.offspring_sums(np.uint32(9), sizes, probs, out.size, out)
    mu = (sizes * probs).sum()
    var = (sizes * probs * (1 - probs)).sum()
    assert abs(out.mean() - mu) <= 4 * np.sqrt(var / out.size)


def test_run_seeds_depend_only_on_index():
    whole = run_seeds(42, "tag", 0, 1000)
    parts = np.concatenate([run_seeds(42, "tag", s, 100) for s in range(0, 1000, 100)])
    assert np.array_equal(whole, parts)
    assert whole.dtype == np.uint32
    assert np.unique(whole).size == whole.size
    assert not np.array_equal(whole, run_seeds(42, "other", 0, 1000))
    assert not np.array_equal(whole, run_seeds(43, "tag", 0, 1000))


def test_streams_reproducible_and_distinct():
    a = stream(1, "x", 3).random(5)
    assert np.array_equal(a, stream(1, "x", 3).random(5))
    assert not np.array_equal(a, stream(1, "x", 4).random(5))
    assert not np.array_equal(a, stream(1, "y", 3).random(5))
