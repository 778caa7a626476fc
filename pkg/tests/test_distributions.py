import numpy as np
import pytest
from scipy.stats import ks_2samp

from szegolab.distributions import EmpiricalDistribution, ks_distance


def test_ks_matches_scipy_for_unweighted_samples():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(500)
    b = rng.standard_normal(700) * 1.2 + 0.1
    d = ks_distance(EmpiricalDistribution.from_samples(a), EmpiricalDistribution.from_samples(b))
    assert d == pytest.approx(ks_2samp(a, b).statistic, abs=1e-14)


def test_weighted_atoms():
    p = EmpiricalDistribution(np.array([0.0, 1.0]), np.array([0.25, 0.75]))
    q = EmpiricalDistribution(np.array([0.0, 1.0]), np.array([0.5, 0.5]))
    assert ks_distance(p, q) == pytest.approx(0.25)
    assert p.moment(1) == pytest.approx(0.75)
    assert p.expect(lambda s: s ** 2) == pytest.approx(0.75)
    assert list(p.cdf([-1, 0, 0.5, 1])) == pytest.approx([0, 0.25, 0.25, 1.0])


def test_csv_roundtrip_exact():
    rng = np.random.default_rng(1)
    p = EmpiricalDistribution(rng.standard_normal(20), rng.uniform(0.1, 1, 20))
    q = EmpiricalDistribution.from_csv(p.to_csv())
    assert np.array_equal(p.locations, q.locations) and np.array_equal(p.weights, q.weights)


@pytest.mark.parametrize("loc,w", [([], []), ([1.0], [0.0]), ([1.0, 2.0], [1.0])])
def test_rejects(loc, w):
    with pytest.raises(ValueError):
        EmpiricalDistribution(np.array(loc), np.array(w))
