import numpy as np
import pytest
from hypothesis import given, settings, strategies as st_
from hypothesis.extra.numpy import arrays

from ctpe.features import FAMILIES, eval_features, feature_dim, gram, make_features


@pytest.mark.parametrize("family,d,p", [("linear", 2, 3), ("quadratic", 2, 6), ("reduced", 3, 7),
                                        ("richer", 2, 8), ("constant", 5, 1)])
def test_feature_dim(family, d, p):
    assert feature_dim(family, d) == p
    assert make_features(family, d).p == p


def test_eval_examples():
    np.testing.assert_array_equal(eval_features(make_features("quadratic", 2), [0.0, 0.0]), [1, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(eval_features(make_features("linear", 2), [2.0, -1.0]), [1, 2, -1])
    np.testing.assert_array_equal(eval_features(make_features("richer", 1), [1.0]), [1, 1, 1, 1])


def test_errors():
    with pytest.raises(ValueError):
        make_features("cubic", 2)
    with pytest.raises(ValueError):
        make_features("linear", 0)
    with pytest.raises(ValueError):
        eval_features(make_features("linear", 2), [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        gram(make_features("linear", 1), np.empty((0, 1)))


def test_gram_examples():
    states = np.random.default_rng(0).normal(size=(7, 2))
    np.testing.assert_array_equal(gram(make_features("constant", 2), states), [[1.0]])
    np.testing.assert_array_equal(gram(make_features("linear", 1), [[1.0]]), [[1, 1], [1, 1]])


def test_gram_brute_force():
    fmap = make_features("quadratic", 3)
    states = np.random.default_rng(1).normal(size=(100, 3))
    expect = np.zeros((fmap.p, fmap.p))
    for s in states:
        phi = eval_features(fmap, s)
        for a in range(fmap.p):
            for b in range(fmap.p):
                expect[a, b] += phi[a] * phi[b] / len(states)
    np.testing.assert_allclose(gram(fmap, states), expect, atol=1e-12, rtol=0)


@settings(max_examples=50, deadline=None)
@given(family=st_.sampled_from(FAMILIES), d=st_.integers(1, 4), n=st_.integers(1, 30), seed=st_.integers(0, 10**6))
def test_gram_symmetric_psd(family, d, n, seed):
    states = 2.0 * np.random.default_rng(seed).normal(size=(n, d))
    G = gram(make_features(family, d), states)
    np.testing.assert_allclose(G, G.T, atol=1e-12)
    assert np.linalg.eigvalsh(G).min() >= -1e-10 * max(1.0, np.trace(G))


@settings(max_examples=30, deadline=None)
@given(s=arrays(float, 3, elements=st_.floats(-3, 3)))
def test_first_coordinate_is_one(s):
    for family in FAMILIES:
        assert eval_features(make_features(family, 3), s)[0] == 1.0


@pytest.mark.parametrize("small,large", [("linear", "reduced"), ("reduced", "quadratic"), ("quadratic", "richer")])
def test_nesting(small, large):
    states = np.random.default_rng(2).normal(size=(200, 3))
    X = eval_features(make_features(large, 3), states)
    Y = eval_features(make_features(small, 3), states)
    coef, *_ = np.linalg.lstsq(X, Y, rcond=None)
    np.testing.assert_allclose(X @ coef, Y, atol=1e-9)


@pytest.mark.parametrize("family", ["linear", "quadratic", "reduced", "richer"])
def test_expected_matches_sampling(family):
    fmap = make_features(family, 2)
    mean = np.array([0.3, -0.5])
    cov = np.array([[0.5, 0.1], [0.1, 0.3]])
    draws = np.random.default_rng(3).multivariate_normal(mean, cov, size=400_000)
    mc = eval_features(fmap, draws).mean(axis=0)
    np.testing.assert_allclose(fmap.expected(mean, cov), mc, atol=0.01)
