import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clustree.data import Dataset
from clustree.stage1 import (
    ClassifierError,
    LogisticGroupClassifier,
    deserialize_classifier,
    fit_classifier,
    group_averaged_weights,
    penalized_loss,
    penalized_loss_grad,
    predict_weights,
)

from oracles import central_difference_grad, gaussian_posterior


def blobs(seed, J=3, p=4, n=30, spread=1.5):
    rng = np.random.default_rng(seed)
    centers = rng.normal(scale=spread, size=(J, p))
    X = np.concatenate([c + rng.normal(size=(n, p)) for c in centers])
    groups = np.repeat([f"g{j}" for j in range(J)], n)
    return Dataset(X, np.zeros(len(X)), groups)


def test_separable_two_groups():
    # the ridge penalty caps the slope, so the clusters sit well clear of the gap
    rng = np.random.default_rng(0)
    xa = rng.uniform(-2, -1, size=40)
    xb = rng.uniform(2, 3, size=40)
    X = np.column_stack([np.concatenate([xa, xb]), rng.normal(size=80)])
    data = Dataset(X, np.zeros(80), ["A"] * 40 + ["B"] * 40)
    clf = fit_classifier(data, "logistic")
    P = clf.predict_proba(X)
    truth = np.array([0] * 40 + [1] * 40)
    assert np.all(np.argmax(P, axis=1) == truth)
    assert np.all(P[np.arange(80), truth] > 0.9)


def test_naive_bayes_symmetric_midpoint():
    X = np.array([[-1.0], [1.0], [1.0], [3.0]])
    data = Dataset(X, np.zeros(4), ["A", "A", "B", "B"])
    clf = fit_classifier(data, "nb")
    np.testing.assert_allclose(predict_weights(clf, [1.0]), [0.5, 0.5], atol=1e-12)


def test_naive_bayes_closed_form_posterior():
    # class A: mean 0, var 1; class B: mean 2, var 1 (population variance)
    X = np.array([[-1.0], [1.0], [1.0], [3.0]])
    data = Dataset(X, np.zeros(4), ["A", "A", "B", "B"])
    w = predict_weights(fit_classifier(data, "nb"), [0.5])
    closed_form = math.e / (1 + math.e)
    oracle = gaussian_posterior(np.array([0.5]), [[0.0], [2.0]], [[1.0], [1.0]], [0.5, 0.5])
    assert oracle[0] == pytest.approx(closed_form, abs=1e-12)
    np.testing.assert_allclose(w, oracle, atol=1e-8)
    assert w[0] == pytest.approx(0.731, abs=5e-4)


def test_naive_bayes_multifeature_matches_density_oracle():
    data = blobs(1, J=3, p=3)
    clf = fit_classifier(data, "nb")
    eps = 1e-9 * data.X.var(axis=0).max()
    means, sds, priors = [], [], []
    for g in clf.class_labels:
        Xg = data.X[data.groups == g]
        means.append(Xg.mean(axis=0))
        sds.append(np.sqrt(Xg.var(axis=0) + eps))
        priors.append(np.mean(data.groups == g))
    for x in np.random.default_rng(2).normal(size=(20, 3)):
        np.testing.assert_allclose(predict_weights(clf, x), gaussian_posterior(x, means, sds, priors), atol=1e-9)


def test_single_group_rejected():
    data = Dataset(np.zeros((5, 2)) + np.arange(5)[:, None], np.zeros(5), ["A"] * 5)
    for kind in ("logistic", "nb"):
        with pytest.raises(ClassifierError):
            fit_classifier(data, kind)


def test_zero_variance_feature_dropped_with_warning():
    data = blobs(3, J=2, p=2)
    X = np.column_stack([data.X, np.full(len(data.X), 7.0)])
    with pytest.warns(UserWarning, match="zero-variance"):
        clf = fit_classifier(Dataset(X, data.y, data.groups), "logistic")
    assert clf.dropped == [2]
    assert np.all(clf.coef[:, 3] == 0)


@pytest.mark.parametrize("kind", ["logistic", "nb"])
def test_weights_on_simplex(kind):
    clf = fit_classifier(blobs(4), kind)
    P = clf.predict_proba(np.random.default_rng(5).normal(scale=5, size=(500, 4)))
    assert np.all(P >= 0) and np.all(P <= 1)
    np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-9)


def test_dimension_mismatch():
    clf = fit_classifier(blobs(4), "logistic")
    with pytest.raises(ValueError):
        predict_weights(clf, [0.0, 1.0])


def test_group_averaged_weights():
    clf = fit_classifier(blobs(6), "logistic")
    x = np.random.default_rng(7).normal(size=4)
    np.testing.assert_array_equal(group_averaged_weights(clf, x[None]), predict_weights(clf, x))
    with pytest.raises(ValueError):
        group_averaged_weights(clf, np.zeros((0, 4)))


def test_group_average_of_extreme_rows():
    X = np.array([[-50.0], [-49.0], [49.0], [50.0]])
    clf = fit_classifier(Dataset(X, np.zeros(4), ["A", "A", "B", "B"]), "nb")
    np.testing.assert_allclose(group_averaged_weights(clf, [[-50.0], [50.0]]), [0.5, 0.5], atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 8), st.integers(1, 50), st.integers(0, 2**32 - 1))
def test_mean_of_simplex_points_stays_on_simplex(J, m, seed):
    W = np.random.default_rng(seed).dirichlet(np.ones(J), size=m)
    mean = W.mean(axis=0)
    assert abs(mean.sum() - 1) <= 1e-9 and np.all(mean >= 0)


def test_random_simplex_averages_1000_cases():
    rng = np.random.default_rng(8)
    for _ in range(1000):
        J = int(rng.integers(2, 10))
        W = rng.dirichlet(np.ones(J), size=int(rng.integers(1, 20)))
        assert abs(W.mean(axis=0).sum() - 1) <= 1e-9


def test_softmax_shift_invariance():
    clf = fit_classifier(blobs(9), "logistic")
    X = np.random.default_rng(10).normal(size=(100, 4))
    shifted = LogisticGroupClassifier(clf.class_labels, clf.coef + np.array([[3.7] + [0] * 4]),
                                      clf.mean, clf.scale)
    np.testing.assert_allclose(shifted.predict_proba(X), clf.predict_proba(X), atol=1e-12)


def test_standardization_makes_scale_irrelevant():
    data = blobs(11)
    X = np.random.default_rng(12).normal(size=(50, 4))
    base = fit_classifier(data, "logistic").predict_proba(X)
    for c in (1e-3, 7.5, 1e4):
        scaled = fit_classifier(Dataset(data.X * c, data.y, data.groups), "logistic")
        np.testing.assert_allclose(scaled.predict_proba(X * c), base, atol=1e-6)


def _design(data):
    clf = fit_classifier(data, "logistic")
    D = clf.design(data.X)
    Y = np.zeros((data.n_obs, clf.n_classes))
    Y[np.arange(data.n_obs), [clf.class_labels.index(g) for g in data.groups]] = 1
    return D, Y


def test_gradient_matches_finite_differences():
    D, Y = _design(blobs(13, J=3, p=4))
    rng = np.random.default_rng(14)
    for _ in range(10):
        W = rng.normal(size=(3, 5))
        num = central_difference_grad(lambda V: penalized_loss(V, D, Y), W, 1e-5)
        ana = penalized_loss_grad(W, D, Y)
        assert np.max(np.abs(ana - num)) / np.max(np.abs(num)) < 1e-4


def test_optimizer_converges_to_stationary_point():
    clf = fit_classifier(blobs(15), "logistic")
    assert clf.converged
    data = blobs(15)
    D, Y = _design(data)
    assert np.max(np.abs(penalized_loss_grad(clf.coef, D, Y))) < 1e-6


def test_relabeling_groups_leaves_probabilities_unchanged():
    data = blobs(16)
    relabel = {"g0": "z", "g1": "a", "g2": "m"}
    other = Dataset(data.X, data.y, [relabel[g] for g in data.groups])
    X = np.random.default_rng(17).normal(size=(30, 4))
    p1 = fit_classifier(data).predict_proba(X)
    clf2 = fit_classifier(other)
    p2 = clf2.predict_proba(X)
    order = [clf2.class_labels.index(relabel[g]) for g in ["g0", "g1", "g2"]]
    np.testing.assert_allclose(p2[:, order], p1, atol=1e-8)


@pytest.mark.parametrize("kind", ["logistic", "nb"])
def test_serialization_round_trip(kind):
    import json

    clf = fit_classifier(blobs(18), kind)
    back = deserialize_classifier(json.loads(json.dumps(clf.serialize())))
    X = np.random.default_rng(19).normal(size=(40, 4))
    np.testing.assert_array_equal(back.predict_proba(X), clf.predict_proba(X))


def test_converges_on_many_overlapping_groups():
    from clustree.simgen import SimConfig, generate

    train = generate(SimConfig(1, 500, 20, seed=0)).train
    clf = fit_classifier(train)
    assert clf.converged and clf.n_iter < 500
