import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clustree.numerics import RandomSource, is_spd
from clustree.simgen import SimConfig, basis_functions, friedman, generate, setting3_mean


def test_friedman_closed_forms():
    assert friedman([0, 0.5, 0.5, 0, 0]) == 0.0
    assert friedman([0.5, 1, 0.5, 1, 1]) == pytest.approx(2.5, abs=1e-15)
    assert friedman([1, 1, 0, 0, 0]) == pytest.approx(0.5, abs=1e-15)


def test_friedman_needs_five_features():
    with pytest.raises(ValueError):
        friedman([1, 2, 3, 4])


def test_basis_function_plug_ins():
    f0, f1, f2, f3 = basis_functions([0, 0, 0.5])
    # f2 = 10 * 0.25 + 0 + 5 * 0.5
    assert (f0, f1, f2, f3) == (0.0, 0.0, 5.0, 15.0)
    assert basis_functions([0.5, 1, 0])[3] == pytest.approx(8.0, abs=1e-12)
    f0, f1, f2, f3 = basis_functions([1, 0, 0])
    assert f2 == 2.5
    assert f3 == pytest.approx(21.0, abs=1e-12)


def test_mean_patterns():
    x = np.array([0.3, 0.8, 0.1])
    f0, f1, f2, f3 = basis_functions(x)
    assert setting3_mean(x, 4, "mu1") == f0 + f1 + f2 - 0.75
    assert setting3_mean(x, 3, "mu1") == f3
    assert setting3_mean(x, 3, "mu2") == pytest.approx(f0)
    assert setting3_mean(x, 4, "mu2") == pytest.approx(f1 + f3)
    assert setting3_mean(x, 5, "mu2") == pytest.approx(f2)
    assert setting3_mean(x, 2, "mu3") == pytest.approx(f1 + f2 + f3)
    assert setting3_mean(x, 3, "mu3") == pytest.approx(f0 + f2)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(3, 10, 20)
    with pytest.raises(ValueError):
        SimConfig(1, 10, 20, dgp="mu1")
    with pytest.raises(ValueError):
        SimConfig(1, 0, 20)
    with pytest.raises(ValueError):
        SimConfig(1, 10, 1)
    with pytest.raises(ValueError):
        SimConfig(4, 10, 20)
    assert SimConfig(3, 10, 20, dgp="mu2").p == 10
    assert SimConfig(2, 10, 20).p == 5


def test_no_random_effects_leaves_unit_noise():
    sim = generate(SimConfig(1, 1000, 10, sigma_alpha=0.0, seed=1))
    X = np.concatenate([sim.train.X, sim.test.X])
    y = np.concatenate([sim.train.y, sim.test.y])
    r = y - friedman(X)
    assert len(r) == 10_000
    assert abs(r.mean()) < 0.05
    assert abs(r.var() - 1) < 0.05


def test_row_counts_n10_k40():
    sim = generate(SimConfig(1, 10, 40, seed=7))
    assert len(sim.train.group_labels()) == 32 and sim.train.n_obs == 320
    assert len(sim.test.group_labels()) == 8 and sim.test.n_obs == 80


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([1, 2, 3]), st.integers(1, 6), st.integers(2, 30), st.integers(0, 2**32 - 1))
def test_split_invariants(setting, n, K, seed):
    cfg = SimConfig(setting, n, K, dgp="mu1" if setting == 3 else None, seed=seed)
    sim = generate(cfg)
    train, test = set(sim.train.group_labels()), set(sim.test.group_labels())
    assert not train & test
    assert train | test == {str(k) for k in range(K)}
    J = cfg.n_train_groups
    assert J == min(math.ceil(0.8 * K), K - 1)
    assert sim.train.n_obs == n * J and sim.test.n_obs == n * (K - J)
    assert sim.train.p == cfg.p


def test_same_seed_is_bit_exact():
    for setting, dgp in ((1, None), (2, None), (3, "mu3")):
        a = generate(SimConfig(setting, 5, 12, dgp=dgp, seed=4))
        b = generate(SimConfig(setting, 5, 12, dgp=dgp, seed=4))
        for part in ("train", "test"):
            assert getattr(a, part).X.tobytes() == getattr(b, part).X.tobytes()
            assert getattr(a, part).y.tobytes() == getattr(b, part).y.tobytes()
            assert list(getattr(a, part).groups) == list(getattr(b, part).groups)


def test_setting3_stored_mean_matches_basis_oracle():
    sim = generate(SimConfig(3, 20, 10, dgp="mu1", seed=2))
    k = np.array([int(g) for g in sim.train.groups])
    even = k % 2 == 0
    assert even.any() and (~even).any()
    f0, f1, f2, f3 = basis_functions(sim.train.X)
    np.testing.assert_array_equal(sim.train_mu[even], (f0 + f1 + f2 - 0.75)[even])
    np.testing.assert_array_equal(sim.train_mu[~even], f3[~even])


def test_setting3_noise_features_are_located_in_0_2():
    sim = generate(SimConfig(3, 2000, 4, dgp="mu2", seed=3))
    X = np.concatenate([sim.train.X, sim.test.X])
    means = X.mean(axis=0)
    assert np.all((means > -0.2) & (means < 2.2))
    assert X.shape[1] == 10


def test_setting1_group_means_follow_location_matrix():
    # with U = V = I each group's features scatter with unit variance
    sim = generate(SimConfig(1, 4000, 3, sigma_alpha=1.0, seed=5))
    for g in sim.train.group_labels():
        Xg = sim.train.group(g).X
        np.testing.assert_allclose(Xg.var(axis=0), 1.0, atol=0.1)
        assert np.all(np.abs(Xg.mean(axis=0)) < 1.1)


def test_setting1_residuals_recover_random_effects():
    sim = generate(SimConfig(1, 3000, 4, sigma_alpha=4.0, seed=6))
    data, mu = sim.train, sim.train_mu
    for g in data.group_labels():
        rows = data.groups == g
        D = np.column_stack([np.ones(rows.sum()), data.X[rows]])
        alpha = np.linalg.lstsq(D, mu[rows] - friedman(data.X[rows]), rcond=None)[0]
        est, res, *_ = np.linalg.lstsq(D, data.y[rows] - friedman(data.X[rows]), rcond=None)
        se = np.sqrt(res[0] / (len(D) - D.shape[1]) * np.diag(np.linalg.inv(D.T @ D)))
        assert np.all(np.abs(est - alpha) < 4 * se)
        assert np.max(np.abs(alpha)) > 0.5


def test_setting2_row_covariance_draws_are_spd():
    for seed in range(20):
        sim = generate(SimConfig(2, 3, 15, seed=seed))
        assert is_spd(sim.U)
        assert not np.allclose(sim.U, np.eye(15))


def test_explicit_source_overrides_config_seed():
    cfg = SimConfig(1, 5, 10, seed=0)
    a = generate(cfg, RandomSource(99))
    b = generate(SimConfig(1, 5, 10, seed=99))
    assert a.train.y.tobytes() == b.train.y.tobytes()
