"""Clustered synthetic data for the three simulation settings.

Draw order for a given seed is fixed: location matrix, row covariance
(setting 2), feature draws, random effects (settings 1-2), outcome noise,
group permutation. Group ``k`` is labelled ``str(k)``; the setting-3
indicator patterns use this 0-based ``k``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .data import Dataset
from .numerics import MatrixNormalParams, RandomSource, sample_inverse_wishart, sample_matrix_normal

SETTINGS = (1, 2, 3)
DGPS = ("mu1", "mu2", "mu3")
N_NOISE_FEATURES = 5


@dataclass(frozen=True)
class SimConfig:
    setting: int
    n: int
    K: int
    sigma_alpha: float = 1.0
    dgp: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        if self.setting not in SETTINGS:
            raise ValueError(f"setting must be one of {SETTINGS}, got {self.setting}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if self.setting == 3:
            if self.dgp not in DGPS:
                raise ValueError(f"setting 3 requires dgp in {DGPS}, got {self.dgp!r}")
        elif self.dgp is not None:
            raise ValueError("dgp is only used by setting 3")
        if self.sigma_alpha < 0:
            raise ValueError("sigma_alpha must be >= 0")

    @property
    def p(self) -> int:
        return 5 if self.setting in (1, 2) else 5 + N_NOISE_FEATURES

    @property
    def n_train_groups(self) -> int:
        """``ceil(0.8 K)``, capped so at least one group is held out."""
        return min(-(-4 * self.K // 5), self.K - 1)

    def to_dict(self):
        return asdict(self)


@dataclass
class SimDataset:
    train: Dataset
    test: Dataset
    train_mu: np.ndarray
    test_mu: np.ndarray
    config: SimConfig
    U: np.ndarray = None


def friedman(x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 5:
        raise ValueError("friedman needs at least 5 features")
    x1, x2, x3, x4, x5 = (x[..., i] for i in range(5))
    return np.sin(np.pi * x1 * x2) + 2 * (x3 - 0.5) ** 2 + x4 + 0.5 * x5


def basis_functions(x):
    """The four setting-3 basis functions ``(f0, f1, f2, f3)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 3:
        raise ValueError("basis functions need at least 3 features")
    x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
    high = (x2 > 0.5).astype(float)
    f0 = 10 * np.sin(np.pi * x1 * x2)
    f1 = 10 * (x3 - 0.5) ** 2
    f2 = 10 * (x1 - 0.5) ** 2 + 10 * x2 + 5 * x3
    f3 = 6 * x1 + (4 - 10 * high) * np.sin(np.pi * x1) - 4 * high + 15
    return f0, f1, f2, f3


def setting3_mean(x, k, dgp: str):
    """Group-dependent mean for setting 3; ``k`` is the 0-based group index."""
    f0, f1, f2, f3 = basis_functions(x)
    k = np.asarray(k)
    even = (k % 2 == 0).astype(float)
    r = k % 3
    if dgp == "mu1":
        return (f0 + f1 + f2 - 0.75) * even + f3 * (1 - even)
    if dgp == "mu2":
        return f0 * (r == 0) + f1 * (r == 1) + f2 * (r == 2) + f3 * even
    if dgp == "mu3":
        return f0 * (r != 2) + f1 * (r != 0) + f2 * (r != 1) + f3 * even
    raise ValueError(f"unknown dgp {dgp!r}")


def generate(cfg: SimConfig, rng: RandomSource = None) -> SimDataset:
    """Draw one simulated dataset and split its groups 80/20 into train/test."""
    rng = rng if rng is not None else RandomSource(cfg.seed)
    K, p, n = cfg.K, cfg.p, cfg.n
    if cfg.setting == 3:
        M = rng.gen.uniform(0.0, 2.0, size=(K, p))
    else:
        M = rng.gen.uniform(-1.0, 1.0, size=(K, p))
    U = np.eye(K)
    if cfg.setting == 2:
        U = sample_inverse_wishart(np.eye(K), K + 1, rng)

    # draw s, row k -> observation s of group k
    draws = sample_matrix_normal(MatrixNormalParams(M, U, np.eye(p)), rng, size=n)
    X = draws.transpose(1, 0, 2).reshape(K * n, p)
    k_of_row = np.repeat(np.arange(K), n)

    if cfg.setting == 3:
        mu = setting3_mean(X, k_of_row, cfg.dgp)
    else:
        # sigma_alpha scales the column factor, so sigma_alpha = 0 is allowed
        alpha = cfg.sigma_alpha * sample_matrix_normal(
            MatrixNormalParams(np.zeros((K, p + 1)), U, np.eye(p + 1)), rng)
        a = alpha[k_of_row]
        mu = friedman(X) + a[:, 0] + np.sum(a[:, 1:] * X, axis=1)

    y = mu + rng.gen.standard_normal(K * n)

    perm = rng.gen.permutation(K)
    J = cfg.n_train_groups
    train_mask = np.isin(k_of_row, perm[:J])
    labels = np.array([str(k) for k in k_of_row], dtype=object)
    names = [f"x{j + 1}" for j in range(p)]

    def part(mask):
        return Dataset(X[mask], y[mask], labels[mask], names)

    return SimDataset(part(train_mask), part(~train_mask), mu[train_mask], mu[~train_mask], cfg, U)
