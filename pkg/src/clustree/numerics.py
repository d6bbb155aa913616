"""Seeded random sources and the small linear-algebra kernels the samplers need.

All randomness in the package flows through :class:`RandomSource`, a thin
wrapper around numpy's PCG64 bit generator. Child sources for parallel
workers are derived with :class:`numpy.random.SeedSequence` using the parent
seed as entropy and the worker index as spawn key, so a child stream depends
only on ``(parent seed, index)`` and never on scheduling order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SYMMETRY_TOL = 1e-10


class CholeskyError(np.linalg.LinAlgError):
    """Raised when a matrix is not (numerically) positive definite."""

    def __init__(self, pivot: int, value: float):
        self.pivot = pivot
        self.value = value
        super().__init__(
            f"matrix is not positive definite: pivot {pivot} "
            f"(leading minor of order {pivot + 1}) has value {value:.6g}"
        )


class RandomSource:
    """Seeded PCG64 stream.

    Parameters
    ----------
    seed : int
        Unsigned 64-bit seed.
    """

    def __init__(self, seed: int = 0):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self.gen = np.random.Generator(np.random.PCG64(seed))

    def child(self, index: int) -> "RandomSource":
        """Independent source for worker ``index``; a pure function of ``(seed, index)``."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(int(index),))
        return RandomSource(int(ss.generate_state(1, dtype=np.uint64)[0]))

    def next_seed(self) -> int:
        """Draw a fresh 64-bit seed from this stream."""
        return int(self.gen.integers(0, 2**63, dtype=np.int64))

    def __repr__(self):
        return f"RandomSource(seed={self.seed})"


def as_source(rng) -> RandomSource:
    if rng is None:
        return RandomSource(0)
    if isinstance(rng, RandomSource):
        return rng
    return RandomSource(int(rng))


def _symmetrized(A, name="matrix"):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    asym = np.max(np.abs(A - A.T)) if A.size else 0.0
    if asym > SYMMETRY_TOL:
        raise ValueError(f"{name} is not symmetric (max asymmetry {asym:.3g})")
    return 0.5 * (A + A.T)


def cholesky(A) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == A``.

    Inputs within ``1e-10`` of symmetric are symmetrized first. A
    non-positive pivot raises :class:`CholeskyError` carrying the 0-based
    pivot index.
    """
    A = _symmetrized(A)
    n = A.shape[0]
    L = np.zeros_like(A)
    for j in range(n):
        row = L[j, :j]
        d = A[j, j] - row @ row
        if not d > 0.0:
            raise CholeskyError(j, float(d))
        L[j, j] = np.sqrt(d)
        if j + 1 < n:
            L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ row) / L[j, j]
    return L


def is_spd(A) -> bool:
    try:
        cholesky(A)
    except (CholeskyError, ValueError):
        return False
    return True


@dataclass(frozen=True)
class MatrixNormalParams:
    """Location ``M`` (rows x cols), row covariance ``U``, column covariance ``V``."""

    M: np.ndarray
    U: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, dtype=float))
        U = _symmetrized(self.U, "U")
        V = _symmetrized(self.V, "V")
        if U.shape[0] != M.shape[0] or V.shape[0] != M.shape[1]:
            raise ValueError(
                f"shape mismatch: M {M.shape}, U {U.shape}, V {V.shape}"
            )
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "V", V)

    @property
    def shape(self):
        return self.M.shape


def sample_matrix_normal(params: MatrixNormalParams, rng: RandomSource, size=None):
    """Draw ``M + A Z B^T`` with ``A A^T = U``, ``B B^T = V`` and iid normal ``Z``.

    With ``size`` given, returns an array of shape ``(size, rows, cols)``.
    """
    A = cholesky(params.U)
    B = cholesky(params.V)
    rows, cols = params.shape
    shape = (rows, cols) if size is None else (int(size), rows, cols)
    Z = rng.gen.standard_normal(shape)
    return params.M + A @ Z @ B.T


def _bartlett_factor(L, dof, rng, size):
    # returns (L @ A) with A the Bartlett lower-triangular factor
    k = L.shape[0]
    batch = 1 if size is None else int(size)
    A = np.zeros((batch, k, k))
    diag = np.sqrt(rng.gen.chisquare(dof - np.arange(k), size=(batch, k)))
    A[:, np.arange(k), np.arange(k)] = diag
    il = np.tril_indices(k, -1)
    A[:, il[0], il[1]] = rng.gen.standard_normal((batch, len(il[0])))
    LA = L @ A
    return LA[0] if size is None else LA


def _check_dof(k, dof):
    if not dof > k - 1:
        raise ValueError(f"degrees of freedom must exceed {k - 1}, got {dof}")


def sample_wishart(scale, dof: float, rng: RandomSource, size=None):
    """Wishart(scale, dof) draw via the Bartlett decomposition."""
    L = cholesky(scale)
    _check_dof(L.shape[0], dof)
    LA = _bartlett_factor(L, dof, rng, size)
    W = LA @ np.swapaxes(LA, -1, -2)
    return 0.5 * (W + np.swapaxes(W, -1, -2))


def sample_inverse_wishart(scale, dof: float, rng: RandomSource, size=None):
    """Inverse-Wishart(scale, dof): the inverse of a Wishart(scale^-1, dof) draw.

    The result is explicitly symmetrized so every draw is exactly symmetric.
    """
    scale = _symmetrized(scale, "scale")
    _check_dof(scale.shape[0], dof)
    L = cholesky(np.linalg.inv(scale))
    LA = _bartlett_factor(L, dof, rng, size)
    # W^-1 = (LA)^-T (LA)^-1
    inv_LA = np.linalg.inv(LA)
    S = np.swapaxes(inv_LA, -1, -2) @ inv_LA
    return 0.5 * (S + np.swapaxes(S, -1, -2))
