"""Deterministic numeric kernel: seeded random streams and dense linear algebra.

All randomness in the project flows through :class:`RngStream`, a thin wrapper
around numpy's Philox counter-based bit generator.  Philox is a fixed,
documented algorithm whose output depends only on (key, counter), so equal
seeds give bitwise-equal draw sequences across runs and platforms.  Matrices
and vectors are plain float64 numpy arrays.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "RngStream",
    "gaussian",
    "random_orthonormal_basis",
    "symmetric_eigen",
    "procrustes_min_distance_sq",
]

_UINT64 = np.uint64
_MASK64 = (1 << 64) - 1


class RngStream:
    """Seeded random stream with derivable substreams.

    A stream is identified by ``(seed, stream_id)``, the two words of the
    Philox key.  ``derive(offset)`` yields the stream for seed+offset and is
    the documented way to fan out per-run streams (seed = master + run index).
    ``substream(k)`` keeps the seed and varies the second key word; it is used
    internally to give independent streams to e.g. data sampling, parameter
    init, and batch shuffling within one run.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        key = np.array([self.seed & _MASK64, self.stream_id & _MASK64], dtype=_UINT64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def derive(self, offset: int) -> "RngStream":
        """Stream for ``seed + offset`` (per-run fan-out)."""
        return RngStream(self.seed + int(offset), self.stream_id)

    def substream(self, k: int) -> "RngStream":
        """Independent stream for the same seed (internal component split)."""
        return RngStream(self.seed, k)

    # thin draw layer; everything consumes the generator in a fixed order

    def normal(self, mean=0.0, std=1.0, size=None):
        return self._gen.normal(mean, std, size=size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size=size)

    def integers(self, low, high, size=None):
        return self._gen.integers(low, high, size=size)

    def permutation(self, n: int):
        return self._gen.permutation(n)

    def choice(self, n: int, size: int, p=None):
        return self._gen.choice(n, size=size, p=p)


def gaussian(rng: RngStream, mean: float, variance: float) -> float:
    """One draw from N(mean, variance).  ``variance`` is a variance, not a std."""
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    return float(rng.normal(mean, np.sqrt(variance)))


def gaussian_vector(rng: RngStream, means, variances, size=None) -> np.ndarray:
    """Vectorized draws from per-coordinate N(mean_i, variance_i).

    With ``size=n`` returns an (n, d) array whose first k rows are bitwise
    equal to a ``size=k`` draw from a fresh stream with the same key.
    """
    variances = np.asarray(variances, dtype=float)
    if np.any(variances < 0):
        raise ValueError("variances must be >= 0")
    stds = np.sqrt(variances)
    if size is None:
        return rng.normal(means, stds)
    return rng.normal(np.broadcast_to(means, (size, len(stds))), stds, size=(size, len(stds)))


def random_orthonormal_basis(rng: RngStream, d: int) -> np.ndarray:
    """Random d x d orthonormal matrix: QR of a Gaussian matrix, sign-fixed.

    Column signs are fixed by the R diagonal so the result is a deterministic
    function of the stream state.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    g = rng.normal(size=(d, d))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def symmetric_eigen(m: np.ndarray, sym_tol: float = 1e-9):
    """Eigendecomposition of a symmetric matrix, eigenvalues sorted descending.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors in columns,
    ``m @ v[:, i] == w[i] * v[:, i]``.  Backed by LAPACK via numpy.linalg.eigh.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.T).max() > sym_tol * scale:
        raise ValueError("matrix is not symmetric within tolerance")
    w, v = np.linalg.eigh((m + m.T) / 2.0)
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def procrustes_min_distance_sq(a: np.ndarray, b: np.ndarray) -> float:
    """min over orthonormal O of ||O a - b||_F^2.

    Equals ||a||_F^2 + ||b||_F^2 - 2 * sum of singular values of b a^T
    (orthogonal Procrustes).  Nonnegative; zero iff b = O a for some
    orthonormal O.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    sv = np.linalg.svd(b @ a.T, compute_uv=False)
    val = float(np.sum(a * a) + np.sum(b * b) - 2.0 * sv.sum())
    return max(val, 0.0)
