"""Functional-space analysis: prediction vectors, dispersion, 2D embeddings.

A trained model is summarized by the vector of its predictions over a fixed
test set.  Dispersion (mean pairwise distance between such vectors) is the
quantitative measure of how compact the reached function space is; the 2D
embeddings (exact t-SNE, or PCA as a deterministic fallback) are emitted for
visual inspection only.

The t-SNE here is the exact O(N^2) algorithm: Gaussian input affinities with
a per-point binary search matching the target perplexity, Student-t output
affinities, and gradient descent on the KL divergence with early exaggeration,
adaptive gains, and a momentum switch.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Union

import numpy as np

from .models import Predictor, ReprMap, predict_batch
from .numkit import RngStream, symmetric_eigen

TAG_END_TO_END = "end_to_end"
TAG_FUNC_REG = "func_reg"

_EPS = 1e-12


@dataclass
class FunctionalVector:
    """Concatenated test-set predictions of one trained model."""

    values: np.ndarray
    tag: str
    run_index: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(self.values)):
            raise ValueError("functional vector must be finite")


@dataclass(frozen=True)
class EmbedConfig:
    method: str = "tsne"  # "tsne" | "pca"
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("tsne", "pca"):
            raise ValueError(f"unknown embedding method {self.method!r}")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.perplexity <= 0:
            raise ValueError("perplexity must be > 0")


def functional_vector(h: ReprMap, f: Predictor, test_inputs: np.ndarray,
                      tag: str = TAG_END_TO_END, run_index: int = 0) -> FunctionalVector:
    """Predictions over the test inputs, in test-set order."""
    return FunctionalVector(predict_batch(h, f, test_inputs), tag, run_index)


def _as_matrix(vectors: Union[np.ndarray, Sequence]) -> np.ndarray:
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        return np.asarray(vectors, dtype=float)
    rows = [v.values if isinstance(v, FunctionalVector) else np.asarray(v, dtype=float)
            for v in vectors]
    lengths = {len(r) for r in rows}
    if len(lengths) > 1:
        raise ValueError("functional vectors must share one length")
    return np.vstack(rows)


def dispersion(vectors) -> float:
    """Mean pairwise Euclidean distance over all unordered pairs."""
    x = _as_matrix(vectors)
    n = len(x)
    if n < 2:
        raise ValueError("dispersion needs at least 2 vectors")
    sq = np.sum(x * x, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0)
    iu = np.triu_indices(n, k=1)
    return float(np.mean(np.sqrt(d2[iu])))


# ---------------------------------------------------------------------------
# exact t-SNE

def _pairwise_sq_distances(x: np.ndarray) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def _hbeta(d_row: np.ndarray, beta: float):
    """Shannon entropy and probabilities of a Gaussian row at precision beta."""
    p = np.exp(-d_row * beta)
    sum_p = max(p.sum(), _EPS)
    h = np.log(sum_p) + beta * float(d_row @ p) / sum_p
    return h, p / sum_p

def input_affinities(vectors, perplexity: float, tol: float = 1e-8,
                     max_tries: int = 64) -> np.ndarray:
    """Row-stochastic conditional affinities with per-row precision search."""
    x = _as_matrix(vectors)
    n = len(x)
    d2 = _pairwise_sq_distances(x)
    target = np.log(perplexity)
    p_cond = np.zeros((n, n))
    for i in range(n):
        others = np.concatenate([np.arange(i), np.arange(i + 1, n)])
        d_row = d2[i, others]
        beta, beta_min, beta_max = 1.0, -np.inf, np.inf
        h, p = _hbeta(d_row, beta)
        tries = 0
        while abs(h - target) > tol and tries < max_tries:
            if h > target:
                beta_min = beta
                beta = beta * 2.0 if np.isinf(beta_max) else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if np.isinf(beta_min) else (beta + beta_min) / 2.0
            h, p = _hbeta(d_row, beta)
            tries += 1
        p_cond[i, others] = p
    return p_cond


def tsne_embed(vectors, config: EmbedConfig) -> np.ndarray:
    """Exact t-SNE to 2D; deterministic under the config seed."""
    x = _as_matrix(vectors)
    n = len(x)
    if n < 4:
        raise ValueError("t-SNE needs at least 4 vectors")
    if config.perplexity >= (n - 1) / 3.0:
        raise ValueError(
            f"perplexity {config.perplexity} too large for {n} vectors "
            f"(needs < (N-1)/3)")

    p_cond = input_affinities(x, config.perplexity)
    p = (p_cond + p_cond.T) / (2.0 * n)
    p = np.maximum(p, _EPS)

    rng = RngStream(config.seed)
    y = rng.normal(0.0, 1e-2, size=(n, 2))
    dy = np.zeros_like(y)
    gains = np.ones_like(y)

    exaggeration_until = 250
    p_run = p * 12.0  # early exaggeration
    for it in range(config.iterations):
        num = 1.0 / (1.0 + _pairwise_sq_distances(y))
        np.fill_diagonal(num, 0.0)
        q = np.maximum(num / num.sum(), _EPS)
        pq = p_run - q
        l = pq * num
        grad = 4.0 * ((np.diag(l.sum(axis=1)) - l) @ y)

        momentum = 0.5 if it < exaggeration_until else 0.8
        same_sign = np.sign(grad) == np.sign(dy)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        dy = momentum * dy - config.learning_rate * (gains * grad)
        y = y + dy
        y = y - y.mean(axis=0)
        if it + 1 == exaggeration_until:
            p_run = p
    return y


def pca_embed(vectors) -> np.ndarray:
    """Top-2 principal components of the centered vectors via the Gram matrix."""
    x = _as_matrix(vectors)
    xc = x - x.mean(axis=0)
    gram = xc @ xc.T
    w, v = symmetric_eigen(gram)
    w = np.maximum(w[:2], 0.0)
    # eigenvalues at relative float-noise level are exact zeros (rank deficit)
    w[w < w[0] * 1e-12] = 0.0
    return v[:, :2] * np.sqrt(w)[None, :]


def embed(vectors, config: EmbedConfig) -> np.ndarray:
    if config.method == "pca":
        return pca_embed(vectors)
    return tsne_embed(vectors, config)
