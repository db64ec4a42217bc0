"""Synthetic worlds with known low-dimensional signal structure.

Two generative families are supported.  In the reconstruction world a point is
x = sum_i alpha_i u_i over a random orthonormal basis, with per-direction
Gaussian coefficients whose variances have a sharp gap after the first r
directions, and the label is a quadratic form of the top-r coefficients.  In
the masked world the first input coordinate is itself the sum of squares of
the top-r coefficients of the remaining coordinates, so hiding it poses a
self-supervised prediction task with a known exact solution.

Variances are variances throughout, never standard deviations.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .numkit import RngStream, random_orthonormal_basis

KIND_AUTO_ENCODER = "auto_encoder"
KIND_MASKED = "masked"

SIGNAL_VAR_RANGE = (1.0, 10.0)
TAIL_VAR_RANGE = (0.0, 0.1)
MEAN_RANGE = (0, 20)  # integer means, stored as floats
DEFAULT_NOISE_VARIANCE = 1e-2


@dataclass(frozen=True)
class SpectrumSpec:
    """Per-direction coefficient means and variances with a gap at ``gap_index``."""

    means: np.ndarray
    variances: np.ndarray
    gap_index: int

    def __post_init__(self):
        v = self.variances
        r = self.gap_index
        if len(self.means) != len(v):
            raise ValueError("means and variances must have equal length")
        if not np.all(np.diff(v) < 0):
            raise ValueError("variances must be strictly decreasing")
        lo, hi = SIGNAL_VAR_RANGE
        if not (np.all(v[:r] >= lo) and np.all(v[:r] <= hi)):
            raise ValueError("signal variances out of range")
        tlo, thi = TAIL_VAR_RANGE
        if not (np.all(v[r:] >= tlo) and np.all(v[r:] <= thi)):
            raise ValueError("tail variances out of range")


@dataclass(frozen=True)
class DataSpec:
    """A generative world: basis, spectrum, ground-truth predictor weights.

    For the reconstruction kind the basis is d x d over x itself; for the
    masked kind it is (d-1) x (d-1) over the unmasked coordinates x_{2:d}.
    """

    kind: str
    d: int
    r: int
    basis: np.ndarray
    spectrum: SpectrumSpec
    a_star: np.ndarray
    noise_variance: float = DEFAULT_NOISE_VARIANCE
    zero_mean: bool = False

    def __post_init__(self):
        if self.kind not in (KIND_AUTO_ENCODER, KIND_MASKED):
            raise ValueError(f"unknown world kind {self.kind!r}")
        if np.linalg.norm(self.a_star) > 1.0 + 1e-9:
            raise ValueError("ground-truth weights must have l2 norm <= 1")
        n_coef = self.d if self.kind == KIND_AUTO_ENCODER else self.d - 1
        if self.basis.shape != (n_coef, n_coef):
            raise ValueError("basis shape inconsistent with world kind")
        if len(self.spectrum.variances) != n_coef:
            raise ValueError("spectrum length inconsistent with world kind")

    @property
    def n_coefficients(self) -> int:
        return self.d if self.kind == KIND_AUTO_ENCODER else self.d - 1


@dataclass(frozen=True)
class Dataset:
    """Sampled inputs (n, d) with optional labels (n,)."""

    inputs: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        if not np.all(np.isfinite(self.inputs)):
            raise ValueError("inputs must be finite")
        if self.labels is not None:
            if len(self.labels) != len(self.inputs):
                raise ValueError("labels must match inputs in count")
            if not np.all(np.isfinite(self.labels)):
                raise ValueError("labels must be finite")

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def labeled(self) -> bool:
        return self.labels is not None

    def prefix(self, n: int) -> "Dataset":
        """First n samples (used by sweeps to nest labeled-set sizes)."""
        labels = None if self.labels is None else self.labels[:n]
        return Dataset(self.inputs[:n], labels)


def _draw_a_star(rng: RngStream, r: int) -> np.ndarray:
    while True:
        a = rng.normal(size=r)
        norm = np.linalg.norm(a)
        if norm > 0:
            return a / norm


def _draw_world(rng: RngStream, n_coef: int, r: int):
    """Signal block first (r variances, ground-truth weights, r means), then
    the tail and basis.  With a fixed stream this keeps the signal identical
    across ambient dimensions, so sweeps over d pin the signal world per run.
    """
    while True:
        signal_var = np.sort(rng.uniform(*SIGNAL_VAR_RANGE, size=r))[::-1]
        if np.all(np.diff(signal_var) < 0):  # ties have probability zero
            break
    a_star = _draw_a_star(rng, r)
    signal_mean = rng.integers(MEAN_RANGE[0], MEAN_RANGE[1] + 1, size=r).astype(float)
    while True:
        tail_var = np.sort(rng.uniform(*TAIL_VAR_RANGE, size=n_coef - r))[::-1]
        variances = np.concatenate([signal_var, tail_var])
        if np.all(np.diff(variances) < 0):
            break
    tail_mean = rng.integers(MEAN_RANGE[0], MEAN_RANGE[1] + 1,
                             size=n_coef - r).astype(float)
    means = np.concatenate([signal_mean, tail_mean])
    basis = random_orthonormal_basis(rng, n_coef)
    return SpectrumSpec(means=means, variances=variances, gap_index=r), a_star, basis


def gen_auto_encoder_spec(
    rng: RngStream,
    d: int,
    r: int,
    zero_mean: bool = False,
    noise_variance: float = DEFAULT_NOISE_VARIANCE,
) -> DataSpec:
    """Fresh reconstruction world with a d x d orthonormal basis."""
    if not 1 <= r < d / 2:
        raise ValueError(f"need 1 <= r < d/2, got r={r}, d={d}")
    spectrum, a_star, basis = _draw_world(rng, d, r)
    return DataSpec(KIND_AUTO_ENCODER, d, r, basis, spectrum, a_star,
                    noise_variance, zero_mean)


def gen_masked_spec(
    rng: RngStream,
    d: int,
    r: int,
    zero_mean: bool = False,
    noise_variance: float = DEFAULT_NOISE_VARIANCE,
) -> DataSpec:
    """Fresh masked world with a (d-1) x (d-1) basis over x_{2:d}."""
    if not 1 <= r < (d - 1) / 2:
        raise ValueError(f"need 1 <= r < (d-1)/2, got r={r}, d={d}")
    spectrum, a_star, basis = _draw_world(rng, d - 1, r)
    return DataSpec(KIND_MASKED, d, r, basis, spectrum, a_star,
                    noise_variance, zero_mean)


def _effective_means(spec: DataSpec) -> np.ndarray:
    if spec.zero_mean:
        return np.zeros_like(spec.spectrum.means)
    return spec.spectrum.means


def _draw_coefficients(spec: DataSpec, n: int, rng: RngStream) -> np.ndarray:
    stds = np.sqrt(spec.spectrum.variances)
    means = _effective_means(spec)
    k = spec.n_coefficients
    return rng.normal(np.broadcast_to(means, (n, k)), stds, size=(n, k))


def inputs_from_coefficients(spec: DataSpec, alpha: np.ndarray) -> np.ndarray:
    """Assemble inputs from given coefficient rows (deterministic)."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    if spec.kind == KIND_AUTO_ENCODER:
        return alpha @ spec.basis.T
    x_rest = alpha @ spec.basis.T
    x1 = np.sum(alpha[:, : spec.r] ** 2, axis=1)
    return np.concatenate([x1[:, None], x_rest], axis=1)


def labels_from_coefficients(spec: DataSpec, alpha: np.ndarray, noise=0.0) -> np.ndarray:
    """Labels y = sum_i a*_i alpha_i^2 + noise from given coefficient rows."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    return (alpha[:, : spec.r] ** 2) @ spec.a_star + noise


def _sample(spec: DataSpec, n: int, rng: RngStream, labeled: bool) -> Dataset:
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    alpha = _draw_coefficients(spec, n, rng)
    inputs = inputs_from_coefficients(spec, alpha)
    if not labeled:
        return Dataset(inputs)
    noise = rng.normal(0.0, np.sqrt(spec.noise_variance), size=n)
    return Dataset(inputs, labels_from_coefficients(spec, alpha, noise))


def sample_auto_encoder_data(spec: DataSpec, n: int, rng: RngStream, labeled: bool) -> Dataset:
    if spec.kind != KIND_AUTO_ENCODER:
        raise ValueError(f"spec kind is {spec.kind!r}, expected {KIND_AUTO_ENCODER!r}")
    return _sample(spec, n, rng, labeled)


def sample_masked_data(spec: DataSpec, n: int, rng: RngStream, labeled: bool) -> Dataset:
    if spec.kind != KIND_MASKED:
        raise ValueError(f"spec kind is {spec.kind!r}, expected {KIND_MASKED!r}")
    return _sample(spec, n, rng, labeled)


def sample_data(spec: DataSpec, n: int, rng: RngStream, labeled: bool) -> Dataset:
    """Kind-dispatching sampler."""
    if spec.kind == KIND_AUTO_ENCODER:
        return sample_auto_encoder_data(spec, n, rng, labeled)
    return sample_masked_data(spec, n, rng, labeled)


def mask_first_coordinate(x: np.ndarray) -> np.ndarray:
    """Copy of x with coordinate 0 zeroed.  Accepts a vector or a batch."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] < 2:
        raise ValueError("need at least 2 coordinates to mask")
    out = x.copy()
    out[..., 0] = 0.0
    return out


def analytic_trailing_variance(spec: DataSpec, k: int) -> float:
    """Exact expected squared residual of the best rank-k projection.

    Only valid for zero-mean worlds, where the coefficient variances are the
    eigenvalues of the second-moment matrix and the optimum is the sum of the
    variances past the first k.
    """
    if not spec.zero_mean:
        raise ValueError("analytic trailing variance requires a zero-mean world")
    n_coef = spec.n_coefficients
    if not 0 <= k <= n_coef:
        raise ValueError(f"need 0 <= k <= {n_coef}, got {k}")
    return float(np.sum(spec.spectrum.variances[k:]))


def atomic_write_text(path: str, text: str) -> None:
    """Write text to path via a temp file + rename in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_dataset_csv(dataset: Dataset, path: str) -> None:
    """CSV with header x_0..x_{d-1}[,y]; 17 significant digits per value."""
    d = dataset.inputs.shape[1]
    cols = [f"x_{i}" for i in range(d)]
    if dataset.labeled:
        cols.append("y")
    lines = [",".join(cols)]
    for i in range(len(dataset)):
        row = [f"{v:.17g}" for v in dataset.inputs[i]]
        if dataset.labeled:
            row.append(f"{dataset.labels[i]:.17g}")
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_dataset_csv(path: str) -> Dataset:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        labeled = header[-1] == "y"
        d = len(header) - 1 if labeled else len(header)
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array([[float(v) for v in row] for row in rows])
    if labeled:
        return Dataset(data[:, :d], data[:, d])
    return Dataset(data)
