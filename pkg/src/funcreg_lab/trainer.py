"""SGD-with-momentum training: pretrain/finetune pipelines and grid search.

Two pipelines are compared throughout the project.  End-to-end trains the
representation and the predictor jointly on labeled data from a random init.
The regularized pipeline first fits the representation on unlabeled data
(reconstruction or masked prediction, plus soft orthonormality penalties for
the reconstruction case), then warm-starts the joint labeled phase from it.

Determinism: all randomness comes from substreams of the config seed, and the
labeled-phase batch schedule uses the same substream in both pipelines, so a
comparison at equal seeds differs only in the initialization of h.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import models
from .models import Decoder, GradSet, LossSpec, Predictor, ReprMap
from .numkit import RngStream, symmetric_eigen
from .synthgen import Dataset, KIND_AUTO_ENCODER, KIND_MASKED

END_TO_END = "end_to_end"
FUNC_REG = "func_reg"

DEFAULT_LR_GRID = (1e-5, 1e-4, 1e-3, 1e-2, 1e-1)
DEFAULT_LAMBDA_GRID = (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)
DIVERGENCE_CAP = 1e6

# substream ids for the per-run seed
_SUB_INIT_W = 101
_SUB_PRETRAIN_SHUFFLE = 102
_SUB_FINETUNE_SHUFFLE = 103
_SUB_INIT_V = 104


@dataclass(frozen=True)
class TrainConfig:
    pipeline: str = FUNC_REG
    epochs_pretrain: int = 200
    epochs_finetune: int = 200
    batch_size: int = 64
    lr_grid: Tuple[float, ...] = DEFAULT_LR_GRID
    lambda_grid: Tuple[float, ...] = DEFAULT_LAMBDA_GRID
    momentum: float = 0.9
    seed: int = 0
    tau: Optional[float] = None

    def __post_init__(self):
        if self.pipeline not in (END_TO_END, FUNC_REG):
            raise ValueError(f"unknown pipeline {self.pipeline!r}")
        if not self.lr_grid or not self.lambda_grid:
            raise ValueError("hyperparameter grids must be nonempty")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if min(self.epochs_pretrain, self.epochs_finetune, self.batch_size) < 1:
            raise ValueError("epochs and batch size must be >= 1")


@dataclass
class PretrainResult:
    h: Optional[ReprMap]
    g: Optional[Decoder]
    reg_loss: float
    chosen_lr: float
    chosen_lambdas: Tuple[float, float]
    trace: List[float]
    feasible: bool = True


@dataclass
class TrainResult:
    h: Optional[ReprMap]
    f: Optional[Predictor]
    train_loss: float
    test_loss: Optional[float]
    pretrain_reg_loss: Optional[float]
    chosen_lr: float
    chosen_lambdas: Optional[Tuple[float, float]]
    loss_trace: List[float] = field(default_factory=list)
    diverged: bool = False


def sgd_step(params: np.ndarray, grads: np.ndarray, velocity: np.ndarray,
             lr: float, momentum: float):
    """One heavy-ball step: v <- momentum v + g; p <- p - lr v."""
    if lr <= 0:
        raise ValueError(f"learning rate must be > 0, got {lr}")
    if not 0.0 <= momentum < 1.0:
        raise ValueError("momentum must lie in [0, 1)")
    if params.shape != grads.shape or params.shape != velocity.shape:
        raise ValueError("params, grads and velocity shapes must match")
    velocity = momentum * velocity + grads
    return params - lr * velocity, velocity


def project_rows_to_unit_ball(w: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(w, axis=1, keepdims=True)
    scale = np.where(norms > 1.0, norms, 1.0)
    return w / scale


def project_to_unit_ball(a: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(a)
    return a / norm if norm > 1.0 else a


def grid_search(grid: Iterable, evaluate: Callable, lower_is_better: bool = True):
    """Exhaustive search; ties break toward the smaller grid entry.

    Returns ``(best_entry, best_score, scores)`` with ``scores`` a dict over
    all entries.  Entries must be orderable (floats or tuples of floats).
    """
    entries = sorted(grid)
    if not entries:
        raise ValueError("grid must be nonempty")
    scores = {}
    best_entry = None
    best_score = None
    for entry in entries:
        score = evaluate(entry)
        scores[entry] = score
        better = (
            best_score is None
            or (lower_is_better and score < best_score)
            or (not lower_is_better and score > best_score)
        )
        if better:
            best_entry, best_score = entry, score
    return best_entry, best_score, scores


def _init_w(d: int, r: int, rng: RngStream) -> np.ndarray:
    w = rng.normal(0.0, 1.0 / np.sqrt(d), size=(r, d))
    return project_rows_to_unit_ball(w)


def _init_v(d: int, r: int, rng: RngStream) -> np.ndarray:
    return rng.normal(0.0, 1.0 / np.sqrt(r), size=(d, r))


def _epoch_batches(n: int, batch_size: int, shuffle_rng: RngStream):
    perm = shuffle_rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start : start + batch_size]


def _run_sgd(
    params: Dict[str, np.ndarray],
    data: Dataset,
    epochs: int,
    batch_size: int,
    lr: float,
    momentum: float,
    shuffle_rng: RngStream,
    batch_step: Callable[[Dict[str, np.ndarray], Dataset], Tuple[float, Dict[str, np.ndarray]]],
    project: Callable[[Dict[str, np.ndarray]], None],
):
    """Generic minibatch loop.  Returns (params, per-epoch mean losses, diverged)."""
    velocity = {k: np.zeros_like(v) for k, v in params.items()}
    trace: List[float] = []
    n = len(data)
    for _ in range(epochs):
        batch_losses = []
        for idx in _epoch_batches(n, batch_size, shuffle_rng):
            batch = Dataset(data.inputs[idx],
                            None if data.labels is None else data.labels[idx])
            loss, grads = batch_step(params, batch)
            batch_losses.append(loss)
            for key, grad in grads.items():
                params[key], velocity[key] = sgd_step(params[key], grad, velocity[key],
                                                      lr, momentum)
            project(params)
        epoch_loss = float(np.mean(batch_losses))
        trace.append(epoch_loss)
        if not np.isfinite(epoch_loss) or epoch_loss > DIVERGENCE_CAP:
            return params, trace, True
    return params, trace, False


# ---------------------------------------------------------------------------
# unlabeled pretraining

def canonicalize_representation(h: ReprMap, unlabeled: Dataset,
                                kind: Optional[str] = None) -> ReprMap:
    """Canonical representative of the zero-reconstruction symmetry class.

    The unlabeled objectives are invariant under invertible (reconstruction)
    or orthonormal (masked) remixing of the learned rows, so SGD returns an
    arbitrary basis of the right row space.  This post-step, computed from
    unlabeled data only, makes the result unique and useful downstream:
    symmetric orthonormalization of the rows, then a rotation putting the
    representation's second moment over the unlabeled set on principal axes
    with decreasing variance.  When the row space matches a top eigenspace of
    the input second moment, the rows land on the eigen-directions themselves.
    """
    kind = kind or h.kind
    x = unlabeled.inputs
    w = h.W.copy()
    if kind == models.MASKED_QUAD:
        from .synthgen import mask_first_coordinate

        x = mask_first_coordinate(x)
        w[:, 0] = 0.0
    # rows -> orthonormal basis of the same row space, staying close to w
    gram = w @ w.T
    evals, q = np.linalg.eigh(gram)
    evals = np.maximum(evals, 1e-12)
    w = (q * (1.0 / np.sqrt(evals))) @ q.T @ w
    # rotate onto the principal axes of the representation over the data
    second_moment = (w @ x.T) @ (x @ w.T) / len(x)
    _, rot = symmetric_eigen(second_moment)
    w = rot.T @ w
    if kind == models.MASKED_QUAD:
        w[:, 0] = 0.0
    return ReprMap(kind, w)


def _pretrain_ae_once(unlabeled, config, d, r, lr, lam1, lam2):
    init_rng = RngStream(config.seed).substream(_SUB_INIT_W)
    w0 = _init_w(d, r, init_rng)
    v0 = _init_v(d, r, RngStream(config.seed).substream(_SUB_INIT_V))
    loss_spec = LossSpec(models.REG_AE, penalty_weight=1.0, ortho_weights=(lam1, lam2))

    def batch_step(params, batch):
        h = ReprMap(models.LINEAR_AE, params["W"])
        g = Decoder(params["V"])
        loss = models.total_objective(h, None, g, batch, loss_spec)
        gs = models.gradients(h, None, g, batch, loss_spec)
        return loss, {"W": gs.dW, "V": gs.dV}

    def project(params):
        params["W"] = project_rows_to_unit_ball(params["W"])

    shuffle = RngStream(config.seed).substream(_SUB_PRETRAIN_SHUFFLE)
    params, trace, diverged = _run_sgd(
        {"W": w0, "V": v0}, unlabeled, config.epochs_pretrain, config.batch_size,
        lr, config.momentum, shuffle, batch_step, project)
    if diverged:
        return (ReprMap(models.LINEAR_AE, params["W"]), Decoder(params["V"]),
                np.inf, trace, True)
    h = canonicalize_representation(ReprMap(models.LINEAR_AE, params["W"]), unlabeled)
    g = Decoder(h.W.T.copy())  # orthonormal rows: the transpose decodes exactly
    recon = models.reg_loss_ae(h, g, unlabeled)
    return h, g, recon, trace, diverged


def _pretrain_masked_once(unlabeled, config, d, r, lr):
    init_rng = RngStream(config.seed).substream(_SUB_INIT_W)
    w0 = _init_w(d, r, init_rng)
    w0[:, 0] = 0.0
    loss_spec = LossSpec(models.REG_MASKED, penalty_weight=1.0)

    def batch_step(params, batch):
        h = ReprMap(models.MASKED_QUAD, params["W"])
        loss = models.total_objective(h, None, None, batch, loss_spec)
        gs = models.gradients(h, None, None, batch, loss_spec)
        return loss, {"W": gs.dW}

    def project(params):
        w = project_rows_to_unit_ball(params["W"])
        w[:, 0] = 0.0
        params["W"] = w

    shuffle = RngStream(config.seed).substream(_SUB_PRETRAIN_SHUFFLE)
    params, trace, diverged = _run_sgd(
        {"W": w0}, unlabeled, config.epochs_pretrain, config.batch_size,
        lr, config.momentum, shuffle, batch_step, project)
    if diverged:
        return ReprMap(models.MASKED_QUAD, params["W"]), None, np.inf, trace, True
    h = canonicalize_representation(ReprMap(models.MASKED_QUAD, params["W"]), unlabeled)
    recon = models.reg_loss_masked(h, unlabeled)
    return h, None, recon, trace, diverged


def pretrain_unlabeled(spec_kind: str, unlabeled: Dataset, config: TrainConfig,
                       d: int, r: int) -> PretrainResult:
    """Fit h on unlabeled data; hyperparameters by least reconstruction error.

    Reconstruction worlds search (lr, lambda1, lambda2); masked worlds search
    lr only.  Diverged grid points are discarded before selection.  When
    ``config.tau`` is set, the result is marked infeasible (and carries no
    model) if the achieved regularization loss exceeds tau.
    """
    if unlabeled.labeled:
        raise ValueError("pretraining expects an unlabeled dataset")
    if len(unlabeled) == 0:
        raise ValueError("pretraining needs a nonempty dataset")

    runs = {}
    if spec_kind == KIND_AUTO_ENCODER:
        grid = [(lr, l1, l2) for lr in config.lr_grid
                for l1 in config.lambda_grid for l2 in config.lambda_grid]

        def evaluate(entry):
            lr, l1, l2 = entry
            out = _pretrain_ae_once(unlabeled, config, d, r, lr, l1, l2)
            runs[entry] = out
            return np.inf if out[4] else out[2]
    elif spec_kind == KIND_MASKED:
        grid = [(lr,) for lr in config.lr_grid]

        def evaluate(entry):
            out = _pretrain_masked_once(unlabeled, config, d, r, entry[0])
            runs[entry] = out
            return np.inf if out[4] else out[2]
    else:
        raise ValueError(f"unknown world kind {spec_kind!r}")

    best, best_score, _ = grid_search(grid, evaluate)
    if not np.isfinite(best_score):
        raise RuntimeError("all pretraining grid points diverged")
    h, g, recon, trace, _ = runs[best]
    lr = best[0]
    lambdas = (best[1], best[2]) if len(best) == 3 else (0.0, 0.0)
    if config.tau is not None and recon > config.tau:
        return PretrainResult(None, None, recon, lr, lambdas, trace, feasible=False)
    return PretrainResult(h, g, recon, lr, lambdas, trace, feasible=True)


# ---------------------------------------------------------------------------
# labeled training (joint h and f)

def _fit_labeled_once(w_init, kind, labeled, config, lr, keep_first_column_zero,
                      a_init=None):
    w0 = w_init.copy()
    a0 = np.zeros(w0.shape[0]) if a_init is None else np.asarray(a_init, float).copy()

    def batch_step(params, batch):
        h = ReprMap(kind, params["W"])
        f = Predictor(params["a"])
        loss = models.prediction_loss_batch(h, f, batch)
        dw, da = models._prediction_grads(h, f, batch)
        return loss, {"W": dw, "a": da}

    def project(params):
        w = project_rows_to_unit_ball(params["W"])
        if keep_first_column_zero:
            w[:, 0] = 0.0
        params["W"] = w
        params["a"] = project_to_unit_ball(params["a"])

    shuffle = RngStream(config.seed).substream(_SUB_FINETUNE_SHUFFLE)
    params, trace, diverged = _run_sgd(
        {"W": w0, "a": a0}, labeled, config.epochs_finetune, config.batch_size,
        lr, config.momentum, shuffle, batch_step, project)
    return params, trace, diverged


def _fit_labeled(w_init, kind, labeled, config, test, pretrain_reg_loss,
                 chosen_lambdas, keep_first_column_zero, a_init=None):
    if not labeled.labeled:
        raise ValueError("labeled training expects a labeled dataset")
    if len(labeled) == 0:
        raise ValueError("labeled training needs a nonempty dataset")

    # learning rate selected on a held-out fifth of the labeled set (training
    # loss alone rewards interpolating-but-wild rates); tiny sets fall back to
    # the training loss.  The validated model is the one returned.
    n = len(labeled)
    n_val = n // 5
    if n_val >= 1:
        fit_set = labeled.prefix(n - n_val)
        holdout = Dataset(labeled.inputs[n - n_val:], labeled.labels[n - n_val:])
    else:
        fit_set = labeled
        holdout = labeled

    runs = {}

    def evaluate(lr):
        params, trace, diverged = _fit_labeled_once(
            w_init, kind, fit_set, config, lr, keep_first_column_zero, a_init)
        if diverged:
            runs[lr] = (params, trace)
            return np.inf
        h = ReprMap(kind, params["W"])
        f = Predictor(params["a"])
        score = models.prediction_loss_batch(h, f, holdout)
        if not np.isfinite(score) or score > DIVERGENCE_CAP:
            return np.inf
        runs[lr] = (params, trace)
        return score

    best_lr, best_score, _ = grid_search(list(config.lr_grid), evaluate)
    if not np.isfinite(best_score):
        return TrainResult(None, None, float("inf"), None, pretrain_reg_loss,
                           best_lr, chosen_lambdas, [], diverged=True)
    params, trace = runs[best_lr]
    h = ReprMap(kind, params["W"])
    f = Predictor(params["a"])
    final = models.prediction_loss_batch(h, f, labeled)
    test_loss = None
    if test is not None:
        test_loss = models.prediction_loss_batch(h, f, test)
    return TrainResult(h, f, final, test_loss, pretrain_reg_loss,
                       best_lr, chosen_lambdas, trace)


def finetune_labeled(h_init: ReprMap, labeled: Dataset, config: TrainConfig,
                     test: Optional[Dataset] = None,
                     pretrain_reg_loss: Optional[float] = None,
                     chosen_lambdas: Optional[Tuple[float, float]] = None,
                     a_init: Optional[np.ndarray] = None) -> TrainResult:
    """Jointly train (h, f) on labeled data, warm-started from ``h_init``."""
    keep_zero = h_init.kind == models.MASKED_QUAD
    return _fit_labeled(h_init.W, h_init.kind, labeled, config, test,
                        pretrain_reg_loss, chosen_lambdas, keep_zero, a_init)


def train_end_to_end(labeled: Dataset, config: TrainConfig, d: int, r: int,
                     kind: str = models.LINEAR_AE,
                     test: Optional[Dataset] = None) -> TrainResult:
    """Jointly train (h, f) from a random representation init."""
    w0 = _init_w(d, r, RngStream(config.seed).substream(_SUB_INIT_W))
    return _fit_labeled(w0, kind, labeled, config, test, None, None,
                        keep_first_column_zero=False)


def train_func_reg(spec_kind: str, unlabeled: Dataset, labeled: Dataset,
                   config: TrainConfig, d: int, r: int,
                   test: Optional[Dataset] = None,
                   pretrained: Optional[PretrainResult] = None) -> TrainResult:
    """Full regularized pipeline: pretrain on U (unless supplied), finetune on S."""
    pre = pretrained or pretrain_unlabeled(spec_kind, unlabeled, config, d, r)
    if not pre.feasible:
        raise RuntimeError(
            f"regularization constraint infeasible: achieved {pre.reg_loss:.6g} "
            f"> tau {config.tau:.6g}")
    return finetune_labeled(pre.h, labeled, config, test,
                            pretrain_reg_loss=pre.reg_loss,
                            chosen_lambdas=pre.chosen_lambdas)
