"""Hypothesis classes, losses, and analytic gradients.

Both architectures predict through a quadratic activation:

    linear_ae:    phi = W x,                 y_hat = sum_i a_i * phi_i^2
    masked_quad:  phi_i = (w_i^T x)^2,       y_hat = a^T phi

so the prediction is sum_i a_i (w_i^T x)^2 in either case; the kinds differ
in which regularization loss applies and in the masked constraint that the
first column of W stays zero.  The reconstruction regularizer decodes with a
linear map V; the masked regularizer sums the representation of the masked
input and compares it to the hidden first coordinate; an explicit lp penalty
on the representation is available as a fixed (non-learnable) regularizer.

Gradients are hand-derived and verified against central finite differences in
the test suite.  At the absolute-value kinks of the orthonormality penalty the
subgradient 0 is chosen (np.sign(0) == 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from .synthgen import Dataset, mask_first_coordinate

LINEAR_AE = "linear_ae"
MASKED_QUAD = "masked_quad"

REG_AE = "ae_reconstruction"
REG_MASKED = "masked_first_coord"
REG_LP = "lp_penalty"

NORM_SLACK = 1e-6  # tolerance on the unit-ball constraints after projection


@dataclass
class ReprMap:
    """Representation map h parameterized by W (r x d)."""

    kind: str
    W: np.ndarray

    def __post_init__(self):
        if self.kind not in (LINEAR_AE, MASKED_QUAD):
            raise ValueError(f"unknown representation kind {self.kind!r}")
        self.W = np.asarray(self.W, dtype=float)
        if self.W.ndim != 2:
            raise ValueError("W must be a matrix")

    @property
    def r(self) -> int:
        return self.W.shape[0]

    @property
    def d(self) -> int:
        return self.W.shape[1]


@dataclass
class Predictor:
    """Linear predictor f over the (activated) representation."""

    a: np.ndarray

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float).ravel()


@dataclass
class Decoder:
    """Linear decoder g parameterized by V (d x r)."""

    V: np.ndarray

    def __post_init__(self):
        self.V = np.asarray(self.V, dtype=float)
        if self.V.ndim != 2:
            raise ValueError("V must be a matrix")


@dataclass(frozen=True)
class LossSpec:
    """Which regularizer is active and how it enters the objective.

    Exactly one of ``tau`` (constrained mode: pretrain on the regularizer,
    accept only if the final loss clears the threshold) and
    ``penalty_weight`` (penalty mode: prediction loss + lambda * reg loss)
    must be set.  ``ortho_weights`` = (lambda1 on the decoder columns,
    lambda2 on the rows of W) add soft orthonormality penalties.
    """

    reg_kind: str
    tau: Optional[float] = None
    penalty_weight: Optional[float] = None
    ortho_weights: tuple = (0.0, 0.0)
    p: float = 2.0

    def __post_init__(self):
        if self.reg_kind not in (REG_AE, REG_MASKED, REG_LP):
            raise ValueError(f"unknown reg kind {self.reg_kind!r}")
        if (self.tau is None) == (self.penalty_weight is None):
            raise ValueError("exactly one of tau / penalty_weight must be set")
        if self.tau is not None and not 0.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [0, 1]")
        if self.penalty_weight is not None and self.penalty_weight < 0:
            raise ValueError("penalty weight must be >= 0")


@dataclass
class GradSet:
    """Gradients of one objective w.r.t. the trainable parameter blocks."""

    dW: np.ndarray
    dA: Optional[np.ndarray] = None
    dV: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# prediction

def _check_x(h: ReprMap, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != h.d:
        raise ValueError(f"input dimension {x.shape[-1]} != {h.d}")
    return x


def predict(h: ReprMap, f: Predictor, x: np.ndarray) -> float:
    """Prediction sum_i a_i (w_i^T x)^2 for a single input."""
    x = _check_x(h, x)
    if len(f.a) != h.r:
        raise ValueError(f"predictor length {len(f.a)} != representation rank {h.r}")
    z = h.W @ x
    return float(f.a @ (z * z))


def predict_batch(h: ReprMap, f: Predictor, inputs: np.ndarray) -> np.ndarray:
    inputs = _check_x(h, np.atleast_2d(inputs))
    if len(f.a) != h.r:
        raise ValueError(f"predictor length {len(f.a)} != representation rank {h.r}")
    z = inputs @ h.W.T
    return (z * z) @ f.a


def prediction_loss_batch(h: ReprMap, f: Predictor, batch: Dataset) -> float:
    """Mean squared prediction error over a labeled batch."""
    if not batch.labeled:
        raise ValueError("prediction loss needs a labeled dataset")
    if len(batch) == 0:
        raise ValueError("prediction loss needs a nonempty dataset")
    resid = predict_batch(h, f, batch.inputs) - batch.labels
    return float(np.mean(resid * resid))


def _prediction_grads(h, f, batch):
    n = len(batch)
    z = batch.inputs @ h.W.T
    resid = (z * z) @ f.a - batch.labels
    dA = (2.0 / n) * ((z * z).T @ resid)
    dW = (4.0 / n) * f.a[:, None] * ((z * resid[:, None]).T @ batch.inputs)
    return dW, dA


# ---------------------------------------------------------------------------
# regularization losses

def reg_loss_ae(h: ReprMap, g: Decoder, batch: Dataset) -> float:
    """Mean reconstruction error ||x - V W x||^2 over a batch."""
    x = _check_x(h, batch.inputs)
    resid = x - (x @ h.W.T) @ g.V.T
    return float(np.mean(np.sum(resid * resid, axis=1)))


def _ae_grads(h, g, batch):
    n = len(batch)
    x = batch.inputs
    phi = x @ h.W.T
    err = x - phi @ g.V.T
    dV = (-2.0 / n) * (err.T @ phi)
    dW = (-2.0 / n) * (g.V.T @ (err.T @ x))
    return dW, dV


def reg_loss_masked(h: ReprMap, batch: Dataset) -> float:
    """Mean (x_1 - sum_i (w_i^T x')^2)^2 with x' the masked input."""
    x = _check_x(h, batch.inputs)
    xm = mask_first_coordinate(x)
    z = xm @ h.W.T
    resid = np.sum(z * z, axis=1) - x[:, 0]
    return float(np.mean(resid * resid))


def _masked_grads(h, batch):
    n = len(batch)
    xm = mask_first_coordinate(batch.inputs)
    z = xm @ h.W.T
    resid = np.sum(z * z, axis=1) - batch.inputs[:, 0]
    dW = (4.0 / n) * ((z * resid[:, None]).T @ xm)
    return dW


def lp_penalty_loss(h: ReprMap, batch: Dataset, p: float) -> float:
    """Mean ||h(x)||_p^p of the representation over a batch."""
    x = _check_x(h, batch.inputs)
    z = x @ h.W.T
    phi = z * z if h.kind == MASKED_QUAD else z
    return float(np.mean(np.sum(np.abs(phi) ** p, axis=1)))


def _lp_grads(h, batch, p):
    n = len(batch)
    x = batch.inputs
    z = x @ h.W.T
    if h.kind == MASKED_QUAD:
        phi = z * z
        # d/dw_i: p phi^(p-1) * 2 (w_i^T x) x
        coef = p * np.power(phi, p - 1.0) * 2.0 * z
    else:
        coef = p * np.power(np.abs(z), p - 1.0) * np.sign(z)
    return (1.0 / n) * (coef.T @ x)


def orthonormal_penalty(m: np.ndarray) -> float:
    """Sum of |(M M^T)_ij - I_ij| pushing the rows of M toward orthonormality."""
    m = np.asarray(m, dtype=float)
    gram = m @ m.T
    return float(np.sum(np.abs(gram - np.eye(m.shape[0]))))


def _orthonormal_penalty_grad(m):
    s = np.sign(m @ m.T - np.eye(m.shape[0]))
    return 2.0 * (s @ m)


# ---------------------------------------------------------------------------
# combined objective and gradients

def _reg_weight(loss_spec: LossSpec) -> float:
    # constrained mode pretrains directly on the regularizer
    return 1.0 if loss_spec.penalty_weight is None else loss_spec.penalty_weight


def _validate_combo(h: ReprMap, g: Optional[Decoder], loss_spec: LossSpec) -> None:
    if loss_spec.reg_kind == REG_AE:
        if h.kind != LINEAR_AE:
            raise ValueError("reconstruction regularizer requires the linear_ae kind")
        if g is None:
            raise ValueError("reconstruction regularizer requires a decoder")
    if loss_spec.reg_kind == REG_MASKED and h.kind != MASKED_QUAD:
        raise ValueError("masked regularizer requires the masked_quad kind")


def total_objective(
    h: ReprMap,
    f: Optional[Predictor],
    g: Optional[Decoder],
    batch: Dataset,
    loss_spec: LossSpec,
) -> float:
    """Objective value: [prediction MSE] + weight * reg loss + ortho penalties."""
    _validate_combo(h, g, loss_spec)
    value = 0.0
    if f is not None and batch.labeled:
        value += prediction_loss_batch(h, f, batch)
    w = _reg_weight(loss_spec)
    if w != 0.0:
        if loss_spec.reg_kind == REG_AE:
            value += w * reg_loss_ae(h, g, batch)
        elif loss_spec.reg_kind == REG_MASKED:
            value += w * reg_loss_masked(h, batch)
        else:
            value += w * lp_penalty_loss(h, batch, loss_spec.p)
    lam1, lam2 = loss_spec.ortho_weights
    if lam1 != 0.0 and g is not None:
        value += lam1 * orthonormal_penalty(g.V.T)
    if lam2 != 0.0:
        value += lam2 * orthonormal_penalty(h.W)
    return value


def gradients(
    h: ReprMap,
    f: Optional[Predictor],
    g: Optional[Decoder],
    batch: Dataset,
    loss_spec: LossSpec,
) -> GradSet:
    """Analytic gradients of :func:`total_objective` w.r.t. W, a, V."""
    _validate_combo(h, g, loss_spec)
    dW = np.zeros_like(h.W)
    dA = None
    dV = None
    if f is not None and batch.labeled:
        dw_pred, dA = _prediction_grads(h, f, batch)
        dW += dw_pred
    w = _reg_weight(loss_spec)
    if w != 0.0:
        if loss_spec.reg_kind == REG_AE:
            dw_reg, dV = _ae_grads(h, g, batch)
            dW += w * dw_reg
            dV = w * dV
        elif loss_spec.reg_kind == REG_MASKED:
            dW += w * _masked_grads(h, batch)
        else:
            dW += w * _lp_grads(h, batch, loss_spec.p)
    lam1, lam2 = loss_spec.ortho_weights
    if lam1 != 0.0 and g is not None:
        dv_pen = lam1 * _orthonormal_penalty_grad(g.V.T).T
        dV = dv_pen if dV is None else dV + dv_pen
    if lam2 != 0.0:
        dW += lam2 * _orthonormal_penalty_grad(h.W)
    return GradSet(dW=dW, dA=dA, dV=dV)


def finite_diff_grad(
    objective: Callable[[Dict[str, np.ndarray]], float],
    params: Dict[str, np.ndarray],
    step: float = 1e-5,
) -> Dict[str, np.ndarray]:
    """Central finite differences of a scalar objective; test oracle only."""
    grads = {}
    for name, value in params.items():
        value = np.asarray(value, dtype=float)
        grad = np.zeros_like(value)
        flat = value.ravel()
        gflat = grad.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = objective(params)
            flat[i] = orig - step
            down = objective(params)
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * step)
        grads[name] = grad
    return grads


# ---------------------------------------------------------------------------
# checkpoints: one metadata line, then one labeled row per parameter block

def save_model(path: str, h: ReprMap, f: Optional[Predictor] = None,
               g: Optional[Decoder] = None) -> None:
    from .synthgen import atomic_write_text

    lines = [f"{h.kind},{h.d},{h.r}"]
    lines.append("W," + ",".join(f"{v:.17g}" for v in h.W.ravel()))
    if f is not None:
        lines.append("a," + ",".join(f"{v:.17g}" for v in f.a))
    if g is not None:
        lines.append("V," + ",".join(f"{v:.17g}" for v in g.V.ravel()))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_model(path: str):
    with open(path) as fh:
        kind, d, r = fh.readline().strip().split(",")
        d, r = int(d), int(r)
        h = f = g = None
        for line in fh:
            name, _, rest = line.strip().partition(",")
            values = np.array([float(v) for v in rest.split(",")])
            if name == "W":
                h = ReprMap(kind, values.reshape(r, d))
            elif name == "a":
                f = Predictor(values)
            elif name == "V":
                g = Decoder(values.reshape(d, r))
    if h is None:
        raise ValueError(f"checkpoint {path} has no W block")
    return h, f, g
