"""Monte Carlo verification of the realizable finite-class guarantee.

Worlds are small enumerable domains with lookup-table hypothesis classes, so
population losses are exact sums and empirical losses are exact rationals.
A trial samples an unlabeled set U and a labeled set S at the calculator's
sizes, enumerates every (f, h) pair with zero empirical prediction loss whose
h also attains zero empirical regularization loss (minimized over g on the
sample), and reports a violation if any surviving pair has true prediction
error above eps1.  The guarantee promises violation probability at most delta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .bounds import BoundQuery, compute_bounds
from .numkit import RngStream

MAX_DOMAIN = 64


@dataclass
class FiniteWorld:
    """Enumerable domain with lookup-table classes H, F, G.

    ``hs`` maps x to a representation symbol, ``fs`` maps symbols to labels,
    ``gs`` maps symbols to reconstruction symbols.  Prediction loss is 0/1
    disagreement with ``labels``; regularization loss is 0/1 disagreement of
    g(h(x)) with ``reg_targets`` unless a real-valued ``reg_table`` (H, G, n)
    overrides it.  ``star`` indexes a (h*, f*, g*) triple that must achieve
    exactly zero population loss on the support (realizability).
    """

    distribution: np.ndarray
    labels: np.ndarray
    hs: np.ndarray
    fs: np.ndarray
    gs: np.ndarray
    reg_targets: np.ndarray
    star: Tuple[int, int, int]
    reg_table: Optional[np.ndarray] = None

    def __post_init__(self):
        self.distribution = np.asarray(self.distribution, dtype=float)
        n = len(self.distribution)
        if n > MAX_DOMAIN:
            raise ValueError(f"domain size {n} exceeds {MAX_DOMAIN}")
        if abs(self.distribution.sum() - 1.0) > 1e-12 or np.any(self.distribution < 0):
            raise ValueError("distribution must be a probability vector")
        self.labels = np.asarray(self.labels)
        self.hs = np.atleast_2d(np.asarray(self.hs))
        self.fs = np.atleast_2d(np.asarray(self.fs))
        self.gs = np.atleast_2d(np.asarray(self.gs))
        self.reg_targets = np.asarray(self.reg_targets)

        # 0/1 loss tables over the whole domain
        phi = self.hs  # (H, n)
        self.pred_table = (self.fs[:, phi] != self.labels[None, None, :]).astype(float)
        if self.reg_table is None:
            self.reg_table = (self.gs[:, phi] != self.reg_targets[None, None, :]) \
                .astype(float).transpose(1, 0, 2)  # (H, G, n)
        else:
            self.reg_table = np.asarray(self.reg_table, dtype=float)
            expected = (self.n_h, self.n_g, n)
            if self.reg_table.shape != expected:
                raise ValueError(f"reg_table shape {self.reg_table.shape} != {expected}")

        h_star, f_star, g_star = self.star
        if exact_loss(self, h_star, f=f_star) != 0.0:
            raise ValueError("starred (f*, h*) does not achieve zero prediction loss")
        if exact_loss(self, h_star, g=g_star) != 0.0:
            raise ValueError("starred (h*, g*) does not achieve zero regularization loss")

    @property
    def n_points(self) -> int:
        return len(self.distribution)

    @property
    def n_h(self) -> int:
        return self.hs.shape[0]

    @property
    def n_f(self) -> int:
        return self.fs.shape[0]

    @property
    def n_g(self) -> int:
        return self.gs.shape[0]


@dataclass
class TrialOutcome:
    violated: bool
    witnesses: List[Tuple[int, int]] = field(default_factory=list)


@dataclass
class Theorem1Report:
    trials: int
    violations: int
    frequency: float
    threshold: float
    passed: bool
    m_u: int
    m_l: int
    pruned_size: int
    sizes: Tuple[int, int, int]  # (|H|, |F|, |G|)
    eps0: float
    eps1: float
    delta: float


def exact_loss(world: FiniteWorld, h: int, f: Optional[int] = None,
               g: Optional[int] = None) -> float:
    """Population loss by full enumeration: prediction with f, or reg with g."""
    if (f is None) == (g is None):
        raise ValueError("give exactly one of f (prediction) or g (regularization)")
    if f is not None:
        per_x = world.pred_table[f, h]
    else:
        per_x = world.reg_table[h, g]
    return float(world.distribution @ per_x)


def reg_loss_of_h(world: FiniteWorld, h: int) -> float:
    """Population regularization loss of h: min over g in G."""
    return float(np.min(world.reg_table[h] @ world.distribution))


def pruned_subset(world: FiniteWorld, tau: float) -> List[int]:
    """Indices of h whose best-over-g population regularization loss is <= tau."""
    return [h for h in range(world.n_h) if reg_loss_of_h(world, h) <= tau]


def true_prediction_errors(world: FiniteWorld) -> np.ndarray:
    """(F, H) matrix of population prediction losses."""
    return world.pred_table @ world.distribution


def empirical_losses(world: FiniteWorld, u_counts: np.ndarray, s_counts: np.ndarray):
    """Empirical losses from sample histograms.

    Returns ``(reg_h, pred_fh)`` where ``reg_h[h]`` is the empirical
    regularization loss minimized over g on the unlabeled sample and
    ``pred_fh[f, h]`` the empirical prediction loss on the labeled sample.
    """
    m_u = u_counts.sum()
    m_l = s_counts.sum()
    reg_hg = world.reg_table @ (u_counts / m_u)
    pred_fh = world.pred_table @ (s_counts / m_l)
    return reg_hg.min(axis=1), pred_fh


def run_theorem1_trial(world: FiniteWorld, m_u: int, m_l: int, eps1: float,
                       rng: RngStream) -> TrialOutcome:
    """One sampled trial; labeled examples carry the ground-truth labels."""
    if m_u < 1 or m_l < 1:
        raise ValueError("sample sizes must be >= 1")
    n = world.n_points
    u_idx = rng.choice(n, size=m_u, p=world.distribution)
    s_idx = rng.choice(n, size=m_l, p=world.distribution)
    u_counts = np.bincount(u_idx, minlength=n).astype(float)
    s_counts = np.bincount(s_idx, minlength=n).astype(float)
    reg_h, pred_fh = empirical_losses(world, u_counts, s_counts)
    survivors = (pred_fh == 0.0) & (reg_h == 0.0)[None, :]
    bad = survivors & (true_prediction_errors(world) > eps1)
    if not bad.any():
        return TrialOutcome(False)
    fs, hs = np.nonzero(bad)
    return TrialOutcome(True, list(zip(fs.tolist(), hs.tolist())))


def theorem1_sample_sizes(world: FiniteWorld, eps0: float, eps1: float,
                          delta: float) -> Tuple[int, int, int]:
    """(m_u, m_l, pruned size) from the realizable finite-class calculator."""
    pruned = pruned_subset(world, eps0)
    q = BoundQuery(
        "thm1", eps0=eps0, eps1=eps1, delta=delta,
        ln_h=float(np.log(world.n_h)), ln_f=float(np.log(world.n_f)),
        ln_g=float(np.log(world.n_g)), ln_h_tau=float(np.log(len(pruned))))
    res = compute_bounds(q)
    return max(res.m_u, 1), max(res.m_l, 1), len(pruned)


def verify_theorem1(world: FiniteWorld, eps0: float, eps1: float, delta: float,
                    trials: int, rng: RngStream) -> Theorem1Report:
    """Violation frequency over independent trials at the calculator's sizes.

    Passes when the frequency is within three binomial standard errors of the
    promised delta.  Trials draw from per-trial derived substreams, so the
    result is independent of execution order.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    m_u, m_l, pruned_size = theorem1_sample_sizes(world, eps0, eps1, delta)
    violations = 0
    for t in range(trials):
        outcome = run_theorem1_trial(world, m_u, m_l, eps1, rng.substream(t + 1))
        violations += int(outcome.violated)
    frequency = violations / trials
    threshold = delta + 3.0 * np.sqrt(delta * (1.0 - delta) / trials)
    return Theorem1Report(
        trials=trials, violations=violations, frequency=frequency,
        threshold=float(threshold), passed=frequency <= threshold,
        m_u=m_u, m_l=m_l, pruned_size=pruned_size,
        sizes=(world.n_h, world.n_f, world.n_g),
        eps0=eps0, eps1=eps1, delta=delta)


# ---------------------------------------------------------------------------
# built-in worlds

def singleton_world() -> FiniteWorld:
    """H = {h*}, F = {f*}: no wrong hypothesis exists, violation rate 0."""
    hs = np.array([[0, 1, 0, 1]])
    fs = np.array([[0, 1]])
    gs = np.array([[0, 1]])
    labels = fs[0, hs[0]]
    targets = gs[0, hs[0]]
    return FiniteWorld(
        distribution=np.full(4, 0.25), labels=labels, hs=hs, fs=fs, gs=gs,
        reg_targets=targets, star=(0, 0, 0))


def coinflip_world() -> FiniteWorld:
    """Two equiprobable points; one extra predictor errs only on point 1.

    The bad pair survives a labeled sample exactly when point 1 never occurs,
    so the violation probability at eps1 < 1/2 is 2**(-m_l) in closed form.
    """
    hs = np.array([[0, 1]])                # h* is the identity
    fs = np.array([[0, 0], [0, 1]])        # f_good, f_bad
    gs = np.array([[0, 0]])                # reconstruction target is constant
    labels = np.array([0, 0])
    targets = np.array([0, 0])
    return FiniteWorld(
        distribution=np.array([0.5, 0.5]), labels=labels, hs=hs, fs=fs, gs=gs,
        reg_targets=targets, star=(0, 0, 0))


def random_realizable_world(rng: RngStream, n_points: int = 12, n_phi: int = 4,
                            n_h: int = 8, n_f: int = 8, n_g: int = 4,
                            n_labels: int = 2, n_targets: int = 3) -> FiniteWorld:
    """Random lookup tables; realizable by deriving labels and targets from a
    starred triple, so no rejection loop is needed."""
    if n_points > 16:
        raise ValueError("random worlds keep the domain small (<= 16)")
    hs = rng.integers(0, n_phi, size=(n_h, n_points))
    fs = rng.integers(0, n_labels, size=(n_f, n_phi))
    gs = rng.integers(0, n_targets, size=(n_g, n_phi))
    labels = fs[0, hs[0]]
    targets = gs[0, hs[0]]
    weights = rng.uniform(0.5, 1.5, size=n_points)
    return FiniteWorld(
        distribution=weights / weights.sum(), labels=labels,
        hs=hs, fs=fs, gs=gs, reg_targets=targets, star=(0, 0, 0))
