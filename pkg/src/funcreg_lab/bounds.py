"""Closed-form sample-complexity calculators.

Six variants are implemented, sharing one query/result pair:

  thm1  realizable, finite classes: raw log class sizes,
        m_u = (1/e0)[lnG + lnH + ln(2/delta)],
        m_l = (1/e1)[lnF + lnH_tau + ln(2/delta)].
  thm2  agnostic, infinite classes via metric entropy at radii eps/(4L):
        m_u = (C/e0^2) ln(1/delta) [lnN_G + lnN_H],
        m_l = (C/e1^2) ln(1/delta) [lnN_F + lnN_Hpruned].
  thm3  same formulas as thm2; the guaranteed error is eps_c + eps1
        instead of eps1 (nonzero best-in-class prediction loss).
  thm4  the different-domain variant; numerically identical to thm2 for
        the same entropy inputs (pruning threshold measured on the
        unlabeled distribution).
  thm5  realizable prediction with nonzero regularization loss:
        m_l scales with 1/e1 rather than 1/e1^2; pruning radius eps_r + eps0.
  thm6  VC-dimension variant:
        m_u = (C/e0^2)[d(GoH) ln(1/e0) + ln(1/delta)],
        m_l = (C/e1^2)[d(FoH_pruned) ln(1/e1) + ln(1/delta)].

The absolute constant C and the Lipschitz constant L are explicit inputs
(default 1) and are echoed in every result, so reported numbers are exactly
reproducible and honestly conditional on them.  The reduction column compares
against the same bound evaluated with the unpruned class capacity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from .synthgen import KIND_AUTO_ENCODER, KIND_MASKED

VARIANTS = ("thm1", "thm2", "thm3", "thm4", "thm5", "thm6")


@dataclass(frozen=True)
class BoundQuery:
    variant: str
    eps0: float
    eps1: float
    delta: float
    eps_r: float = 0.0
    eps_c: float = 0.0
    # thm1: natural logs of finite class sizes
    ln_h: Optional[float] = None
    ln_f: Optional[float] = None
    ln_g: Optional[float] = None
    ln_h_tau: Optional[float] = None
    # thm2..thm5: metric entropies at the stated radii
    ln_n_g: Optional[float] = None
    ln_n_h: Optional[float] = None
    ln_n_f: Optional[float] = None
    ln_n_h_pruned: Optional[float] = None
    # thm6: VC dimensions (vc_fh optional, only for the reduction column)
    vc_gh: Optional[float] = None
    vc_fh_pruned: Optional[float] = None
    vc_fh: Optional[float] = None
    C: float = 1.0
    L: float = 1.0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not 0.0 < self.eps0 < 0.5 or not 0.0 < self.eps1 < 0.5:
            raise ValueError("eps0 and eps1 must lie in (0, 1/2)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.eps_r < 0 or self.eps_c < 0:
            raise ValueError("eps_r and eps_c must be >= 0")
        if self.C <= 0 or self.L <= 0:
            raise ValueError("C and L must be > 0")
        for name in ("ln_h", "ln_f", "ln_g", "ln_h_tau", "ln_n_g", "ln_n_h",
                     "ln_n_f", "ln_n_h_pruned", "vc_gh", "vc_fh_pruned", "vc_fh"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass(frozen=True)
class BoundResult:
    variant: str
    m_u_raw: float
    m_l_raw: float
    m_u: int
    m_l: int
    reduction: float
    error_bound: float
    radii: Dict[str, float] = field(default_factory=dict)
    pruning_threshold: Optional[float] = None
    C: float = 1.0
    L: float = 1.0


def _require(query: BoundQuery, names) -> list:
    values = []
    for name in names:
        v = getattr(query, name)
        if v is None:
            raise ValueError(f"variant {query.variant} requires {name}")
        values.append(v)
    return values


def compute_bounds(q: BoundQuery) -> BoundResult:
    """Evaluate the selected bound; ceilings taken after the raw formulas."""
    ln2d = math.log(2.0 / q.delta)
    ln1d = math.log(1.0 / q.delta)

    if q.variant == "thm1":
        ln_h, ln_f, ln_g, ln_h_tau = _require(q, ("ln_h", "ln_f", "ln_g", "ln_h_tau"))
        m_u = (ln_g + ln_h + ln2d) / q.eps0
        m_l = (ln_f + ln_h_tau + ln2d) / q.eps1
        reduction = (ln_h - ln_h_tau) / q.eps1
        return _result(q, m_u, m_l, reduction, q.eps1, radii={},
                       pruning_threshold=q.eps0)

    if q.variant in ("thm2", "thm3", "thm4", "thm5"):
        ln_n_g, ln_n_h, ln_n_f, ln_n_hp = _require(
            q, ("ln_n_g", "ln_n_h", "ln_n_f", "ln_n_h_pruned"))
        radii = {"unlabeled": q.eps0 / (4.0 * q.L), "labeled": q.eps1 / (4.0 * q.L)}
        m_u = (q.C / q.eps0**2) * ln1d * (ln_n_g + ln_n_h)
        if q.variant == "thm5":
            labeled_factor = (q.C / q.eps1) * ln1d
            threshold = q.eps_r + q.eps0
            error_bound = q.eps1
        else:
            labeled_factor = (q.C / q.eps1**2) * ln1d
            threshold = q.eps_r + 2.0 * q.eps0
            error_bound = q.eps1 if q.variant == "thm2" else q.eps_c + q.eps1
        m_l = labeled_factor * (ln_n_f + ln_n_hp)
        reduction = labeled_factor * (ln_n_h - ln_n_hp)
        return _result(q, m_u, m_l, reduction, error_bound, radii, threshold)

    # thm6
    vc_gh, vc_fhp = _require(q, ("vc_gh", "vc_fh_pruned"))
    m_u = (q.C / q.eps0**2) * (vc_gh * math.log(1.0 / q.eps0) + ln1d)
    m_l = (q.C / q.eps1**2) * (vc_fhp * math.log(1.0 / q.eps1) + ln1d)
    if q.vc_fh is not None:
        reduction = (q.C / q.eps1**2) * (q.vc_fh - vc_fhp) * math.log(1.0 / q.eps1)
    else:
        reduction = 0.0
    return _result(q, m_u, m_l, reduction, q.eps_c + q.eps1, radii={},
                   pruning_threshold=q.eps_r + 2.0 * q.eps0)


def _result(q, m_u, m_l, reduction, error_bound, radii, pruning_threshold):
    return BoundResult(
        variant=q.variant,
        m_u_raw=m_u,
        m_l_raw=m_l,
        m_u=math.ceil(m_u),
        m_l=math.ceil(m_l),
        reduction=reduction,
        error_bound=error_bound,
        radii=radii,
        pruning_threshold=pruning_threshold,
        C=q.C,
        L=q.L,
    )


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k) via log-gamma; exact 0.0 at k in {0, n}."""
    if k < 0 or n < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    if k == 0 or k == n:
        return 0.0
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _check_example_args(kind: str, d: int, r: int) -> int:
    """Returns n for the choose(n, r) term of the example reduction."""
    if kind == KIND_AUTO_ENCODER:
        if not 0 <= r < d / 2:
            raise ValueError(f"reconstruction example needs r < d/2, got r={r}, d={d}")
        return d - r
    if kind == KIND_MASKED:
        if not 0 <= r < (d - 1) / 2:
            raise ValueError(f"masked example needs r < (d-1)/2, got r={r}, d={d}")
        return d - 1 - r
    raise ValueError(f"unknown example kind {kind!r}")


def example_reduction(kind: str, d: int, r: int, eps: float, C: float = 1.0) -> float:
    """Labeled-bound reduction (C/eps^2) ln C(d-r, r), masked: ln C(d-1-r, r)."""
    if eps <= 0:
        raise ValueError("eps must be > 0")
    n = _check_example_args(kind, d, r)
    return (C / eps**2) * log_binomial(n, r)


def reduction_vs_r(kind: str, d: int, eps: float, C: float, r_max: int) -> List[Tuple[int, float]]:
    """Table of (r, example reduction) for r = 1..r_max."""
    if r_max < 1:
        raise ValueError("r_max must be >= 1")
    _check_example_args(kind, d, r_max)  # every smaller r is then legal too
    return [(r, example_reduction(kind, d, r, eps, C)) for r in range(1, r_max + 1)]
