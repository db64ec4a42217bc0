import math

import numpy as np
import pytest

from funcreg_lab import synthgen as sg
from funcreg_lab.bounds import (BoundQuery, compute_bounds, example_reduction,
                                log_binomial, reduction_vs_r)

# pinned with a 40-digit log-gamma evaluation of ln C(70, 30)
LN_C_70_30 = 45.4601675021893925


def _thm1(ln_h, ln_h_tau, **kw):
    args = dict(variant="thm1", eps0=0.1, eps1=0.1, delta=0.05,
                ln_h=ln_h, ln_f=math.log(1024), ln_g=math.log(1024),
                ln_h_tau=ln_h_tau)
    args.update(kw)
    return BoundQuery(**args)


def test_thm1_golden_value():
    res = compute_bounds(_thm1(math.log(1024), math.log(1024)))
    assert abs(res.m_u_raw - 175.51823065312843) <= 1e-9
    assert res.m_u == 176
    assert res.m_l == 176
    assert res.reduction == 0.0


def test_thm1_no_pruning_no_reduction():
    res = compute_bounds(_thm1(math.log(512), math.log(512)))
    assert res.reduction == 0.0


def test_thm1_full_pruning_reduction():
    # |H_tau| = 1: the whole ln|H| term drops from the labeled bound
    res = compute_bounds(_thm1(math.log(1024), 0.0))
    assert abs(res.reduction - math.log(1024) / 0.1) <= 1e-9


def test_bound_query_validation():
    with pytest.raises(ValueError):
        _thm1(math.log(2), math.log(2), eps0=0.6)
    with pytest.raises(ValueError):
        _thm1(math.log(2), math.log(2), delta=0.0)
    with pytest.raises(ValueError):
        _thm1(math.log(2), -1.0)
    with pytest.raises(ValueError):
        BoundQuery(variant="thm9", eps0=0.1, eps1=0.1, delta=0.1)
    with pytest.raises(ValueError):
        compute_bounds(BoundQuery(variant="thm1", eps0=0.1, eps1=0.1, delta=0.1))


def _entropy_query(variant, **kw):
    args = dict(variant=variant, eps0=0.1, eps1=0.2, delta=0.05, eps_r=0.03,
                eps_c=0.01, ln_n_g=5.0, ln_n_h=11.0, ln_n_f=4.0,
                ln_n_h_pruned=6.0, C=2.0, L=3.0)
    args.update(kw)
    return BoundQuery(**args)


def test_thm2_formulas():
    res = compute_bounds(_entropy_query("thm2"))
    ln1d = math.log(1 / 0.05)
    assert abs(res.m_u_raw - (2.0 / 0.1**2) * ln1d * (5.0 + 11.0)) <= 1e-9
    assert abs(res.m_l_raw - (2.0 / 0.2**2) * ln1d * (4.0 + 6.0)) <= 1e-9
    assert abs(res.reduction - (2.0 / 0.2**2) * ln1d * (11.0 - 6.0)) <= 1e-9
    assert res.radii == {"unlabeled": 0.1 / 12.0, "labeled": 0.2 / 12.0}
    assert abs(res.pruning_threshold - (0.03 + 2 * 0.1)) <= 1e-15
    assert res.error_bound == 0.2


def test_thm3_matches_thm2_at_zero_eps_c():
    r2 = compute_bounds(_entropy_query("thm2", eps_c=0.0))
    r3 = compute_bounds(_entropy_query("thm3", eps_c=0.0))
    assert (r2.m_u_raw, r2.m_l_raw, r2.reduction, r2.error_bound) == \
           (r3.m_u_raw, r3.m_l_raw, r3.reduction, r3.error_bound)
    r3c = compute_bounds(_entropy_query("thm3", eps_c=0.05))
    assert r3c.error_bound == 0.05 + 0.2
    assert r3c.m_l_raw == r2.m_l_raw


def test_thm4_identical_to_thm2_on_same_entropies():
    r2 = compute_bounds(_entropy_query("thm2"))
    r4 = compute_bounds(_entropy_query("thm4"))
    assert r2.m_u_raw == r4.m_u_raw
    assert r2.m_l_raw == r4.m_l_raw
    assert r2.reduction == r4.reduction


def test_thm5_linear_eps1_dependence_and_radius():
    res = compute_bounds(_entropy_query("thm5"))
    ln1d = math.log(1 / 0.05)
    assert abs(res.m_l_raw - (2.0 / 0.2) * ln1d * (4.0 + 6.0)) <= 1e-9
    assert abs(res.pruning_threshold - (0.03 + 0.1)) <= 1e-15
    # unlabeled side keeps the 1/eps0^2 dependence
    assert abs(res.m_u_raw - (2.0 / 0.1**2) * ln1d * (5.0 + 11.0)) <= 1e-9


def test_thm6_vc_formulas():
    q = BoundQuery(variant="thm6", eps0=0.1, eps1=0.2, delta=0.05,
                   vc_gh=12.0, vc_fh_pruned=5.0, vc_fh=9.0, C=1.5)
    res = compute_bounds(q)
    assert abs(res.m_u_raw - (1.5 / 0.01) * (12.0 * math.log(10.0)
                                             + math.log(20.0))) <= 1e-9
    assert abs(res.m_l_raw - (1.5 / 0.04) * (5.0 * math.log(5.0)
                                             + math.log(20.0))) <= 1e-9
    assert abs(res.reduction - (1.5 / 0.04) * 4.0 * math.log(5.0)) <= 1e-9
    no_full = BoundQuery(variant="thm6", eps0=0.1, eps1=0.2, delta=0.05,
                         vc_gh=12.0, vc_fh_pruned=5.0)
    assert compute_bounds(no_full).reduction == 0.0


def test_bounds_monotonicity():
    base = compute_bounds(_entropy_query("thm2"))
    assert compute_bounds(_entropy_query("thm2", eps0=0.2)).m_u_raw < base.m_u_raw
    assert compute_bounds(_entropy_query("thm2", eps1=0.3)).m_l_raw < base.m_l_raw
    assert compute_bounds(_entropy_query("thm2", ln_n_h=12.0)).m_u_raw > base.m_u_raw
    assert compute_bounds(
        _entropy_query("thm2", ln_n_h_pruned=7.0)).m_l_raw > base.m_l_raw
    assert base.m_u >= base.m_u_raw
    assert base.m_l >= base.m_l_raw


def test_log_binomial_golden_values():
    assert log_binomial(40, 0) == 0.0
    assert log_binomial(40, 40) == 0.0
    assert abs(log_binomial(4, 2) - math.log(6)) <= 1e-15
    assert abs(log_binomial(70, 30) - LN_C_70_30) <= 1e-9
    with pytest.raises(ValueError):
        log_binomial(4, 5)
    with pytest.raises(ValueError):
        log_binomial(4, -1)


def test_log_binomial_symmetry_and_exactness():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(1, 200))
        k = int(rng.integers(0, n + 1))
        assert abs(log_binomial(n, k) - log_binomial(n, n - k)) <= 1e-12
        exact = math.log(math.comb(n, k))
        assert abs(log_binomial(n, k) - exact) <= 1e-12 * max(1.0, exact)


def test_example_reduction_values_and_identity():
    assert example_reduction(sg.KIND_AUTO_ENCODER, 40, 0, 0.1) == 0.0
    for d, r, eps, c in [(40, 8, 0.1, 1.0), (80, 12, 0.2, 2.5)]:
        ae = example_reduction(sg.KIND_AUTO_ENCODER, d, r, eps, c)
        assert abs(ae - (c / eps**2) * log_binomial(d - r, r)) <= 1e-12
        masked = example_reduction(sg.KIND_MASKED, d, r, eps, c)
        assert masked == example_reduction(sg.KIND_AUTO_ENCODER, d - 1, r, eps, c)


def test_example_reduction_weak_d_dependence():
    # doubling d at fixed r moves the reduction only logarithmically
    r, eps = 6, 0.1
    base = example_reduction(sg.KIND_AUTO_ENCODER, 60, r, eps)
    double = example_reduction(sg.KIND_AUTO_ENCODER, 120, r, eps)
    assert abs(double - base) / base <= (r * math.log(2) * 1.01) / (
        r * math.log((60 - r) / r))


def test_example_reduction_validation():
    with pytest.raises(ValueError):
        example_reduction(sg.KIND_AUTO_ENCODER, 40, 20, 0.1)
    with pytest.raises(ValueError):
        example_reduction(sg.KIND_MASKED, 41, 20, 0.1)
    with pytest.raises(ValueError):
        example_reduction(sg.KIND_AUTO_ENCODER, 40, 5, 0.0)


def test_reduction_vs_r_shape():
    table = reduction_vs_r(sg.KIND_AUTO_ENCODER, 100, 0.1, 1.0, 40)
    assert len(table) == 40
    assert [r for r, _ in table] == list(range(1, 41))
    values = [v for _, v in table]
    assert values[1] > values[0]  # r = 1 -> 2 strictly increases
    # increasing while the binomial ratio stays above 1; the turning point for
    # ln C(d - r, r) sits near 0.27 d, well inside the legal range
    for i in range(12):
        assert values[i + 1] > values[i]
    second = np.diff(values, 2)
    assert np.all(second[:38] <= 1e-9)  # concave over the whole table
    assert second[-1] < 0.0


def test_reduction_vs_r_validation():
    with pytest.raises(ValueError):
        reduction_vs_r(sg.KIND_AUTO_ENCODER, 100, 0.1, 1.0, 0)
    with pytest.raises(ValueError):
        reduction_vs_r(sg.KIND_AUTO_ENCODER, 100, 0.1, 1.0, 50)
