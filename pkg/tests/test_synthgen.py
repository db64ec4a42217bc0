import numpy as np
import pytest

from funcreg_lab import synthgen as sg
from funcreg_lab.numkit import RngStream, symmetric_eigen


def test_auto_encoder_spec_invariants():
    spec = sg.gen_auto_encoder_spec(RngStream(1), d=100, r=30)
    v = spec.spectrum.variances
    assert spec.basis.shape == (100, 100)
    assert np.abs(spec.basis.T @ spec.basis - np.eye(100)).max() <= 1e-10
    assert v[29] >= 1.0 > 0.1 >= v[30]
    assert np.all(np.diff(v) < 0)
    assert abs(np.linalg.norm(spec.a_star) - 1.0) <= 1e-12
    means = spec.spectrum.means
    assert np.all(means == np.round(means))
    assert means.min() >= 0 and means.max() <= 20


def test_smallest_legal_auto_encoder_spec():
    spec = sg.gen_auto_encoder_spec(RngStream(2), d=4, r=1)
    assert spec.d == 4 and spec.r == 1


def test_auto_encoder_spec_rejects_large_r():
    with pytest.raises(ValueError):
        sg.gen_auto_encoder_spec(RngStream(0), d=100, r=60)
    with pytest.raises(ValueError):
        sg.gen_auto_encoder_spec(RngStream(0), d=100, r=50)


def test_spec_determinism():
    a = sg.gen_auto_encoder_spec(RngStream(9), d=20, r=5)
    b = sg.gen_auto_encoder_spec(RngStream(9), d=20, r=5)
    assert np.array_equal(a.basis, b.basis)
    assert np.array_equal(a.spectrum.variances, b.spectrum.variances)
    assert np.array_equal(a.spectrum.means, b.spectrum.means)
    assert np.array_equal(a.a_star, b.a_star)


def test_signal_block_shared_across_d():
    # equal seeds pin the signal block of the world across ambient dimensions
    a = sg.gen_auto_encoder_spec(RngStream(3), d=20, r=5)
    b = sg.gen_auto_encoder_spec(RngStream(3), d=40, r=5)
    assert np.array_equal(a.spectrum.variances[:5], b.spectrum.variances[:5])
    assert np.array_equal(a.a_star, b.a_star)


def test_sampling_determinism_bitwise():
    spec = sg.gen_auto_encoder_spec(RngStream(5), d=12, r=3)
    d1 = sg.sample_auto_encoder_data(spec, 50, RngStream(77), labeled=True)
    d2 = sg.sample_auto_encoder_data(spec, 50, RngStream(77), labeled=True)
    assert np.array_equal(d1.inputs, d2.inputs)
    assert np.array_equal(d1.labels, d2.labels)


def test_sample_kind_and_count_validation():
    spec = sg.gen_auto_encoder_spec(RngStream(5), d=12, r=3)
    with pytest.raises(ValueError):
        sg.sample_masked_data(spec, 10, RngStream(0), labeled=False)
    with pytest.raises(ValueError):
        sg.sample_auto_encoder_data(spec, 0, RngStream(0), labeled=False)


def test_forced_coefficients_label():
    # single active coordinate: x = 2 u_1, y = a*_1 * 4 with a* = e_1, no noise
    spec = sg.gen_auto_encoder_spec(RngStream(6), d=8, r=2, zero_mean=True,
                                    noise_variance=0.0)
    spec = sg.DataSpec(spec.kind, spec.d, spec.r, spec.basis, spec.spectrum,
                       np.array([1.0, 0.0]), 0.0, True)
    alpha = np.zeros(8)
    alpha[0] = 2.0
    y = sg.labels_from_coefficients(spec, alpha)
    assert abs(y[0] - 4.0) <= 1e-15
    x = sg.inputs_from_coefficients(spec, alpha)
    assert np.allclose(x[0], 2.0 * spec.basis[:, 0])


def test_empirical_covariance_matches_spectrum():
    spec = sg.gen_auto_encoder_spec(RngStream(8), d=20, r=5, zero_mean=True)
    data = sg.sample_auto_encoder_data(spec, 100_000, RngStream(80), labeled=False)
    cov = data.inputs.T @ data.inputs / len(data)
    w, _ = symmetric_eigen(cov)
    top = spec.spectrum.variances[:5]
    assert np.abs(w[:5] - top).max() <= 0.05 * top.min()


def test_reconstruction_loss_matches_trailing_variance():
    spec = sg.gen_auto_encoder_spec(RngStream(13), d=20, r=5, zero_mean=True)
    data = sg.sample_auto_encoder_data(spec, 100_000, RngStream(81), labeled=False)
    proj = spec.basis[:, :5] @ spec.basis[:, :5].T
    resid = data.inputs - data.inputs @ proj.T
    emp = np.mean(np.sum(resid**2, axis=1))
    exact = sg.analytic_trailing_variance(spec, 5)
    assert abs(emp - exact) <= 0.05 * exact


def test_masked_spec_and_first_coordinate():
    spec = sg.gen_masked_spec(RngStream(21), d=100, r=30, zero_mean=True)
    assert spec.basis.shape == (99, 99)
    data = sg.sample_masked_data(spec, 10_000, RngStream(82), labeled=False)
    assert np.all(data.inputs[:, 0] >= 0.0)  # sum of squares


def test_masked_forced_coefficients():
    spec = sg.gen_masked_spec(RngStream(22), d=12, r=4, zero_mean=True)
    alpha = np.zeros(11)
    alpha[:4] = 1.0
    x = sg.inputs_from_coefficients(spec, alpha)
    assert x[0, 0] == 4.0  # first coordinate is the sum of squared signals


def test_masked_rejects_large_r():
    with pytest.raises(ValueError):
        sg.gen_masked_spec(RngStream(0), d=11, r=5)


def test_masked_ground_truth_zero_reg_loss():
    # h rows [0, u_i*] with the summing decoder reconstruct x_1 exactly
    spec = sg.gen_masked_spec(RngStream(23), d=20, r=5, zero_mean=True)
    data = sg.sample_masked_data(spec, 2_000, RngStream(83), labeled=False)
    xm = sg.mask_first_coordinate(data.inputs)
    w = np.concatenate([np.zeros((5, 1)), spec.basis[:, :5].T], axis=1)
    recon = np.sum((xm @ w.T) ** 2, axis=1)
    per_sample = (recon - data.inputs[:, 0]) ** 2
    assert per_sample.max() <= 1e-18


def test_mask_first_coordinate():
    assert np.array_equal(sg.mask_first_coordinate(np.array([5.0, 1.0, 2.0])),
                          np.array([0.0, 1.0, 2.0]))
    x = np.array([0.0, 1.0, 2.0])
    assert np.array_equal(sg.mask_first_coordinate(x), x)
    twice = sg.mask_first_coordinate(sg.mask_first_coordinate(np.array([3.0, 4.0])))
    assert np.array_equal(twice, np.array([0.0, 4.0]))
    with pytest.raises(ValueError):
        sg.mask_first_coordinate(np.array([1.0]))


def test_trailing_variance():
    # oracle: the sum of the variances past the first k, computed by slicing
    spectrum = sg.SpectrumSpec(
        means=np.zeros(6),
        variances=np.array([4.0, 3.0, 0.08, 0.06, 0.04, 0.02]),
        gap_index=2)
    basis = np.eye(6)
    spec = sg.DataSpec(sg.KIND_AUTO_ENCODER, 6, 2, basis, spectrum,
                       np.array([1.0, 0.0]), 0.0, True)
    assert abs(sg.analytic_trailing_variance(spec, 2) - 0.2) <= 1e-15
    assert sg.analytic_trailing_variance(spec, 6) == 0.0
    assert abs(sg.analytic_trailing_variance(spec, 0) - 7.2) <= 1e-15
    gen = sg.gen_auto_encoder_spec(RngStream(31), d=8, r=2, zero_mean=True)
    for k in range(9):
        expect = float(np.sum(gen.spectrum.variances[k:]))
        assert sg.analytic_trailing_variance(gen, k) == expect


def test_trailing_variance_requires_zero_mean():
    spec = sg.gen_auto_encoder_spec(RngStream(32), d=8, r=2, zero_mean=False)
    with pytest.raises(ValueError):
        sg.analytic_trailing_variance(spec, 2)


def test_dataset_csv_round_trip(tmp_path):
    spec = sg.gen_auto_encoder_spec(RngStream(41), d=6, r=2)
    data = sg.sample_auto_encoder_data(spec, 20, RngStream(84), labeled=True)
    path = str(tmp_path / "data.csv")
    sg.write_dataset_csv(data, path)
    back = sg.read_dataset_csv(path)
    assert np.array_equal(back.inputs, data.inputs)
    assert np.array_equal(back.labels, data.labels)
    header = open(path).readline().strip()
    assert header == ",".join([f"x_{i}" for i in range(6)] + ["y"])


def test_dataset_prefix():
    spec = sg.gen_auto_encoder_spec(RngStream(42), d=6, r=2)
    data = sg.sample_auto_encoder_data(spec, 30, RngStream(85), labeled=True)
    sub = data.prefix(10)
    assert len(sub) == 10
    assert np.array_equal(sub.inputs, data.inputs[:10])
