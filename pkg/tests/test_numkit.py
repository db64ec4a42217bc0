import numpy as np
import pytest

from funcreg_lab.numkit import (RngStream, gaussian, procrustes_min_distance_sq,
                                random_orthonormal_basis, symmetric_eigen)


def test_gaussian_zero_variance_returns_mean():
    rng = RngStream(5)
    assert gaussian(rng, 0.0, 0.0) == 0.0
    assert gaussian(rng, 3.5, 0.0) == 3.5


def test_gaussian_negative_variance_rejected():
    with pytest.raises(ValueError):
        gaussian(RngStream(1), 0.0, -1e-9)


def test_gaussian_sample_mean_clt_band():
    # N(3, 4): std of the sample mean over 1e5 draws is 2/sqrt(1e5)
    rng = RngStream(123)
    n = 100_000
    draws = np.array([gaussian(rng, 3.0, 4.0) for _ in range(n)])
    assert abs(draws.mean() - 3.0) <= 3.0 * 2.0 / np.sqrt(n)


def test_equal_seeds_equal_streams():
    a = RngStream(42)
    b = RngStream(42)
    da = [gaussian(a, 0.0, 1.0) for _ in range(100)]
    db = [gaussian(b, 0.0, 1.0) for _ in range(100)]
    assert da == db


def test_derive_and_substream_differ():
    base = RngStream(7)
    assert RngStream(7).normal() == RngStream(7).normal()
    assert RngStream(7).derive(1).normal() != base.normal()
    assert RngStream(7).substream(1).normal() != RngStream(7).normal()


def test_orthonormal_basis_d1():
    b = random_orthonormal_basis(RngStream(0), 1)
    assert b.shape == (1, 1)
    assert abs(abs(b[0, 0]) - 1.0) <= 1e-12


@pytest.mark.parametrize("d", [2, 5, 50, 200])
def test_orthonormal_basis_orthonormality(d):
    b = random_orthonormal_basis(RngStream(d), d)
    assert np.abs(b.T @ b - np.eye(d)).max() <= 1e-10
    assert np.abs(np.linalg.norm(b, axis=0) - 1.0).max() <= 1e-10


def test_orthonormal_basis_rejects_zero_dim():
    with pytest.raises(ValueError):
        random_orthonormal_basis(RngStream(0), 0)


def test_symmetric_eigen_diagonal():
    w, v = symmetric_eigen(np.diag([4.0, 3.0, 2.0, 1.0]))
    assert np.allclose(w, [4, 3, 2, 1])
    assert np.allclose(np.abs(v), np.eye(4))


def test_symmetric_eigen_hand_case():
    w, _ = symmetric_eigen(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(w, [3.0, 1.0])


def test_symmetric_eigen_rotation_conjugation():
    rng = RngStream(11)
    rot = random_orthonormal_basis(rng, 6)
    diag = np.diag([9.0, 5.0, 4.0, 2.5, 1.0, 0.5])
    w, _ = symmetric_eigen(rot @ diag @ rot.T)
    assert np.abs(w - np.diag(diag)).max() <= 1e-8


def test_symmetric_eigen_eigenpairs_and_reconstruction():
    rng = RngStream(12)
    m = rng.normal(size=(20, 20))
    m = (m + m.T) / 2
    w, v = symmetric_eigen(m)
    scale = np.linalg.norm(m)
    assert np.linalg.norm(m @ v - v * w[None, :]) <= 1e-8 * scale
    assert np.linalg.norm(m - (v * w[None, :]) @ v.T) <= 1e-7 * scale
    assert np.abs(v.T @ v - np.eye(20)).max() <= 1e-10
    assert np.all(np.diff(w) <= 0)


def test_symmetric_eigen_rejects_bad_input():
    with pytest.raises(ValueError):
        symmetric_eigen(np.ones((2, 3)))
    with pytest.raises(ValueError):
        symmetric_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_procrustes_identical_is_zero():
    rng = RngStream(3)
    a = rng.normal(size=(4, 9))
    assert procrustes_min_distance_sq(a, a) <= 1e-9


def test_procrustes_rotated_copy_is_zero():
    rng = RngStream(4)
    a = rng.normal(size=(3, 8))
    o = random_orthonormal_basis(rng, 3)
    assert procrustes_min_distance_sq(a, o @ a) <= 1e-8


def test_procrustes_disjoint_index_rows():
    # orthonormal rows over disjoint index sets: singular values all vanish
    r, d = 3, 10
    basis = np.eye(d)
    a = basis[:r]
    b = basis[r : 2 * r]
    assert abs(procrustes_min_distance_sq(a, b) - 2 * r) <= 1e-9


def test_procrustes_shared_directions_formula():
    # sharing exactly k basis directions gives 2 (r - k)
    rng = RngStream(9)
    d, r = 12, 4
    basis = random_orthonormal_basis(rng, d)
    for k in range(r + 1):
        idx_a = list(range(r))
        idx_b = list(range(r - k, 2 * r - k))
        o1 = random_orthonormal_basis(rng, r)
        o2 = random_orthonormal_basis(rng, r)
        a = o1 @ basis[:, idx_a].T
        b = o2 @ basis[:, idx_b].T
        assert abs(procrustes_min_distance_sq(a, b) - 2 * (r - k)) <= 1e-6


def test_procrustes_agrees_with_angle_grid_oracle():
    # r=2: O(2) is rotations and reflections of one angle; sweep both branches
    rng = RngStream(21)
    a = rng.normal(size=(2, 6))
    b = rng.normal(size=(2, 6))

    thetas = np.linspace(0.0, 2 * np.pi, 200_001)
    c, s = np.cos(thetas), np.sin(thetas)
    best = np.inf
    for refl in (1.0, -1.0):
        # rows of O: [c, -refl*s], [s, refl*c]
        oa_top = c[:, None] * a[0] - refl * s[:, None] * a[1]
        oa_bot = s[:, None] * a[0] + refl * c[:, None] * a[1]
        dist = ((oa_top - b[0]) ** 2).sum(axis=1) + ((oa_bot - b[1]) ** 2).sum(axis=1)
        best = min(best, dist.min())
    assert abs(procrustes_min_distance_sq(a, b) - best) <= 1e-4


def test_procrustes_symmetry_and_shape_check():
    rng = RngStream(31)
    a = rng.normal(size=(3, 7))
    b = rng.normal(size=(3, 7))
    assert abs(procrustes_min_distance_sq(a, b)
               - procrustes_min_distance_sq(b, a)) <= 1e-9
    with pytest.raises(ValueError):
        procrustes_min_distance_sq(a, b[:2])


def test_procrustes_nonnegative_random():
    rng = RngStream(32)
    for _ in range(25):
        a = rng.normal(size=(3, 5))
        b = rng.normal(size=(3, 5))
        assert procrustes_min_distance_sq(a, b) >= 0.0
